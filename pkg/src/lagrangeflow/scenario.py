"""Scenario configs and the pipelines behind ``lagrangeflow run``.

A scenario is a JSON document validated against ``scenario.schema.json``.
Each pipeline runs its solvers, writes ``solution_*.csv`` plus JSON side
files, and returns a list of :class:`Check` records that end up in
``report.json``.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np

from . import export
from .catalog import flux_from_config, pressure_from_config, profile_from_config
from .errors import ConfigError
from .eulerian import DEFAULT_CFL, riemann_exact, solve
from .flowmap import extend_reference_mesh, lagrangian_density, mixed_partial_residual, reconstruct
from .flux import (FluxSpec, breakdown_time, flux_from_potential, normalize, potential_from_flux,
                   velocity_law)
from .grid import CONSTANT, PERIODIC, GridFunction, uniform_grid
from .numerics import observed_order
from .oracles import characteristics_density
from .systems import (GAS, NLWE, euler_lagrange_residual, hyperbolicity_check, init_system,
                      solve_system, system_extremality, system_first_variation)
from .temple import ETA_MIN, init_temple, solve_temple
from .variational import (SEED, PerturbationField, SpacetimeMap, action_value, action_value_image,
                          conserved_quantity_residual, extremality_study, first_variation,
                          transport_coefficient_check)

PIPELINES = ("eulerian", "temple", "correspondence", "variational", "gas", "nlwe", "metric-roundtrip")
MIN_N = 16
DENSE_SAMPLES = 8193
HYPERBOLICITY_SAMPLES = 1000
ROUNDTRIP_SAMPLES = 100
_STUDY_KEYS = ("epsilon", "extremal_derivative", "control_derivative", "ratio")

# default bound and relation of every check a pipeline may emit
_HYGIENE = {
    "eulerian_mass_drift": (1e-12, "<="),
    "eulerian_tv_increase": (1e-12, "<="),
    "eulerian_extrema_excess": (1e-12, "<="),
}
_TEMPLE = {
    "temple_v_bit_invariant": (0.0, "<="),
    "temple_stretch_drift": (1e-12, "<="),
    "temple_eta_min": (ETA_MIN, ">"),
    "flow_map_min_slope": (0.0, ">"),
}
CHECKS: dict[str, dict[str, tuple[float, str]]] = {
    "eulerian": {**_HYGIENE, "riemann_l1": (0.02, "<="), "characteristics_l1_cells": (5.0, "<=")},
    "temple": dict(_TEMPLE),
    "correspondence": {
        **_HYGIENE, **_TEMPLE,
        "l1_correspondence": (0.02, "<="),
        "correspondence_ratio": (1.5, ">="),
        "shock_position_eulerian_cells": (2.0, "<="),
        "shock_position_lagrangian_cells": (2.0, "<="),
        "characteristics_l1_eulerian_cells": (5.0, "<="),
        "characteristics_l1_lagrangian_cells": (5.0, "<="),
    },
    "variational": {
        "temple_v_bit_invariant": (0.0, "<="),
        "temple_stretch_drift": (1e-12, "<="),
        "conserved_residual_order": (0.8, ">="),
        "action_forms_rel_cells": (1.0, "<="),
        "extremality_ratio": (10.0, ">="),
        "zero_perturbation": (0.0, "<="),
    },
    "gas": {
        "eta_drift": (1e-12, "<="),
        "w_drift": (1e-12, "<="),
        "v_bit_invariant": (0.0, "<="),
        "el_residual_order": (0.8, ">="),
        "extremality_ratio": (10.0, ">="),
        "zero_perturbation": (0.0, "<="),
    },
    "metric-roundtrip": {
        "b_integral_consistency": (1e-6, "<="),
        "inversion_identity": (1e-9, "<="),
        "flux_roundtrip": (1e-8, "<="),
        "transport_coefficients": (1e-8, "<="),
        "velocity_min": (0.0, ">"),
        "velocity_min_increment": (0.0, ">"),
    },
}
CHECKS["nlwe"] = {**CHECKS["gas"], "hyperbolicity_identity": (1e-12, "<="),
                  "dalembert_rel_l2": (1e-2, "<=")}

# optional keys each pipeline understands; anything else is rejected
_COMMON = {"name", "pipeline", "grid", "initial", "tolerances", "output_dir", "cfl", "T",
           "breakdown_fraction"}
_SCALAR = _COMMON | {"flux"}
_SPACETIME = {"n_output", "refinement_levels", "perturbations", "seed"}
KEYS = {
    "eulerian": _SCALAR | {"times"},
    "temple": _SCALAR | {"times"},
    "correspondence": _SCALAR | {"times", "refinement_levels"},
    "variational": _SCALAR | _SPACETIME,
    "gas": (_COMMON - {"breakdown_fraction"}) | _SPACETIME | {"pressure", "velocity"},
    "nlwe": (_COMMON - {"breakdown_fraction"}) | _SPACETIME | {"pressure", "velocity"},
    "metric-roundtrip": {"name", "pipeline", "grid", "initial", "tolerances", "output_dir", "flux"},
}
REQUIRED = {
    "gas": ("pressure", "velocity"),
    "nlwe": ("pressure", "velocity"),
}


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    relation: str

    @property
    def passed(self) -> bool:
        v, b = float(self.value), float(self.bound)
        if math.isnan(v):
            return False
        if self.relation == "<=":
            return v <= b
        if self.relation == ">=":
            return v >= b
        if self.relation == ">":
            return v > b
        raise ValueError(f"unknown relation {self.relation!r}")

    def as_dict(self) -> dict:
        return {"name": self.name, "value": float(self.value), "bound": float(self.bound),
                "relation": self.relation, "pass": self.passed}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} = {float(self.value):.6g} ({self.relation} {float(self.bound):.6g})"


@dataclass
class Scenario:
    """A validated scenario config with the derived quantities every pipeline needs."""

    config: dict
    source: Path | None = None

    @property
    def name(self) -> str:
        return self.config["name"]

    @property
    def pipeline(self) -> str:
        return self.config["pipeline"]

    @property
    def N(self) -> int:
        return int(self.config["grid"]["N"])

    @property
    def domain(self) -> tuple[float, float]:
        a, b = self.config["grid"]["domain"]
        return float(a), float(b)

    @property
    def boundary(self) -> str:
        return self.config["grid"].get("boundary", PERIODIC)

    @property
    def cfl(self) -> float:
        return float(self.config.get("cfl", DEFAULT_CFL))

    @property
    def levels(self) -> int:
        return int(self.config.get("refinement_levels", 1))

    @property
    def seed(self) -> int:
        return int(self.config.get("seed", SEED))

    @property
    def perturbations(self) -> int:
        return int(self.config.get("perturbations", 20))

    def n_output(self, level: int = 0) -> int:
        return int(self.config.get("n_output", max(2, self.N // 5))) * 2 ** level

    def profile(self, key: str = "initial") -> Callable:
        return profile_from_config(self.config[key], key)

    def bound(self, check: str) -> float:
        return float(self.config.get("tolerances", {}).get(check, CHECKS[self.pipeline][check][0]))

    def check(self, name: str, value: float) -> Check:
        return Check(name, float(value), self.bound(name), CHECKS[self.pipeline][name][1])


def schema() -> dict:
    text = resources.files("lagrangeflow").joinpath("scenario.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _error_path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate_config(config: dict) -> None:
    """Schema validation plus the cross-field rules the schema cannot express."""
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(config), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        raise ConfigError(f"{_error_path(err)}: {err.message}")
    pipeline = config["pipeline"]
    unused = sorted(set(config) - KEYS[pipeline])
    if unused:
        raise ConfigError(f"key {unused[0]!r} is not used by the {pipeline!r} pipeline")
    for key in REQUIRED.get(pipeline, ("flux",)):
        if key not in config:
            raise ConfigError(f"the {pipeline!r} pipeline requires {key!r}")
    if config["grid"]["N"] < MIN_N:
        raise ConfigError(f"grid/N: {config['grid']['N']} is below the minimum {MIN_N}")
    a, b = config["grid"]["domain"]
    if not b > a:
        raise ConfigError("grid/domain: need domain[0] < domain[1]")
    known = CHECKS[pipeline]
    for key in sorted(config.get("tolerances", {})):
        if key not in known:
            raise ConfigError(f"tolerances: unknown check {key!r} for the {pipeline!r} pipeline "
                              f"(known: {', '.join(sorted(known))})")
    if "T" in config and "breakdown_fraction" in config:
        raise ConfigError("give either 'T' or 'breakdown_fraction', not both")
    if pipeline != "metric-roundtrip" and "T" not in config and "breakdown_fraction" not in config:
        raise ConfigError("one of 'T' or 'breakdown_fraction' is required")
    if pipeline in ("variational", "gas", "nlwe") and config["grid"].get("boundary", PERIODIC) != PERIODIC:
        raise ConfigError(f"the {pipeline!r} pipeline needs a periodic grid")
    flux = config.get("flux")
    if flux is not None and ("name" in flux) == ("polynomial" in flux):
        raise ConfigError("flux: give exactly one of 'name' or 'polynomial'")
    for key in ("initial", "velocity"):
        if key in config:
            profile_from_config(config[key], key)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        config = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    return scenario_from_dict(config, path)


def scenario_from_dict(config: dict, source: Path | None = None) -> Scenario:
    if not isinstance(config, dict):
        raise ConfigError("a scenario must be a JSON object")
    validate_config(config)
    return Scenario(config, source)


# ---------------------------------------------------------------- shared helpers

def _wrapped(sc: Scenario, func: Callable) -> Callable:
    """Extend a profile beyond the window: periodically, or by clamping to the ends."""
    a, b = sc.domain
    if sc.boundary == PERIODIC:
        return lambda x: func(a + np.mod(np.asarray(x, dtype=float) - a, b - a))
    return lambda x: func(np.clip(np.asarray(x, dtype=float), a, b))


def _raw_range(sc: Scenario, key: str = "initial") -> tuple[float, float]:
    x = np.linspace(*sc.domain, DENSE_SAMPLES)
    vals = np.asarray(sc.profile(key)(x), dtype=float)
    return float(np.min(vals)), float(np.max(vals))


def build_flux(sc: Scenario) -> FluxSpec:
    cfg = sc.config["flux"]
    f, fp, name = flux_from_config(cfg)
    kw = {k: float(cfg[k]) for k in ("L", "K", "margin") if k in cfg}
    return normalize(f, fp, _raw_range(sc), name=name, **kw)


def initial_grid(sc: Scenario, spec: FluxSpec, n: int) -> GridFunction:
    prof = sc.profile()
    return uniform_grid(n, sc.domain, lambda x: spec.from_raw(prof(x)), sc.boundary)


def final_time(sc: Scenario, spec: FluxSpec | None = None) -> float:
    if "T" in sc.config:
        return float(sc.config["T"])
    t_star = breakdown_time(spec, initial_grid(sc, spec, DENSE_SAMPLES - 1))
    if not math.isfinite(t_star):
        raise ConfigError("breakdown_fraction: characteristics never cross for this datum; give 'T'")
    return float(sc.config["breakdown_fraction"]) * t_star


def output_times(sc: Scenario, T: float) -> list[float]:
    ts = [float(t) for t in sc.config.get("times", [])]
    bad = [t for t in ts if t > T]
    if bad:
        raise ConfigError(f"times: {bad[0]:g} lies outside [0, T={T:g}]")
    return ts


def uniform_times(sc: Scenario, T: float, level: int) -> list[float]:
    return list(np.linspace(0.0, T, sc.n_output(level) + 1))


def _smooth_before_breakdown(sc: Scenario, spec: FluxSpec, T: float) -> bool:
    if sc.config["initial"]["profile"] == "riemann":
        return False
    return T < breakdown_time(spec, initial_grid(sc, spec, DENSE_SAMPLES - 1))


def _characteristics(sc: Scenario, spec: FluxSpec, centers: np.ndarray, t: float) -> np.ndarray:
    prof = _wrapped(sc, sc.profile())
    return characteristics_density(spec.speed, lambda x: spec.from_raw(prof(x)), centers, t)


def _shock_speed(sc: Scenario, spec: FluxSpec) -> float | None:
    """Rankine-Hugoniot speed if the Riemann datum is a single admissible shock."""
    init = sc.config["initial"]
    if init["profile"] != "riemann":
        return None
    rl, rr = spec.from_raw(float(init["left"])), spec.from_raw(float(init["right"]))
    if rl == rr:
        return None
    a = np.linspace(min(rl, rr), max(rl, rr), 257)
    c = spec.speed(a)
    monotone = np.all(np.diff(c) > 0) or np.all(np.diff(c) < 0)
    if not monotone or not spec.speed(rl) > spec.speed(rr):
        return None
    return float((spec.flux(rl) - spec.flux(rr)) / (rl - rr))


def crossing(x: np.ndarray, values: np.ndarray, level: float, near: float) -> float:
    """Location closest to ``near`` where piecewise-linear ``values`` crosses ``level``."""
    d = np.asarray(values, dtype=float) - level
    idx = np.nonzero(d[:-1] * d[1:] <= 0)[0]
    idx = idx[d[idx] != d[idx + 1]]
    if idx.size == 0:
        return math.inf
    pos = x[idx] + (x[idx + 1] - x[idx]) * d[idx] / (d[idx] - d[idx + 1])
    return float(pos[np.argmin(np.abs(pos - near))])


def _l1(a: np.ndarray, b: np.ndarray, dx: float, length: float) -> float:
    return float(np.sum(np.abs(a - b)) * dx / length)


def _bit_changes(arrays, ref: np.ndarray) -> int:
    return sum(1 for a in arrays if a.tobytes() != ref.tobytes())


def _max_velocity(vel, spec: FluxSpec) -> float:
    a = np.linspace(*spec.data_range, 257)
    return float(np.max(np.abs(vel.F(a))))


def _orders(values) -> list[float]:
    return [float(o) for o in observed_order(values)] if len(values) > 1 else []


@dataclass
class Outcome:
    checks: list[Check] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)


# ---------------------------------------------------------------- pipelines

def _hygiene(sc: Scenario, traj, out: Outcome) -> None:
    if sc.boundary == PERIODIC:
        out.checks.append(sc.check("eulerian_mass_drift", traj.mass_drift))
    out.checks.append(sc.check("eulerian_tv_increase", traj.tv_increase))
    out.checks.append(sc.check("eulerian_extrema_excess", traj.extrema_excess))


def _temple_checks(sc: Scenario, traj, maps, out: Outcome) -> None:
    v0 = traj.states[0].v.values
    out.checks.append(sc.check("temple_v_bit_invariant", _bit_changes([s.v.values for s in traj.states], v0)))
    if sc.boundary == PERIODIC:
        out.checks.append(sc.check("temple_stretch_drift", traj.stretch_drift))
    if "temple_eta_min" in CHECKS[sc.pipeline]:
        out.checks.append(sc.check("temple_eta_min", min(float(np.min(s.eta.values)) for s in traj.states)))
        out.checks.append(sc.check("flow_map_min_slope", min(float(np.min(np.diff(m.gamma))) for m in maps)))


def run_eulerian(sc: Scenario, out_dir: Path) -> Outcome:
    out = Outcome()
    spec = build_flux(sc)
    T = final_time(sc, spec)
    rho0 = initial_grid(sc, spec, sc.N)
    traj = solve(spec, rho0, T, sc.cfl, output_times(sc, T))
    _hygiene(sc, traj, out)
    final = traj.snapshots[-1]
    init = sc.config["initial"]
    if init["profile"] == "riemann":
        xj = float(init.get("x_jump", 0.0))
        exact = riemann_exact(spec, spec.from_raw(float(init["left"])), spec.from_raw(float(init["right"])),
                              (final.centers - xj) / T)
        out.checks.append(sc.check("riemann_l1", _l1(final.values, exact, final.dx, final.length)))
    elif _smooth_before_breakdown(sc, spec, T):
        ref = _characteristics(sc, spec, final.centers, T)
        out.checks.append(sc.check("characteristics_l1_cells",
                                   _l1(final.values, ref, final.dx, final.length) / final.dx))
    export.eulerian_csv(out_dir / "solution_eulerian.csv", traj, spec.to_raw)
    out.artifacts.append("solution_eulerian.csv")
    return out


def _temple_run(sc: Scenario, spec: FluxSpec, n: int, T: float, times):
    vel = velocity_law(spec)
    rho0 = initial_grid(sc, spec, n)
    ref = extend_reference_mesh(rho0, _max_velocity(vel, spec), T)
    traj = solve_temple(init_temple(vel, ref), T, sc.cfl, times)
    return vel, traj, reconstruct(traj, vel)


def run_temple(sc: Scenario, out_dir: Path) -> Outcome:
    out = Outcome()
    spec = build_flux(sc)
    T = final_time(sc, spec)
    _, traj, maps = _temple_run(sc, spec, sc.N, T, output_times(sc, T))
    _temple_checks(sc, traj, maps, out)
    export.temple_csv(out_dir / "solution_temple.csv", traj)
    export.flowmap_csv(out_dir / "solution_flowmap.csv", maps)
    out.artifacts += ["solution_temple.csv", "solution_flowmap.csv"]
    return out


def run_correspondence(sc: Scenario, out_dir: Path) -> Outcome:
    out = Outcome()
    spec = build_flux(sc)
    T = final_time(sc, spec)
    times = output_times(sc, T)
    smooth = _smooth_before_breakdown(sc, spec, T)
    shock = _shock_speed(sc, spec)
    records, final_errors = [], []
    worst: dict[str, float] = {}

    def keep(name, value):
        worst[name] = max(worst.get(name, -math.inf), float(value))

    for level in range(sc.levels):
        n = sc.N * 2 ** level
        rho0 = initial_grid(sc, spec, n)
        eul = solve(spec, rho0, T, sc.cfl, times)
        vel, traj, maps = _temple_run(sc, spec, n, T, times)
        if sc.boundary == PERIODIC:
            keep("eulerian_mass_drift", eul.mass_drift)
            keep("temple_stretch_drift", traj.stretch_drift)
        keep("eulerian_tv_increase", eul.tv_increase)
        keep("eulerian_extrema_excess", eul.extrema_excess)
        v0 = traj.states[0].v.values
        keep("temple_v_bit_invariant", _bit_changes([s.v.values for s in traj.states], v0))
        lag_blocks = []
        for t, snap, state, fmap in zip(eul.times, eul.snapshots, traj.states, maps):
            lag = lagrangian_density(state, fmap, snap.centers)
            err = _l1(snap.values, lag, snap.dx, snap.length)
            mass = float(np.sum(snap.values))
            records.append({"t": float(t), "N": n, "l1_error": err, "tv_eulerian": snap.total_variation(),
                            "mass_defect": abs(mass - float(np.sum(lag))) / mass})
            lag_blocks.append((t, snap.centers, spec.to_raw(lag)))
        final, lag = eul.snapshots[-1], lagrangian_density(traj.states[-1], maps[-1], eul.snapshots[-1].centers)
        final_errors.append(_l1(final.values, lag, final.dx, final.length))
        if level == 0:
            out.checks.append(sc.check("temple_eta_min", min(float(np.min(s.eta.values)) for s in traj.states)))
            out.checks.append(sc.check("flow_map_min_slope", min(float(np.min(np.diff(m.gamma))) for m in maps)))
            out.checks.append(sc.check("l1_correspondence", final_errors[0]))
            if shock is not None:
                init = sc.config["initial"]
                rl, rr = spec.from_raw(float(init["left"])), spec.from_raw(float(init["right"]))
                x_rh = float(init.get("x_jump", 0.0)) + shock * T
                mid = 0.5 * (rl + rr)
                for label, vals in (("eulerian", final.values), ("lagrangian", lag)):
                    pos = crossing(final.centers, vals, mid, x_rh)
                    out.checks.append(sc.check(f"shock_position_{label}_cells", abs(pos - x_rh) / final.dx))
            if smooth:
                ref = _characteristics(sc, spec, final.centers, T)
                for label, vals in (("eulerian", final.values), ("lagrangian", lag)):
                    out.checks.append(sc.check(f"characteristics_l1_{label}_cells",
                                               _l1(vals, ref, final.dx, final.length) / final.dx))
            export.eulerian_csv(out_dir / "solution_eulerian.csv", eul, spec.to_raw)
            export.write_table(out_dir / "solution_lagrangian.csv", ("t", "x", "rho"), lag_blocks)
            export.flowmap_csv(out_dir / "solution_flowmap.csv", maps)
            mixed = mixed_partial_residual(traj) if len(traj.states) > 1 else 0.0
    if sc.levels > 1:
        out.checks.append(sc.check("correspondence_ratio", final_errors[0] / final_errors[1]))
    for name in sorted(worst):
        out.checks.append(sc.check(name, worst[name]))
    export.write_json(out_dir / "correspondence.json",
                      {"records": records, "final_errors": final_errors,
                       "observed_orders": _orders(final_errors), "mixed_partial_residual": mixed})
    out.artifacts += ["solution_eulerian.csv", "solution_lagrangian.csv", "solution_flowmap.csv",
                      "correspondence.json"]
    return out


def run_variational(sc: Scenario, out_dir: Path) -> Outcome:
    out = Outcome()
    spec = build_flux(sc)
    T = final_time(sc, spec)
    residuals, smap, pot = [], None, None
    worst_v, worst_s = 0, 0.0
    for level in range(sc.levels):
        n = sc.N * 2 ** level
        vel, traj, maps = _temple_run(sc, spec, n, T, uniform_times(sc, T, level))
        pot = potential_from_flux(vel) if pot is None else pot
        smap = SpacetimeMap.from_flow_maps(maps)
        u0 = traj.states[0].eta.with_values(traj.states[0].velocity)
        residuals.append(conserved_quantity_residual(smap, pot, u0))
        worst_v = max(worst_v, _bit_changes([s.v.values for s in traj.states], traj.states[0].v.values))
        worst_s = max(worst_s, traj.stretch_drift)
        if level == 0:
            b_direct, b_image = action_value(smap, pot), action_value_image(smap, pot)
            out.checks.append(sc.check("action_forms_rel_cells",
                                       abs(b_direct - b_image) / abs(b_direct) / smap.dx))
            export.flowmap_csv(out_dir / "solution_flowmap.csv", maps)
    out.checks.append(sc.check("temple_v_bit_invariant", worst_v))
    out.checks.append(sc.check("temple_stretch_drift", worst_s))
    orders = _orders(residuals)
    if orders:
        out.checks.append(sc.check("conserved_residual_order", min(orders)))
    zero = first_variation(smap, pot, PerturbationField(np.zeros_like(smap.gamma)))
    out.checks.append(sc.check("zero_perturbation", abs(zero)))
    summary = {"case": sc.name, "N": int(smap.x.size - 1), "residual_conserved": residuals[-1],
               "residual_conserved_levels": residuals, "residual_orders": orders}
    if sc.perturbations:
        study = extremality_study(smap, lambda r, s: pot.b(r) * s, sc.perturbations, sc.seed)
        out.checks.append(sc.check("extremality_ratio", study["ratio"]))
        summary.update({k: study[k] for k in _STUDY_KEYS})
    export.write_json(out_dir / "extremality.json", summary)
    out.artifacts += ["solution_flowmap.csv", "extremality.json"]
    return out


def _dalembert_error(sc: Scenario, traj, n: int, T: float, p) -> float | None:
    """Relative L2 distance of ``w`` to the d'Alembert solution of the linear wave equation."""
    cfg = sc.config
    if cfg["initial"]["profile"] != "constant" or float(cfg["pressure"].get("alpha", 2.0)) != 1.0:
        return None
    rho = float(cfg["initial"]["value"])
    c = math.sqrt(float(p.p_prime(rho)))
    u0 = _wrapped(sc, sc.profile("velocity"))
    exact = uniform_grid(n, sc.domain, lambda x: rho * 0.5 * (u0(x - c * T) + u0(x + c * T)), PERIODIC)
    w = traj.states[-1].w.values
    norm = float(np.sqrt(np.sum(exact.values ** 2)))
    if norm == 0.0:
        return None
    return float(np.sqrt(np.sum((w - exact.values) ** 2)) / norm)


def _hyperbolicity_error(sc: Scenario, traj, p) -> float:
    rng = np.random.default_rng(sc.seed)
    v = traj.states[0].v.values
    eta = np.concatenate([s.eta.values for s in traj.states])
    speed = max(float(np.max(np.abs(s.w.values / s.v.values))) for s in traj.states)
    worst = 0.0
    for _ in range(HYPERBOLICITY_SAMPLES):
        q = rng.uniform(np.min(v), np.max(v))
        e = rng.uniform(np.min(eta), np.max(eta))
        gt = rng.uniform(-2 * speed - 1, 2 * speed + 1)
        ref = -float(p.p_prime(q / e))
        worst = max(worst, abs(hyperbolicity_check(p, q, e, gt) - ref) / abs(ref))
    return worst


def run_system(sc: Scenario, out_dir: Path) -> Outcome:
    out = Outcome()
    kind = GAS if sc.pipeline == "gas" else NLWE
    p = pressure_from_config(sc.config["pressure"])
    T = float(sc.config["T"])
    rho_prof, u_prof = sc.profile(), sc.profile("velocity")
    residuals, traj, levels = [], None, []
    worst = {"eta_drift": 0.0, "w_drift": 0.0, "v_bit_invariant": 0.0}
    for level in range(sc.levels):
        n = sc.N * 2 ** level
        rho0 = uniform_grid(n, sc.domain, rho_prof, PERIODIC)
        u0 = uniform_grid(n, sc.domain, u_prof, PERIODIC)
        traj = solve_system(init_system(kind, rho0, u0), T, p, sc.cfl, uniform_times(sc, T, level))
        residuals.append(float(np.max(np.abs(euler_lagrange_residual(traj, p)))))
        levels.append(n)
        worst["eta_drift"] = max(worst["eta_drift"], traj.eta_drift)
        worst["w_drift"] = max(worst["w_drift"], traj.w_drift)
        worst["v_bit_invariant"] = max(worst["v_bit_invariant"],
                                       _bit_changes([s.v.values for s in traj.states], rho0.values))
        if level == 0:
            if kind == NLWE:
                out.checks.append(sc.check("hyperbolicity_identity", _hyperbolicity_error(sc, traj, p)))
                err = _dalembert_error(sc, traj, n, T, p)
                if err is not None:
                    out.checks.append(sc.check("dalembert_rel_l2", err))
            export.system_csv(out_dir / "solution_system.csv", traj)
            export.flowmap_csv(out_dir / "solution_flowmap.csv", traj.flow_maps())
    for name in ("eta_drift", "w_drift", "v_bit_invariant"):
        out.checks.append(sc.check(name, worst[name]))
    orders = _orders(residuals)
    if orders:
        out.checks.append(sc.check("el_residual_order", min(orders)))
    smap = traj.spacetime_map()
    zero = system_first_variation(traj, p, PerturbationField(np.zeros_like(smap.gamma)))
    out.checks.append(sc.check("zero_perturbation", abs(zero)))
    export.write_json(out_dir / "el_residual.json", {"case": sc.name, "N": levels, "residual_max": residuals,
                                                     "observed_orders": orders})
    out.artifacts += ["solution_system.csv", "solution_flowmap.csv", "el_residual.json"]
    if sc.perturbations:
        study = system_extremality(traj, p, sc.perturbations, seed=sc.seed)
        out.checks.append(sc.check("extremality_ratio", study["ratio"]))
        summary = {"case": sc.name, "N": levels[-1], "residual_el": residuals[-1]}
        summary.update({k: study[k] for k in _STUDY_KEYS})
        export.write_json(out_dir / "extremality.json", summary)
        out.artifacts.append("extremality.json")
    return out


def run_metric_roundtrip(sc: Scenario, out_dir: Path) -> Outcome:
    out = Outcome()
    spec = build_flux(sc)
    if not spec.data_range[1] > spec.data_range[0]:
        raise ConfigError("initial: the metric round trip needs a profile with a nondegenerate range")
    vel = velocity_law(spec)
    pot = potential_from_flux(vel)
    lo, hi = vel.u_range
    u = np.linspace(lo, hi, ROUNDTRIP_SAMPLES)
    g = vel.g(u)
    h = 1e-5 * max(1.0, abs(hi))
    inner = u[(u - h > lo) & (u + h < hi)]
    db = (pot.b(inner + h) - pot.b(inner - h)) / (2 * h)
    out.checks.append(sc.check("b_integral_consistency",
                               float(np.max(np.abs(db - vel.g(inner) ** 2) / vel.g(inner) ** 2))))
    out.checks.append(sc.check("inversion_identity", float(np.max(np.abs(vel.F(g) - u) / (1 + np.abs(u))))))
    _, spec2 = flux_from_potential(pot)
    rho = np.linspace(*spec.data_range, ROUNDTRIP_SAMPLES)
    ref = spec.flux(rho)
    out.checks.append(sc.check("flux_roundtrip", float(np.max(np.abs(spec2.flux(rho) - ref) / np.abs(ref)))))
    worst = 0.0
    for ui in u[1:-1]:
        c_action, c_flux = transport_coefficient_check(pot, vel, ui)
        worst = max(worst, abs(c_action - c_flux) / (1 + abs(c_flux)))
    out.checks.append(sc.check("transport_coefficients", worst))
    a = np.linspace(*spec.data_range, 10_000)
    F = vel.F(a)
    out.checks.append(sc.check("velocity_min", float(np.min(F))))
    out.checks.append(sc.check("velocity_min_increment", float(np.min(np.diff(F)))))
    export.write_table(out_dir / "solution_potential.csv", ("u", "g", "b", "b_prime", "b_second"),
                       [(u, g, pot.b(u), pot.b_prime(u), pot.b_second(u))])
    export.write_json(out_dir / "normalization.json", {
        "flux": spec.name, "L": spec.L, "K": spec.K, "data_range": list(spec.data_range),
        "velocity_range": [lo, hi]})
    out.artifacts += ["solution_potential.csv", "normalization.json"]
    return out


RUNNERS = {
    "eulerian": run_eulerian,
    "temple": run_temple,
    "correspondence": run_correspondence,
    "variational": run_variational,
    "gas": run_system,
    "nlwe": run_system,
    "metric-roundtrip": run_metric_roundtrip,
}


@dataclass
class Report:
    scenario: str
    pipeline: str
    checks: list[Check]
    artifacts: list[str]
    out_dir: Path
    wall_time_s: float | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "pipeline": self.pipeline,
                "checks": [c.as_dict() for c in self.checks],
                "artifacts": sorted(self.artifacts + ["report.json"]),
                "pass": self.passed, "wall_time_s": self.wall_time_s}


def resolve_out_dir(sc: Scenario, out_root: Path | None = None) -> Path:
    if out_root is not None:
        return Path(out_root) / sc.name
    if "output_dir" in sc.config:
        d = Path(sc.config["output_dir"])
        if not d.is_absolute() and sc.source is not None:
            d = sc.source.parent / d
        return d
    return Path("runs") / sc.name


def run_scenario(sc: Scenario, out_root: Path | None = None, timing: bool = False) -> Report:
    """Execute ``sc``'s pipeline and write its artifacts plus ``report.json``.

    ``wall_time_s`` is only measured when ``timing`` is set, so that reports
    stay byte-identical between reruns by default.
    """
    out_dir = resolve_out_dir(sc, out_root)
    fresh = not out_dir.exists()
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        outcome = RUNNERS[sc.pipeline](sc, out_dir)
    except Exception:
        # leave no empty run directory behind a failed run
        if fresh and not any(out_dir.iterdir()):
            out_dir.rmdir()
        raise
    wall = time.perf_counter() - start if timing else None
    report = Report(sc.name, sc.pipeline, outcome.checks, outcome.artifacts, out_dir, wall)
    export.write_json(out_dir / "report.json", report.as_dict())
    return report
