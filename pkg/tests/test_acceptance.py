"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed
in the terminal summary.  Every criterion is checked against an oracle that
does not share code with the quantity under test."""
import contextlib
import io
import json
from pathlib import Path

import numpy as np
import pytest

from lagrangeflow.cli import EXIT_OK, main
from lagrangeflow.eulerian import solve
from lagrangeflow.flowmap import extend_reference_mesh, lagrangian_density, reconstruct
from lagrangeflow.flux import ActionPotential, flux_from_potential, potential_from_flux, velocity_law
from lagrangeflow.grid import CONSTANT, PERIODIC, uniform_grid
from lagrangeflow.numerics import observed_order
from lagrangeflow.systems import (GAS, NLWE, PressureLaw, euler_lagrange_residual, hyperbolicity_check,
                                  init_system, solve_system, system_extremality, system_first_variation)
from lagrangeflow.temple import init_temple, solve_temple
from lagrangeflow.variational import (PerturbationField, SpacetimeMap, conserved_quantity_residual,
                                      extremality_study, first_variation, transport_coefficient_check)

from conftest import ACCEPTANCE, burgers_spec

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
SINE = lambda x: 2 + 0.5 * np.sin(2 * np.pi * x)
T_STAR = 1 / np.pi  # Burgers breakdown time of SINE: 1 / max(-rho0')


def record(number, title, checks):
    """Store the criterion row, then assert every ``(label, ok, detail)`` check."""
    ok = all(c[1] for c in checks)
    detail = "; ".join(f"{label} {value}" for label, _, value in checks)
    ACCEPTANCE.append((number, title, ok, detail))
    failed = [label for label, good, _ in checks if not good]
    assert not failed, f"criterion {number} failed: {failed} ({detail})"


def l1(a, b, dx):
    return float(np.sum(np.abs(a - b)) * dx)


def crossing(x, values, level):
    d = values - level
    i = np.nonzero(d[:-1] * d[1:] <= 0)[0]
    assert i.size == 1, "expected a single monotone crossing"
    i = i[0]
    return x[i] + (x[i + 1] - x[i]) * d[i] / (d[i] - d[i + 1])


def temple_run(vel, rho0, T, times=None):
    speed = float(np.max(vel.F(np.array([rho0.values.min(), rho0.values.max()]))))
    ref = extend_reference_mesh(rho0, speed, T) if rho0.boundary == CONSTANT else rho0
    traj = solve_temple(init_temple(vel, ref), T, output_times=times)
    return traj, reconstruct(traj, vel)


def smooth_burgers(n, T=0.5 * T_STAR, levels_out=None):
    spec = burgers_spec(1.0, 3.0)
    vel = velocity_law(spec)
    rho0 = uniform_grid(n, (0.0, 1.0), SINE, PERIODIC)
    times = list(np.linspace(0.0, T, (levels_out or n // 5) + 1))
    traj, maps = temple_run(vel, rho0, T, times)
    return spec, vel, rho0, traj, maps


def characteristics_newton(y, t):
    """Burgers: rho(y, t) = rho0(xi) with xi + rho0(xi) t = y, solved by Newton."""
    xi = y - 2.0 * t
    for _ in range(50):
        r = xi + SINE(xi) * t - y
        xi = xi - r / (1 + np.pi * np.cos(2 * np.pi * xi) * t)
    return SINE(xi)


# 1 ------------------------------------------------------------------------

def test_criterion_1_metric_flux_round_trips():
    spec = burgers_spec(1.0, 3.0)
    pot = potential_from_flux(velocity_law(spec))
    u = np.linspace(*pot.u_range, 100)
    err_b = float(np.max(np.abs(pot.b_prime(u) - 4 * u ** 2) / (4 * u ** 2)))

    l2 = ActionPotential(lambda u: 0.5 * np.asarray(u) ** 2, lambda u: np.asarray(u, dtype=float),
                         lambda u: np.ones_like(np.asarray(u, dtype=float)),
                         lambda xi: np.asarray(xi, dtype=float), 1.0, (1.0, 4.0),
                         lambda xi: np.ones_like(np.asarray(xi, dtype=float)))
    vel, flux = flux_from_potential(l2)
    rho = np.linspace(*flux.data_range, 100)
    err_f = float(np.max(np.abs(flux.flux(rho) - rho ** 3) / rho ** 3))
    err_t = 0.0
    for uu in np.linspace(1.0, 4.0, 100):
        for c in transport_coefficient_check(l2, vel, uu):
            err_t = max(err_t, abs(c - 3 * uu) / (3 * uu))
    record(1, "metric <-> flux round trips", [
        ("b'=4u^2 rel", err_b <= 1e-8, f"{err_b:.1e}"),
        ("f=rho^3 rel", err_f <= 1e-8, f"{err_f:.1e}"),
        ("transport 3u rel", err_t <= 1e-8, f"{err_t:.1e}"),
    ])


# 2 ------------------------------------------------------------------------

def test_criterion_2_weak_solution_correspondence():
    spec = burgers_spec(1.0, 2.0)
    vel = velocity_law(spec)
    T, checks = 0.5, []
    for left, right in ((2.0, 1.0), (1.0, 2.0)):
        errors = []
        for n in (800, 1600):
            rho0 = uniform_grid(n, (-0.5, 1.5), lambda x: spec.from_raw(np.where(x < 0, left, right)), CONSTANT)
            eul = solve(spec, rho0, T, output_times=[0.25])
            traj, maps = temple_run(vel, rho0, T, [0.25])
            for t, snap, state, fmap in zip(eul.times, eul.snapshots, traj.states, maps):
                lag = lagrangian_density(state, fmap, snap.centers)
                if n == 800 and left > right and t > 0:
                    # Rankine-Hugoniot: speed (f(2) - f(1)) / (2 - 1) = 1.5
                    mid = spec.from_raw(1.5)
                    for label, vals in (("eul", snap.values), ("lag", lag)):
                        off = abs(crossing(snap.centers, vals, mid) - 1.5 * t) / snap.dx
                        checks.append((f"shock {label} t={t:g} cells", off <= 2, f"{off:.2f}"))
            errors.append(l1(spec.to_raw(snap.values), spec.to_raw(lag), snap.dx) / snap.length)
        ratio = errors[0] / errors[1]
        checks.append((f"({left:g},{right:g}) L1", errors[0] <= 0.02, f"{errors[0]:.2e}"))
        checks.append((f"({left:g},{right:g}) ratio", ratio >= 1.5, f"{ratio:.2f}"))
    record(2, "weak-solution correspondence (Burgers Riemann)", checks)


# 3 ------------------------------------------------------------------------

def test_criterion_3_smooth_correspondence():
    T = 0.5 * T_STAR
    n = 400
    spec, vel, rho0, traj, maps = smooth_burgers(n)
    eul = solve(spec, rho0, T).snapshots[-1]
    y = eul.centers
    exact = characteristics_newton(y, T)
    lag = spec.to_raw(lagrangian_density(traj.states[-1], maps[-1], y))
    e_eul = l1(spec.to_raw(eul.values), exact, eul.dx) / eul.dx
    e_lag = l1(lag, exact, eul.dx) / eul.dx

    residuals = []
    for n in (100, 200, 400, 800):
        _, vel, _, traj, maps = smooth_burgers(n)
        pot = potential_from_flux(vel)
        u0 = traj.states[0].eta.with_values(traj.states[0].velocity)
        residuals.append(conserved_quantity_residual(SpacetimeMap.from_flow_maps(maps), pot, u0))
    order = float(observed_order(residuals, 2.0).min())
    record(3, "smooth-regime correspondence", [
        ("eulerian L1/dx", e_eul <= 5, f"{e_eul:.2f}"),
        ("lagrangian L1/dx", e_lag <= 5, f"{e_lag:.2f}"),
        ("conserved-residual order", order >= 0.8, f"{order:.2f}"),
    ])


# 4 ------------------------------------------------------------------------

def test_criterion_4_extremality():
    _, vel, _, _, maps = smooth_burgers(800, levels_out=160)
    smap = SpacetimeMap.from_flow_maps(maps)
    pot = potential_from_flux(vel)
    study = extremality_study(smap, lambda r, s: pot.b(r) * s, 20)
    zero = first_variation(smap, pot, PerturbationField(np.zeros_like(smap.gamma)))
    record(4, "extremality of the reconstructed flow map", [
        ("min control/extremal ratio over 20", study["ratio"] >= 10, f"{study['ratio']:.1f}"),
        ("zeta=0 variation", zero == 0.0, f"{zero!r}"),
    ])


# suite runs shared by 5 and 7 -----------------------------------------------

@pytest.fixture(scope="module")
def suite_runs(tmp_path_factory):
    configs = sorted(str(p) for p in SCENARIOS.glob("*.json"))
    outs, codes = [], []
    for label in ("a", "b"):
        out = tmp_path_factory.mktemp(f"suite_{label}")
        with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
            codes.append(main(["run", *configs, "--jobs", "4", "--out", str(out)]))
        outs.append(out)
    return configs, outs, codes


# 5 ------------------------------------------------------------------------

HYGIENE = {"eulerian_mass_drift", "eulerian_tv_increase", "eulerian_extrema_excess", "temple_stretch_drift",
           "temple_v_bit_invariant", "eta_drift", "w_drift", "v_bit_invariant"}


def test_criterion_5_solver_hygiene(suite_runs):
    checks = []
    spec = burgers_spec(1.0, 3.0)
    rng = np.random.default_rng(5)
    rho0 = uniform_grid(256, (0.0, 1.0), lambda x: spec.from_raw(SINE(x)), PERIODIC)
    noisy = rho0.with_values(spec.from_raw(rng.uniform(1.0, 3.0, 256)))
    worst_mass, worst_tv, worst_ext = 0.0, 0.0, 0.0
    for data in (rho0, noisy):
        traj = solve(spec, data, 0.4)
        worst_mass = max(worst_mass, traj.mass_drift)
        worst_tv = max(worst_tv, traj.tv_increase)
        worst_ext = max(worst_ext, traj.extrema_excess)
    checks += [("eulerian mass drift", worst_mass <= 1e-12, f"{worst_mass:.1e}"),
               ("eulerian TV increase", worst_tv <= 1e-12, f"{worst_tv:.1e}"),
               ("eulerian extrema excess", worst_ext <= 1e-12, f"{worst_ext:.1e}")]

    ttraj = solve_temple(init_temple(velocity_law(spec), rho0), 0.4)
    v_same = all(s.v.values.tobytes() == ttraj.states[0].v.values.tobytes() for s in ttraj.states)
    checks += [("temple stretch drift", ttraj.stretch_drift <= 1e-12, f"{ttraj.stretch_drift:.1e}"),
               ("temple v bit-invariant", v_same, str(v_same))]

    p = PressureLaw.power(1.0, 2.0)
    r0 = uniform_grid(200, (0.0, 1.0), lambda x: 1 + 0.2 * np.sin(2 * np.pi * x))
    u0 = uniform_grid(200, (0.0, 1.0), lambda x: 0.1 * np.sin(2 * np.pi * x))
    for kind in (GAS, NLWE):
        straj = solve_system(init_system(kind, r0, u0), 0.3, p)
        drift = max(straj.eta_drift, straj.w_drift)
        same = all(s.v.values.tobytes() == r0.values.tobytes() for s in straj.states)
        checks += [(f"{kind} eta/w drift", drift <= 1e-12, f"{drift:.1e}"),
                   (f"{kind} v bit-invariant", same, str(same))]

    configs, outs, _ = suite_runs
    bad = []
    seen = 0
    for report_path in sorted(outs[0].glob("*/report.json")):
        report = json.loads(report_path.read_text())
        for c in report["checks"]:
            if c["name"] in HYGIENE:
                seen += 1
                if not c["pass"]:
                    bad.append(f"{report['scenario']}:{c['name']}")
    checks.append((f"suite hygiene checks ({seen})", seen > 0 and not bad, ",".join(bad) or "all pass"))
    record(5, "solver hygiene", checks)


# 6 ------------------------------------------------------------------------

def test_criterion_6_systems():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(1000):
        p = PressureLaw.power(rng.uniform(0.5, 2.0), rng.uniform(1.0, 3.0))
        q, e, gt = rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0), rng.uniform(-5.0, 5.0)
        ref = -float(p.p_prime(q / e))
        worst = max(worst, abs(hyperbolicity_check(p, q, e, gt) - ref) / abs(ref))

    def pulse(x):
        z = ((x - 0.5 + 0.5) % 1.0 - 0.5) / 0.3
        return np.where(np.abs(z) < 1, 1e-3 * np.cos(0.5 * np.pi * z) ** 2, 0.0)

    n, T = 400, 0.3
    linear = PressureLaw.power(1.0, 1.0)
    one = uniform_grid(n, (0.0, 1.0), lambda x: np.ones_like(x))
    w = solve_system(init_system(NLWE, one, uniform_grid(n, (0.0, 1.0), pulse)), T, linear, cfl=0.9)
    exact = uniform_grid(n, (0.0, 1.0), lambda x: 0.5 * (pulse(x - T) + pulse(x + T))).values
    got = w.states[-1].w.values
    dal = float(np.sqrt(np.sum((got - exact) ** 2) / np.sum(exact ** 2)))

    p2 = PressureLaw.power(1.0, 2.0)

    def acoustic(kind, n):
        r0 = uniform_grid(n, (0.0, 1.0), lambda x: 1 + 0.2 * np.sin(2 * np.pi * x))
        u0 = uniform_grid(n, (0.0, 1.0), lambda x: 0.1 * np.sin(2 * np.pi * x))
        return solve_system(init_system(kind, r0, u0), 0.2, p2, cfl=0.9,
                            output_times=np.linspace(0.0, 0.2, n // 5 + 1))

    checks = [("hyperbolicity identity rel (1e3 inputs)", worst <= 1e-12, f"{worst:.1e}"),
              ("d'Alembert rel L2 N=400", dal <= 1e-2, f"{dal:.2e}")]
    for kind in (GAS, NLWE):
        res = [float(np.max(np.abs(euler_lagrange_residual(acoustic(kind, n), p2)))) for n in (200, 400, 800)]
        order = float(observed_order(res, 2.0).min())
        traj = acoustic(kind, 800)
        study = system_extremality(traj, p2, 20)
        zero = system_first_variation(traj, p2, PerturbationField(np.zeros_like(traj.spacetime_map().gamma)))
        checks += [(f"{kind} EL residual order", order >= 0.8, f"{order:.2f}"),
                   (f"{kind} extremality ratio N=800", study["ratio"] >= 10, f"{study['ratio']:.1f}"),
                   (f"{kind} zeta=0 variation", zero == 0.0, f"{zero!r}")]
    record(6, "systems: hyperbolicity, d'Alembert, map equation, extremality", checks)


# 7 ------------------------------------------------------------------------

def test_criterion_7_determinism(suite_runs):
    configs, (a, b), codes = suite_runs
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    differing = [str(f) for f in files_a if f not in files_b or (a / f).read_bytes() != (b / f).read_bytes()]
    record(7, "byte-identical suite reruns", [
        (f"suite exit codes ({len(configs)} scenarios)", codes == [EXIT_OK, EXIT_OK], str(codes)),
        ("artifact lists match", files_a == files_b, f"{len(files_a)} files"),
        ("differing files", not differing, ",".join(differing) or "none"),
    ])
