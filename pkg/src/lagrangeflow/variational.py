"""Discrete action functional, first variation, and the conserved quantity of extremals.

The action of a map ``gamma(x, t)`` is evaluated after the change of
variables ``y = gamma(x, t)``, i.e. as the double integral of
``b(gamma_t) * gamma_x`` over the reference mesh and ``[0, T]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateCoefficient, MonotonicityLoss
from .flowmap import FlowMap
from .flux import ActionPotential, VelocityLaw
from .grid import GridFunction

SEED = 0xC0FFEE
MARGIN_CELLS = 2
MAX_HALVINGS = 8


@dataclass(frozen=True)
class SpacetimeMap:
    """``gamma`` sampled on a tensor grid: ``gamma[n, i]`` at ``(x[i], t[n])``."""

    x: np.ndarray
    t: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (len(self.t), len(self.x)):
            raise ValueError(f"gamma has shape {g.shape}, expected {(len(self.t), len(self.x))}")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        check_monotone(g)

    @classmethod
    def from_flow_maps(cls, maps: Sequence[FlowMap]) -> "SpacetimeMap":
        t = np.array([m.t for m in maps])
        if t.size < 3 or not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-9, atol=0):
            raise ValueError("flow maps must be stored at >= 3 uniformly spaced times")
        return cls(maps[0].x, t, np.vstack([m.gamma for m in maps]))

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def derivatives(self, gamma: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """``(D_t gamma, D_x gamma)``: centred inside, one-sided at the edges."""
        g = self.gamma if gamma is None else gamma
        return np.gradient(g, self.t, axis=0), np.gradient(g, self.x, axis=1)

    def weights(self) -> np.ndarray:
        return np.outer(_trapezoid_weights(self.t), _trapezoid_weights(self.x))

    def with_gamma(self, gamma: np.ndarray) -> "SpacetimeMap":
        return SpacetimeMap(self.x, self.t, gamma)


def _trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    h = np.diff(nodes)
    w = np.zeros(nodes.size)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def check_monotone(gamma: np.ndarray) -> None:
    gaps = np.diff(gamma, axis=1)
    if np.any(gaps <= 0):
        n, i = np.unravel_index(int(np.argmin(gaps)), gaps.shape)
        raise MonotonicityLoss(f"map folds at time index {n}, node {i}")


def action_integral(smap: SpacetimeMap, lagrangian: Callable, gamma: np.ndarray | None = None) -> float:
    """Trapezoid integral of ``lagrangian(gamma_t, gamma_x)`` over the node grid."""
    gt, gx = smap.derivatives(gamma)
    return float(np.sum(smap.weights() * lagrangian(gt, gx)))


def action_value(smap: SpacetimeMap, pot: ActionPotential) -> float:
    """Action with density ``b(gamma_t) gamma_x``."""
    return action_integral(smap, lambda r, s: pot.b(r) * s)


def action_value_image(smap: SpacetimeMap, pot: ActionPotential) -> float:
    """Same action evaluated before the change of variables.

    Integrates ``b(u)`` with ``u = gamma_t o gamma^{-1}`` over a uniform grid
    on each image interval ``[gamma(x_0, t), gamma(x_N, t)]``.
    """
    gt, _ = smap.derivatives()
    per_time = np.empty(smap.t.size)
    for n in range(smap.t.size):
        y = np.linspace(smap.gamma[n, 0], smap.gamma[n, -1], smap.x.size)
        u = np.interp(y, smap.gamma[n], gt[n])
        per_time[n] = np.sum(_trapezoid_weights(y) * pot.b(u))
    return float(np.sum(_trapezoid_weights(smap.t) * per_time))


@dataclass(frozen=True)
class PerturbationField:
    """Variation ``zeta`` on the node grid, vanishing near the boundary."""

    zeta: np.ndarray

    def check_support(self, margin: int = MARGIN_CELLS) -> None:
        z = self.zeta
        m = margin + 1
        edge = np.concatenate((z[:m].ravel(), z[-m:].ravel(), z[:, :m].ravel(), z[:, -m:].ravel()))
        if np.any(edge != 0):
            raise ValueError(f"perturbation must vanish within {margin} cells of the boundary")


def bump(smap: SpacetimeMap, cx: float, cw: float, ct: float, tw: float,
         amplitude: float = 1.0) -> PerturbationField:
    """Tensor-product cosine-squared bump centred at ``(cx, ct)`` with half-widths ``(cw, tw)``."""
    def profile(s, c, w):
        r = (s - c) / w
        return np.where(np.abs(r) < 1, np.cos(0.5 * np.pi * r) ** 2, 0.0)
    return PerturbationField(amplitude * np.outer(profile(smap.t, ct, tw), profile(smap.x, cx, cw)))


def perturbation_catalog(smap: SpacetimeMap, n: int = 20, seed: int = SEED,
                         widths: tuple[float, float] = (0.05, 0.15)) -> list[PerturbationField]:
    """``n`` bumps with random centres and half-widths (5-15% of each extent).

    Amplitudes keep ``|zeta_x| <= 1`` and ``|zeta_t| <= |M| / T``, so a
    variation of size ``eps`` moves ``gamma_x`` and ``gamma_t`` comparably.
    """
    rng = np.random.default_rng(seed)
    X0, X1 = smap.x[0], smap.x[-1]
    T0, T1 = smap.t[0], smap.t[-1]
    mx = (MARGIN_CELLS + 1) * smap.dx
    mt = (MARGIN_CELLS + 1) * smap.dt
    out = []
    for _ in range(n):
        cw = rng.uniform(*widths) * (X1 - X0)
        tw = rng.uniform(*widths) * (T1 - T0)
        cx = rng.uniform(X0 + mx + cw, X1 - mx - cw)
        ct = rng.uniform(T0 + mt + tw, T1 - mt - tw)
        amp = (2 / np.pi) * min(cw, tw * (X1 - X0) / (T1 - T0))
        field = bump(smap, cx, cw, ct, tw, amp)
        field.check_support()
        out.append(field)
    return out


def default_epsilon(smap: SpacetimeMap) -> float:
    return 1e-3 * float(smap.x[-1] - smap.x[0])


def first_variation_of(smap: SpacetimeMap, lagrangian: Callable, zeta: PerturbationField,
                       eps: float | None = None) -> float:
    """Central difference of the action along ``zeta``; halves ``eps`` on folding."""
    zeta.check_support()
    if not np.any(zeta.zeta):
        return 0.0
    eps = default_epsilon(smap) if eps is None else eps
    for _ in range(MAX_HALVINGS + 1):
        plus = smap.gamma + eps * zeta.zeta
        minus = smap.gamma - eps * zeta.zeta
        try:
            check_monotone(plus)
            check_monotone(minus)
        except MonotonicityLoss:
            eps *= 0.5
            continue
        return (action_integral(smap, lagrangian, plus)
                - action_integral(smap, lagrangian, minus)) / (2.0 * eps)
    raise MonotonicityLoss(f"perturbed map still folds after {MAX_HALVINGS} halvings of epsilon")


def first_variation(smap: SpacetimeMap, pot: ActionPotential, zeta: PerturbationField,
                    eps: float | None = None) -> float:
    return first_variation_of(smap, lambda r, s: pot.b(r) * s, zeta, eps)


def linear_control_path(smap: SpacetimeMap) -> SpacetimeMap:
    """Path with the same endpoints, linear in time at every reference point."""
    s = ((smap.t - smap.t[0]) / (smap.t[-1] - smap.t[0]))[:, None]
    return smap.with_gamma((1 - s) * smap.gamma[0] + s * smap.gamma[-1])


def nodal(u0) -> np.ndarray:
    return u0.at_nodes() if isinstance(u0, GridFunction) else np.asarray(u0, dtype=float)


def conserved_quantity_residual(smap: SpacetimeMap, pot: ActionPotential, u0) -> float:
    """Max over interior nodes of ``|b'(gamma_t) gamma_x**2 - b'(u0)|``."""
    gt, gx = smap.derivatives()
    q = pot.b_prime(gt[1:-1, 1:-1]) * gx[1:-1, 1:-1] ** 2
    ref = pot.b_prime(nodal(u0)[1:-1])
    return float(np.max(np.abs(q - ref[None, :])))


def transport_coefficient_check(pot: ActionPotential, vel: VelocityLaw, u) -> tuple[float, float]:
    """Transport speeds ``u + 2b'/b''`` (from the action) and ``u + g/g'`` (from the flux)."""
    u = float(u)
    bpp = float(pot.b_second(u))
    gp = float(vel.g_prime(u))
    if bpp == 0.0 or gp == 0.0 or not np.isfinite(bpp) or not np.isfinite(gp):
        raise DegenerateCoefficient(f"b''({u:g})={bpp:g}, g'({u:g})={gp:g}")
    return u + 2.0 * float(pot.b_prime(u)) / bpp, u + float(vel.g(u)) / gp


def extremality_study(smap: SpacetimeMap, lagrangian: Callable, n: int = 20,
                      seed: int = SEED, eps: float | None = None, widths=(0.05, 0.15)) -> dict:
    """First variations of ``smap`` and of its linear control path over a bump catalog."""
    control = linear_control_path(smap)
    eps = default_epsilon(smap) if eps is None else eps
    ext, ctl = [], []
    for zeta in perturbation_catalog(smap, n, seed, widths):
        ext.append(first_variation_of(smap, lagrangian, zeta, eps))
        ctl.append(first_variation_of(control, lagrangian, zeta, eps))
    ext = np.abs(np.array(ext))
    ctl = np.abs(np.array(ctl))
    ratios = ctl / np.maximum(ext, np.finfo(float).tiny)
    return {
        "epsilon": eps,
        "extremal_derivative": float(np.max(ext)),
        "control_derivative": float(np.min(ctl)),
        "ratio": float(np.min(ratios)),
        "extremal_all": ext.tolist(),
        "control_all": ctl.tolist(),
    }
