"""Lagrangian two-field systems: isentropic gas dynamics and the nonlinear wave equation.

State per cell: stretch ``eta = gamma_x``, momentum ``w = rho0 gamma_t`` and
the frozen reference density ``v = rho0``.  Both systems share

    eta_t - (w / v)_x = 0,        v_t = 0,

and differ in the momentum flux: ``p(v/eta)`` for gas, and
``p(v/eta) - w**2 / (eta v)`` for the wave equation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CFLViolation, NonHyperbolic, NonSmoothData, PositivityLoss
from .eulerian import DEFAULT_CFL, MAX_CFL, output_schedule
from .flowmap import FlowMap, flow_maps_from_stretch
from .grid import PERIODIC, GridFunction
from .numerics import adaptive_simpson, gauss_integral
from .temple import ETA_MIN
from .variational import PerturbationField, SpacetimeMap, first_variation_of, extremality_study

GAS = "gas"
NLWE = "nlwe"
KINDS = (GAS, NLWE)


@dataclass(frozen=True)
class PressureLaw:
    """Pressure ``p`` with derivative and antiderivative ``P`` (``P(1) = 0``)."""

    p: Callable
    p_prime: Callable
    P: Callable
    name: str = "custom"

    @classmethod
    def power(cls, kappa: float = 1.0, alpha: float = 2.0) -> "PressureLaw":
        """``p(rho) = kappa * rho**alpha``."""
        if alpha == -1:
            raise ValueError("alpha = -1 has a logarithmic antiderivative; not supported")
        return cls(lambda r: kappa * r ** alpha,
                   lambda r: kappa * alpha * r ** (alpha - 1),
                   lambda r: kappa * (r ** (alpha + 1) - 1.0) / (alpha + 1),
                   f"power(kappa={kappa:g}, alpha={alpha:g})")

    def expansion_work(self, s, q):
        """``int_1^s p(q / sigma) d sigma`` for arrays (16-point Gauss)."""
        q = np.asarray(q, dtype=float)
        return gauss_integral(lambda sig: self.p(q / sig), 1.0, s)


@dataclass(frozen=True)
class SystemState:
    eta: GridFunction
    w: GridFunction
    v: GridFunction
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown system kind {self.kind!r}")

    def validate(self) -> None:
        if np.any(self.eta.values <= 0):
            raise PositivityLoss("eta must be positive")
        if np.any(self.v.values <= 0):
            raise PositivityLoss("v must be positive")


def init_system(kind: str, rho0: GridFunction, u0: GridFunction) -> SystemState:
    """Identity map (``eta = 1``) with momentum ``w = rho0 * u0``."""
    state = SystemState(rho0.with_values(np.ones(rho0.n)), rho0.with_values(rho0.values * u0.values),
                        rho0, kind)
    state.validate()
    return state


def physical_flux(kind: str, eta, w, v, p: PressureLaw):
    rho = v / eta
    f_eta = -w / v
    f_w = p.p(rho)
    if kind == NLWE:
        f_w = f_w - w ** 2 / (eta * v)
    return f_eta, f_w


def wave_speed(eta, w, v, p: PressureLaw):
    """Bound ``|w/(v eta)| + sqrt(p'(v/eta)) / eta`` on the characteristic speeds."""
    return np.abs(w / (v * eta)) + np.sqrt(p.p_prime(v / eta)) / eta


def system_flux(kind: str, left, right, p: PressureLaw):
    """Rusanov flux for ``(eta, w)``; ``left``/``right`` are ``(eta, w, v)`` tuples.

    Returns ``(F_eta, F_w, F_v)`` with ``F_v = 0``.
    """
    eL, wL, vL = (np.asarray(a, dtype=float) for a in left)
    eR, wR, vR = (np.asarray(a, dtype=float) for a in right)
    aL, bL = physical_flux(kind, eL, wL, vL, p)
    aR, bR = physical_flux(kind, eR, wR, vR, p)
    lam = np.maximum(wave_speed(eL, wL, vL, p), wave_speed(eR, wR, vR, p))
    f_eta = 0.5 * (aL + aR) - 0.5 * lam * (eR - eL)
    f_w = 0.5 * (bL + bR) - 0.5 * lam * (wR - wL)
    return f_eta, f_w, np.zeros_like(f_eta)


@dataclass
class SystemTrajectory:
    states: list[SystemState]
    times: np.ndarray
    cfl: float
    anchor_times: list[float] = field(default_factory=list)
    anchor_velocity: list[float] = field(default_factory=list)
    eta_history: list[float] = field(default_factory=list)
    w_history: list[float] = field(default_factory=list)
    steps: int = 0

    @property
    def kind(self) -> str:
        return self.states[0].kind

    @property
    def eta_drift(self) -> float:
        s = np.asarray(self.eta_history)
        return float(np.max(np.abs(s - s[0])) / abs(s[0]))

    @property
    def w_drift(self) -> float:
        """Drift of total momentum, relative to ``sum |w| dx`` (total momentum may vanish)."""
        s = np.asarray(self.w_history)
        scale = max(float(np.sum(np.abs(self.states[0].w.values)) * self.states[0].w.dx), 1e-300)
        return float(np.max(np.abs(s - s[0])) / scale)

    def flow_maps(self) -> list[FlowMap]:
        s0 = self.states[0]
        return flow_maps_from_stretch(s0.eta.edges, [s.eta.values for s in self.states], self.times,
                                      self.anchor_times, self.anchor_velocity, s0.eta.boundary)

    def spacetime_map(self) -> SpacetimeMap:
        return SpacetimeMap.from_flow_maps(self.flow_maps())


def _interfaces(state: SystemState, p: PressureLaw):
    e, w, v = state.eta.padded(1), state.w.padded(1), state.v.padded(1)
    return system_flux(state.kind, (e[:-1], w[:-1], v[:-1]), (e[1:], w[1:], v[1:]), p)


def system_dt(state: SystemState, p: PressureLaw, cfl: float) -> float:
    lam = float(np.max(wave_speed(state.eta.values, state.w.values, state.v.values, p)))
    return math.inf if lam <= 0 else cfl * state.eta.dx / lam


def system_step(state: SystemState, dt: float, p: PressureLaw, cfl: float = MAX_CFL) -> SystemState:
    bound = system_dt(state, p, cfl)
    if dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.6g} exceeds the CFL bound {bound:.6g}")
    f_eta, f_w, _ = _interfaces(state, p)
    r = dt / state.eta.dx
    eta = state.eta.values - r * (f_eta[1:] - f_eta[:-1])
    w = state.w.values - r * (f_w[1:] - f_w[:-1])
    if np.any(eta <= ETA_MIN):
        i = int(np.argmin(eta))
        raise PositivityLoss(f"eta fell to {eta[i]:.3e} <= {ETA_MIN:g} in cell {i}")
    return SystemState(state.eta.with_values(eta), state.w.with_values(w), state.v, state.kind)


def solve_system(state0: SystemState, T: float, p: PressureLaw, cfl: float = DEFAULT_CFL,
                 output_times=None) -> SystemTrajectory:
    """Conservative Rusanov march of ``(eta, w)`` with ``v`` shared by every level."""
    if cfl > MAX_CFL:
        raise CFLViolation(f"cfl={cfl:g} exceeds {MAX_CFL}")
    state0.validate()
    times = output_schedule(T, output_times)
    traj = SystemTrajectory([state0], times, cfl)
    state = state0

    def record(s, t):
        traj.anchor_times.append(t)
        traj.anchor_velocity.append(float(-_interfaces(s, p)[0][0]))
        traj.eta_history.append(s.eta.total())
        traj.w_history.append(s.w.total())

    t = 0.0
    record(state, t)
    k = 1
    while k < times.size:
        dt = system_dt(state, p, cfl)
        target = times[k]
        landing = dt >= target - t
        if landing:
            dt = target - t
        state = system_step(state, dt, p, cfl)
        t = target if landing else t + dt
        traj.steps += 1
        record(state, t)
        if landing:
            traj.states.append(state)
            k += 1
    return traj


def hyperbolicity_check(p: PressureLaw, rho0: float, eta: float, gamma_t: float) -> float:
    """``AC - B**2`` of the principal part ``A g_tt + 2B g_xt + C g_xx`` of the wave-equation map."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    pp = float(p.p_prime(rho0 / eta))
    A = eta
    B = -gamma_t
    C = -(pp - gamma_t ** 2) / eta
    disc = A * C - B ** 2
    if not disc < 0:
        raise NonHyperbolic(f"AC - B^2 = {disc:g} >= 0 (p'({rho0 / eta:g}) = {pp:g})")
    return disc


def system_action_density(kind: str, r: float, s: float, q: float, p: PressureLaw) -> float:
    """Action density ``b(gamma_t, gamma_x, rho0)`` (before the factor ``gamma_x``)."""
    if s <= 0 or q <= 0:
        raise ValueError("s and q must be positive")
    if kind == GAS:
        work = adaptive_simpson(lambda sig: float(p.p(q / sig)), 1.0, s)
        return q * r ** 2 / (2 * s) + work / s
    if kind == NLWE:
        return 0.5 * (r * q / s) ** 2 - float(p.P(q / s))
    raise ValueError(f"unknown system kind {kind!r}")


def system_lagrangian(kind: str, q_nodes: np.ndarray, p: PressureLaw) -> Callable:
    """Vectorised ``b(r, s, q) * s`` on the node grid."""
    q = np.asarray(q_nodes, dtype=float)[None, :]
    if kind == GAS:
        return lambda r, s: 0.5 * q * r ** 2 + p.expansion_work(s, q)
    if kind == NLWE:
        return lambda r, s: s * (0.5 * (r * q / s) ** 2 - p.P(q / s))
    raise ValueError(f"unknown system kind {kind!r}")


SMOOTHNESS_RATIO = 0.5


def check_smooth(v: GridFunction) -> None:
    """Reject data whose second differences are as large as its first differences.

    For a C^1 profile the ratio is ``O(dx)``; at a jump it is about 1.
    """
    vp = v.padded(1)
    d1 = np.max(np.abs(np.diff(vp)))
    d2 = np.max(np.abs(vp[2:] - 2 * vp[1:-1] + vp[:-2]))
    if d1 > 0 and d2 > SMOOTHNESS_RATIO * d1:
        raise NonSmoothData(f"rho0 looks discontinuous (max second difference {d2:.3g} vs first {d1:.3g}); "
                            "the map equation needs rho0 in C^1")


def euler_lagrange_residual(traj: SystemTrajectory, p: PressureLaw) -> np.ndarray:
    """Residual of the second-order map equation on interior spacetime nodes.

    All derivatives of ``gamma`` are centred differences of the reconstructed
    map; ``rho0`` and ``rho0'`` at nodes come from averaging and differencing
    ``v``.
    """
    v = traj.states[0].v
    check_smooth(v)
    smap = traj.spacetime_map()
    g = smap.gamma
    dt, dx = smap.dt, smap.dx
    vp = v.padded(1)
    q = 0.5 * (vp[:-1] + vp[1:])[1:-1][None, :]
    dq = ((vp[1:] - vp[:-1]) / dx)[1:-1][None, :]
    c = g[1:-1, 1:-1]
    g_t = (g[2:, 1:-1] - g[:-2, 1:-1]) / (2 * dt)
    g_x = (g[1:-1, 2:] - g[1:-1, :-2]) / (2 * dx)
    g_tt = (g[2:, 1:-1] - 2 * c + g[:-2, 1:-1]) / dt ** 2
    g_xx = (g[1:-1, 2:] - 2 * c + g[1:-1, :-2]) / dx ** 2
    g_tx = (g[2:, 2:] - g[2:, :-2] - g[:-2, 2:] + g[:-2, :-2]) / (4 * dt * dx)
    pp = p.p_prime(q / g_x)
    if traj.kind == GAS:
        return q * g_tt - pp * q / g_x ** 2 * g_xx + pp * dq / g_x
    return g_x * g_tt - 2 * g_t * g_tx - (pp - g_t ** 2) / g_x * g_xx + dq / q * (pp - g_t ** 2)


def system_first_variation(traj_or_map, p: PressureLaw, zeta: PerturbationField,
                           eps: float | None = None, kind: str | None = None,
                           v: GridFunction | None = None) -> float:
    """Central-difference derivative of the system action along ``zeta``."""
    smap, kind, v = _system_map(traj_or_map, kind, v)
    return first_variation_of(smap, system_lagrangian(kind, v.at_nodes(), p), zeta, eps)


def system_extremality(traj: SystemTrajectory, p: PressureLaw, n: int = 20, **kw) -> dict:
    smap = traj.spacetime_map()
    return extremality_study(smap, system_lagrangian(traj.kind, traj.states[0].v.at_nodes(), p), n, **kw)


def _system_map(obj, kind, v):
    if isinstance(obj, SystemTrajectory):
        return obj.spacetime_map(), obj.kind, obj.states[0].v
    if kind is None or v is None:
        raise ValueError("kind and v are required with a bare SpacetimeMap")
    return obj, kind, v
