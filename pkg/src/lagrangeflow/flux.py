"""Scalar fluxes, their affine normalization, and the flux <-> action-potential maps.

Conventions
-----------
A normalized flux lives in shifted density ``a = rho_raw + L`` and carries a
flux shift ``K``; the velocity is ``F(a) = (f(a) + K) / a``, its inverse is
``g``, and the action potential satisfies ``b' = g**2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import InfeasibleNormalization, InversionFailure
from .grid import GridFunction
from .numerics import (adaptive_simpson, check_derivative, critical_points,
                       gauss_integral, invert_increasing)

DEFAULT_MARGIN = 0.5
N_NORMALIZE_SAMPLES = 1024
RANGE_ENLARGEMENT = 1.05


@dataclass(frozen=True)
class FluxSpec:
    """Normalized scalar flux.

    ``f`` and ``f_prime`` are the L-shifted flux ``a -> f_raw(a - L)`` and its
    derivative; the flux actually used by the conservation law is
    ``flux(a) = f(a) + K``.  ``data_range`` is in shifted density.
    """

    f: Callable
    f_prime: Callable
    data_range: tuple[float, float]
    L: float = 0.0
    K: float = 0.0
    name: str = "custom"

    def flux(self, rho):
        return self.f(rho) + self.K

    def speed(self, rho):
        return self.f_prime(rho)

    def to_raw(self, rho):
        return rho - self.L

    def from_raw(self, rho):
        return rho + self.L

    @cached_property
    def critical_points(self) -> np.ndarray:
        lo, hi = self.data_range
        return critical_points(self.f_prime, lo, hi)

    def max_speed(self, lo: float | None = None, hi: float | None = None) -> float:
        lo = self.data_range[0] if lo is None else lo
        hi = self.data_range[1] if hi is None else hi
        pts = np.concatenate(([lo, hi], self.critical_points, np.linspace(lo, hi, 65)))
        return float(np.max(np.abs(self.f_prime(pts))))


def feasible_k_interval(f: Callable, f_prime: Callable, lo: float, hi: float,
                        n: int = N_NORMALIZE_SAMPLES) -> tuple[float, float]:
    """Sampled open interval of flux shifts K making ``(f + K)/a`` positive and increasing.

    Positivity needs ``K > -min f``; monotonicity needs ``K < min(a f' - f)``.
    """
    a = np.linspace(lo, hi, n)
    fa = np.asarray(f(a), dtype=float)
    return float(-np.min(fa)), float(np.min(a * np.asarray(f_prime(a), dtype=float) - fa))


def normalize(f: Callable, f_prime: Callable, raw_range: tuple[float, float],
              margin: float = DEFAULT_MARGIN, L: float | None = None,
              K: float | None = None, name: str = "custom") -> FluxSpec:
    """Shift density and flux so that ``(f + K)/a`` is positive and increasing.

    Parameters
    ----------
    f, f_prime : callable
        Raw flux and its derivative, vectorised over numpy arrays.
    raw_range : (float, float)
        Range of the raw initial density.
    margin : float
        Minimal shifted density used when choosing ``L``.
    L, K : float, optional
        Overrides for the density and flux shifts.  An override that breaks
        the invariants raises InfeasibleNormalization.

    Returns
    -------
    FluxSpec
        With ``L = max(0, margin - rho_min)`` and ``K`` the midpoint of the
        sampled feasible interval unless overridden.
    """
    rmin, rmax = map(float, raw_range)
    if rmax < rmin:
        raise ValueError("raw_range must be ordered")
    check_derivative(f, f_prime, rmin, rmax, name=name)
    if L is None:
        L = max(0.0, margin - rmin)
    L = float(L)

    def shifted(a, _f=f, _L=L):
        return _f(a - _L)

    def shifted_prime(a, _fp=f_prime, _L=L):
        return _fp(a - _L)

    lo, hi = rmin + L, rmax + L
    if lo <= 0:
        raise InfeasibleNormalization(f"shifted density range [{lo:g}, {hi:g}] is not positive")
    k_lo, k_hi = feasible_k_interval(shifted, shifted_prime, lo, hi)
    if K is None:
        if not k_lo < k_hi:
            raise InfeasibleNormalization(
                f"no flux shift K makes f(a)/a positive and increasing on "
                f"[{lo:g}, {hi:g}]: sampled feasible interval ({k_lo:.6g}, {k_hi:.6g}) is empty")
        K = 0.5 * (k_lo + k_hi)
    K = float(K)
    if not k_lo < K < k_hi:
        raise InfeasibleNormalization(
            f"K={K:g} outside the sampled feasible interval ({k_lo:.6g}, {k_hi:.6g})")
    return FluxSpec(shifted, shifted_prime, (lo, hi), L, K, name)


class VelocityLaw:
    """Velocity ``F`` as a function of density, with its numerical inverse ``g``.

    ``rho_bracket`` bounds every inversion; ``data_range`` is the density
    interval the law was built for.
    """

    def __init__(self, F: Callable, F_prime: Callable, data_range: tuple[float, float],
                 rho_bracket: tuple[float, float] | None = None):
        self.F = F
        self.F_prime = F_prime
        self.data_range = (float(data_range[0]), float(data_range[1]))
        if rho_bracket is None:
            rho_bracket = _safe_bracket(F, F_prime, self.data_range)
        self.rho_bracket = (float(rho_bracket[0]), float(rho_bracket[1]))

    @property
    def u_range(self) -> tuple[float, float]:
        lo, hi = self.data_range
        return float(self.F(lo)), float(self.F(hi))

    @property
    def u_bracket(self) -> tuple[float, float]:
        lo, hi = self.rho_bracket
        return float(self.F(lo)), float(self.F(hi))

    def g(self, u):
        lo, hi = self.rho_bracket
        return invert_increasing(self.F, self.F_prime, u, lo, hi)

    def g_prime(self, u):
        return 1.0 / self.F_prime(self.g(u))

    def lagrangian_speed(self, eta, v):
        """Characteristic speed ``F'(v/eta) v / eta**2`` of the stretch equation."""
        rho = v / eta
        return self.F_prime(rho) * rho / eta


def _safe_bracket(F, F_prime, data_range):
    """Widest of a few enlargements of ``data_range`` on which F stays positive and increasing."""
    lo, hi = data_range
    for factor in (2.0, 1.5, 1.25, RANGE_ENLARGEMENT):
        wide = (lo / factor, hi * factor)
        xs = np.linspace(*wide, 1025)
        with np.errstate(all="ignore"):
            Fx = np.asarray(F(xs), dtype=float)
            dF = np.asarray(F_prime(xs), dtype=float)
        if np.all(np.isfinite(Fx)) and np.all(Fx > 0) and np.all(np.diff(Fx) > 0) and np.all(dF > 0):
            return wide
    return data_range


def velocity_law(spec: FluxSpec) -> VelocityLaw:
    """``F(a) = (f(a) + K)/a`` for a normalized flux."""
    f, fp, K = spec.f, spec.f_prime, spec.K

    def F(rho):
        return (f(rho) + K) / rho

    def F_prime(rho):
        return (fp(rho) * rho - f(rho) - K) / rho ** 2

    return VelocityLaw(F, F_prime, spec.data_range)


@dataclass(frozen=True)
class ActionPotential:
    """Action potential ``b`` with ``b'``, ``b''`` and ``B = (b')^{-1}``."""

    b: Callable
    b_prime: Callable
    b_second: Callable
    B: Callable
    u_ref: float
    u_range: tuple[float, float]
    B_prime: Callable | None = field(default=None, compare=False)

    def dB(self, xi):
        if self.B_prime is not None:
            return self.B_prime(xi)
        return 1.0 / self.b_second(self.B(xi))


def potential_from_flux(vel: VelocityLaw, u_ref: float | None = None,
                        n_knots: int = 33, tol: float = 1e-10) -> ActionPotential:
    """Build ``b`` with ``b' = g**2`` and ``b(u_ref) = 0``.

    Values of ``b`` at knots spanning the velocity bracket come from adaptive
    Simpson; between knots a 16-point Gauss rule integrates ``g**2`` from the
    nearest knot, so ``b`` stays vectorised.
    """
    u_lo, u_hi = vel.u_bracket
    if u_ref is None:
        u_ref = vel.u_range[0]
    u_ref = float(u_ref)
    if not u_lo <= u_ref <= u_hi:
        raise InversionFailure(f"u_ref={u_ref:g} outside velocity bracket [{u_lo:g}, {u_hi:g}]")

    def bp(u):
        return vel.g(u) ** 2

    knots = np.unique(np.concatenate((np.linspace(u_lo, u_hi, n_knots), [u_ref])))
    iref = int(np.searchsorted(knots, u_ref))
    seg_tol = tol / len(knots)
    vals = np.zeros(knots.size)
    for i in range(iref + 1, knots.size):
        vals[i] = vals[i - 1] + adaptive_simpson(bp, knots[i - 1], knots[i], seg_tol)
    for i in range(iref - 1, -1, -1):
        vals[i] = vals[i + 1] - adaptive_simpson(bp, knots[i], knots[i + 1], seg_tol)

    def b(u):
        u = np.asarray(u, dtype=float)
        k = np.clip(np.searchsorted(knots, u, side="right") - 1, 0, knots.size - 1)
        near = np.where(np.abs(knots[np.minimum(k + 1, knots.size - 1)] - u)
                        < np.abs(knots[k] - u), np.minimum(k + 1, knots.size - 1), k)
        out = vals[near] + gauss_integral(bp, knots[near], u)
        return float(out) if out.ndim == 0 else out

    def b_second(u):
        g = vel.g(u)
        return 2.0 * g / vel.F_prime(g)

    def B(xi):
        return vel.F(np.sqrt(xi))

    def B_prime(xi):
        r = np.sqrt(xi)
        return vel.F_prime(r) / (2.0 * r)

    return ActionPotential(b, bp, b_second, B, u_ref, vel.u_range, B_prime)


def flux_from_potential(pot: ActionPotential) -> tuple[VelocityLaw, FluxSpec]:
    """Velocity ``F(xi) = B(xi**2)`` and flux ``f(rho) = rho F(rho)`` from a potential."""
    B, dB = pot.B, pot.dB

    def F(rho):
        return B(rho ** 2)

    def F_prime(rho):
        return 2.0 * rho * dB(rho ** 2)

    def f(rho):
        return rho * F(rho)

    def f_prime(rho):
        return F(rho) + rho * F_prime(rho)

    u_lo, u_hi = pot.u_range
    rho_range = (float(np.sqrt(pot.b_prime(u_lo))), float(np.sqrt(pot.b_prime(u_hi))))
    vel = VelocityLaw(F, F_prime, rho_range)
    spec = FluxSpec(f, f_prime, rho_range, 0.0, 0.0, "from-potential")
    return vel, spec


def breakdown_time(spec: FluxSpec, rho0: GridFunction) -> float:
    """Characteristic-crossing time ``-1 / min D_x f'(rho0)``, or ``inf``."""
    c = spec.f_prime(rho0.padded(1))
    slope = (c[2:] - c[:-2]) / (2.0 * rho0.dx)
    m = float(np.min(slope))
    return -1.0 / m if m < 0 else float("inf")
