"""Particle-path map reconstruction from the stretch field, inversion, density recovery."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import AnchorDrift, MonotonicityLoss, OutOfRange
from .grid import CONSTANT, PERIODIC, GridFunction
from .temple import ETA_MIN, TempleState, TempleTrajectory

ANCHOR_TOL = 1e-8


@dataclass(frozen=True)
class FlowMap:
    """Monotone piecewise-linear map ``x -> gamma(x, t)`` stored at mesh edges."""

    x: np.ndarray
    gamma: np.ndarray
    t: float
    boundary: str = CONSTANT

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        g = np.asarray(self.gamma, dtype=float)
        if x.shape != g.shape or x.ndim != 1 or x.size < 2:
            raise ValueError("x and gamma must be matching 1-D arrays")
        dx = float(np.min(np.diff(x)))
        gaps = np.diff(g)
        if np.any(gaps < ETA_MIN * dx * (1 - 1e-12)):
            i = int(np.argmin(gaps))
            raise MonotonicityLoss(
                f"flow map folds at t={self.t:g}: gamma[{i + 1}] - gamma[{i}] = {gaps[i]:.3e}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "gamma", g)

    @property
    def period(self) -> float:
        return float(self.x[-1] - self.x[0])

    def __call__(self, x):
        """Forward evaluation; periodic maps use ``gamma(x + P) = gamma(x) + P``."""
        x = np.asarray(x, dtype=float)
        if self.boundary == PERIODIC:
            P = self.period
            k = np.floor((x - self.x[0]) / P)
            return np.interp(x - k * P, self.x, self.gamma) + k * P
        return np.interp(x, self.x, self.gamma)


def invert(fmap: FlowMap, y):
    """``gamma^{-1}(y)`` by binary search over nodes and linear interpolation."""
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    g0, g1 = fmap.gamma[0], fmap.gamma[-1]
    shift = np.zeros_like(y)
    if fmap.boundary == PERIODIC:
        P = fmap.period
        k = np.floor((y - g0) / P)
        shift = k * P
        y = y - shift
    else:
        slack = 1e-12 * max(1.0, abs(g1 - g0))
        bad = (y < g0 - slack) | (y > g1 + slack)
        if np.any(bad):
            raise OutOfRange(f"y={y[bad][0]!r} outside the image [{g0!r}, {g1!r}]")
    j = np.clip(np.searchsorted(fmap.gamma, y, side="right") - 1, 0, fmap.gamma.size - 2)
    ga, gb = fmap.gamma[j], fmap.gamma[j + 1]
    xa, xb = fmap.x[j], fmap.x[j + 1]
    out = xa + (y - ga) * (xb - xa) / (gb - ga) + shift
    return float(out[0]) if scalar else out


def flow_maps_from_stretch(edges: np.ndarray, etas, times, anchor_times, anchor_velocity,
                           boundary: str) -> list[FlowMap]:
    """Integrate ``gamma_x = eta`` in space from a time-integrated left anchor.

    The anchor ``gamma(x_0, t)`` is ``x_0`` plus the trapezoid integral of the
    recorded left-edge velocity; ``times`` must be a subset of ``anchor_times``.
    """
    at = np.asarray(anchor_times, dtype=float)
    disp = cumulative_trapezoid(np.asarray(anchor_velocity, dtype=float), at, initial=0.0)
    dx = edges[1] - edges[0]
    maps = []
    for eta, t in zip(etas, times):
        i = int(np.searchsorted(at, t))
        if i >= at.size or at[i] != t:
            raise ValueError(f"output time {t!r} not on the step history")
        gamma = edges[0] + disp[i] + np.concatenate(([0.0], np.cumsum(eta * dx)))
        maps.append(FlowMap(edges, gamma, float(t), boundary))
    return maps


def reconstruct(traj: TempleTrajectory, vel=None) -> list[FlowMap]:
    """Flow maps at every stored time of a Temple trajectory.

    For a constant-extension window the anchor is the left edge, whose state
    must stay at its initial value (else AnchorDrift: the window is too small).
    """
    s0 = traj.states[0]
    if s0.eta.boundary == CONSTANT:
        u0 = float(s0.velocity[0])
        for s in traj.states:
            if abs(s.eta.values[0] - 1.0) > ANCHOR_TOL or abs(float(s.velocity[0]) - u0) > ANCHOR_TOL:
                raise AnchorDrift(f"left-edge state changed by t={traj.times[-1]:g}; enlarge the window")
    return flow_maps_from_stretch(s0.eta.edges, [s.eta.values for s in traj.states], traj.times,
                                  traj.anchor_times, traj.anchor_velocity, s0.eta.boundary)


def mixed_partial_residual(traj: TempleTrajectory) -> float:
    """Max of ``|D_t gamma_x - D_x gamma_t|`` with ``gamma_x = eta``, ``gamma_t = F(v/eta)``.

    Time differences between consecutive stored states, centred space
    differences averaged over the two levels, interior cells only.
    """
    worst = 0.0
    for a, b, ta, tb in zip(traj.states[:-1], traj.states[1:], traj.times[:-1], traj.times[1:]):
        dt_eta = (b.eta.values - a.eta.values) / (tb - ta)
        dx_u = 0.5 * (_centred(a) + _centred(b))
        worst = max(worst, float(np.max(np.abs(dt_eta - dx_u)[1:-1])))
    return worst


def _centred(state: TempleState) -> np.ndarray:
    u = state.vel.F(state.v.padded(1) / state.eta.padded(1))
    return (u[2:] - u[:-2]) / (2.0 * state.eta.dx)


def lagrangian_density(state: TempleState, fmap: FlowMap, y):
    """``(v/eta)(gamma^{-1}(y))`` with piecewise-constant cell lookup."""
    x = invert(fmap, y)
    return state.v.lookup(x) / state.eta.lookup(x)


def correspondence_error(rho_eul: GridFunction, state: TempleState, fmap: FlowMap) -> float:
    """Normalised L1 distance between Eulerian and recovered Lagrangian densities."""
    lag = lagrangian_density(state, fmap, rho_eul.centers)
    return float(np.sum(np.abs(rho_eul.values - lag)) * rho_eul.dx / rho_eul.length)


def extend_reference_mesh(rho0: GridFunction, max_velocity: float, T: float) -> GridFunction:
    """Left-pad a constant-extension window so its image still covers the window at ``T``."""
    if rho0.boundary == PERIODIC:
        return rho0
    pad = int(math.ceil(max_velocity * T / rho0.dx)) + 2
    return GridFunction(np.pad(rho0.values, (pad, 0), mode="edge"), rho0.dx,
                        rho0.x0 - pad * rho0.dx, rho0.boundary)
