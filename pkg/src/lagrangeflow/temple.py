"""Upwind solver for the Lagrangian Temple system ``eta_t = F(v/eta)_x``, ``v_t = 0``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CFLViolation, PositivityLoss
from .eulerian import DEFAULT_CFL, MAX_CFL, output_schedule
from .flux import RANGE_ENLARGEMENT, VelocityLaw
from .grid import PERIODIC, GridFunction

ETA_MIN = 1e-8


@dataclass(frozen=True)
class TempleState:
    """Stretch ``eta = gamma_x`` and the frozen field ``v`` on the reference mesh."""

    eta: GridFunction
    v: GridFunction
    vel: VelocityLaw

    @property
    def density(self) -> np.ndarray:
        return self.v.values / self.eta.values

    @property
    def velocity(self) -> np.ndarray:
        """Particle velocity ``F(v/eta)`` per cell."""
        return self.vel.F(self.density)

    def validate(self) -> None:
        if np.any(self.eta.values <= 0):
            raise PositivityLoss("eta must be positive")
        if np.any(self.v.values <= 0):
            raise PositivityLoss("v must be positive")
        lo, hi = self.vel.data_range
        r = self.density
        if np.min(r) < lo / RANGE_ENLARGEMENT or np.max(r) > hi * RANGE_ENLARGEMENT:
            raise PositivityLoss(
                f"v/eta range [{np.min(r):.6g}, {np.max(r):.6g}] leaves the data range "
                f"[{lo:.6g}, {hi:.6g}] beyond the enlargement factor")


def init_temple(vel: VelocityLaw, rho0: GridFunction) -> TempleState:
    """``eta = 1`` and ``v = rho0``, so that ``v/eta`` starts as the initial density."""
    state = TempleState(rho0.with_values(np.ones(rho0.n)), rho0, vel)
    state.validate()
    return state


def eta_interface_flux(vel: VelocityLaw, eta_l, v_l, eta_r=None, v_r=None):
    """Flux of ``eta_t + G_x = 0`` with ``G = -F(v/eta)``.

    The non-degenerate wave moves right and the ``v`` contact is stationary,
    so the Godunov flux is the left state's value.  The right state is
    accepted for interface symmetry and ignored.
    """
    return -vel.F(np.asarray(v_l, dtype=float) / np.asarray(eta_l, dtype=float))


@dataclass
class TempleTrajectory:
    """Stored states plus the per-step velocity of the left mesh edge."""

    states: list[TempleState]
    times: np.ndarray
    cfl: float
    anchor_times: list[float] = field(default_factory=list)
    anchor_velocity: list[float] = field(default_factory=list)
    stretch_history: list[float] = field(default_factory=list)
    steps: int = 0

    @property
    def stretch_drift(self) -> float:
        s = np.asarray(self.stretch_history)
        return float(np.max(np.abs(s - s[0])) / abs(s[0]))

    def at(self, t: float) -> TempleState:
        return self.states[int(np.argmin(np.abs(self.times - t)))]


def _edge_fluxes(state: TempleState) -> np.ndarray:
    rho = state.density
    if state.eta.boundary == PERIODIC:
        left = np.concatenate(([rho[-1]], rho))
    else:
        left = np.concatenate(([rho[0]], rho))
    return -state.vel.F(left)


def temple_dt(state: TempleState, cfl: float) -> float:
    lam = float(np.max(state.vel.lagrangian_speed(state.eta.values, state.v.values)))
    return math.inf if lam <= 0 else cfl * state.eta.dx / lam


def temple_step(state: TempleState, dt: float, cfl: float = MAX_CFL) -> TempleState:
    bound = temple_dt(state, cfl)
    if dt > bound * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.6g} exceeds the CFL bound {bound:.6g}")
    G = _edge_fluxes(state)
    eta = state.eta.values - (dt / state.eta.dx) * (G[1:] - G[:-1])
    if np.any(eta <= ETA_MIN):
        i = int(np.argmin(eta))
        raise PositivityLoss(
            f"eta fell to {eta[i]:.3e} <= {ETA_MIN:g} in cell {i} "
            f"(x={state.eta.centers[i]:.6g}); leaving the bi-Lipschitz regime")
    return TempleState(state.eta.with_values(eta), state.v, state.vel)


def solve_temple(state0: TempleState, T: float, cfl: float = DEFAULT_CFL,
                 output_times=None) -> TempleTrajectory:
    """Advance ``eta`` conservatively; ``v`` is the same object at every level."""
    if cfl > MAX_CFL:
        raise CFLViolation(f"cfl={cfl:g} exceeds {MAX_CFL}")
    state0.validate()
    times = output_schedule(T, output_times)
    traj = TempleTrajectory([state0], times, cfl)
    state = state0
    t = 0.0
    traj.anchor_times.append(t)
    traj.anchor_velocity.append(float(-_edge_fluxes(state)[0]))
    traj.stretch_history.append(state.eta.total())
    k = 1
    while k < times.size:
        dt = temple_dt(state, cfl)
        target = times[k]
        landing = dt >= target - t
        if landing:
            dt = target - t
        state = temple_step(state, dt, cfl)
        t = target if landing else t + dt
        traj.steps += 1
        traj.anchor_times.append(t)
        traj.anchor_velocity.append(float(-_edge_fluxes(state)[0]))
        traj.stretch_history.append(state.eta.total())
        if landing:
            traj.states.append(state)
            k += 1
    return traj
