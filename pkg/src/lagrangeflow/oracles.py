"""Independent reference solutions for smooth data: characteristics and particle paths."""
from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp


def characteristics_density(speed: Callable, rho0: Callable, y, t: float,
                            iterations: int = 200) -> np.ndarray:
    """Density at ``(y, t)`` from ``rho(xi + speed(rho0(xi)) t, t) = rho0(xi)``.

    The foot ``xi`` is found by bisection, valid while characteristics have
    not crossed (the map ``xi -> xi + speed(rho0(xi)) t`` is increasing).
    """
    y = np.asarray(y, dtype=float)
    if t == 0:
        return np.asarray(rho0(y), dtype=float)
    probe = np.linspace(np.min(y) - 1.0, np.max(y) + 1.0, 4097)
    c = np.asarray(speed(rho0(probe)), dtype=float)
    a = y - np.max(c) * t - 1e-12
    b = y - np.min(c) * t + 1e-12
    for _ in range(iterations):
        m = 0.5 * (a + b)
        below = m + speed(rho0(m)) * t < y
        a = np.where(below, m, a)
        b = np.where(below, b, m)
    return np.asarray(rho0(0.5 * (a + b)), dtype=float)


def particle_paths(velocity: Callable, x0, t_eval, rtol: float = 1e-11, atol: float = 1e-12) -> np.ndarray:
    """Integrate ``d gamma/dt = velocity(gamma, t)`` from ``gamma(x, 0) = x``.

    Returns an array of shape ``(len(t_eval), len(x0))``.
    """
    x0 = np.asarray(x0, dtype=float)
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval[-1] == 0:
        return np.tile(x0, (t_eval.size, 1))
    sol = solve_ivp(lambda t, g: velocity(g, t), (0.0, float(t_eval[-1])), x0,
                    t_eval=t_eval, rtol=rtol, atol=atol, method="DOP853")
    return sol.y.T
