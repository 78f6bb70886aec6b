"""Quadrature, monotone inversion and root bracketing shared by the solvers."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import DerivativeMismatch, InversionFailure, QuadratureFailure

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-10, max_level: int = 20) -> float:
    """Integrate ``f`` over ``[a, b]`` by recursive Simpson with Richardson correction.

    Raises QuadratureFailure when some subinterval still misses its share of
    ``tol`` after ``max_level`` bisections.
    """
    if a == b:
        return 0.0

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, level):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        if level >= max_level:
            raise QuadratureFailure(
                f"adaptive Simpson did not reach tol={tol:g} on [{a:g}, {b:g}] "
                f"within {max_level} refinement levels")
        return (recurse(a, m, fa, flm, fm, left, 0.5 * tol, level + 1)
                + recurse(m, b, fm, frm, fb, right, 0.5 * tol, level + 1))

    fa, fb = f(a), f(b)
    fm = f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 0)


def gauss_integral(f: Callable[[np.ndarray], np.ndarray], a, b) -> np.ndarray:
    """Vectorised 16-point Gauss-Legendre integral of ``f`` from ``a`` to ``b``.

    ``a`` and ``b`` broadcast; intended for short, smooth intervals.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    total = np.zeros(np.broadcast(a, b).shape)
    for s, w in zip(_GL_NODES, _GL_WEIGHTS):
        total = total + w * f(mid + half * s)
    return total * half


def invert_increasing(func: Callable, dfunc: Callable | None, y, lo: float, hi: float,
                      tol: float = 1e-12, max_iter: int = 80):
    """Solve ``func(x) = y`` for increasing ``func`` on ``[lo, hi]``.

    Bisection safeguarded Newton, vectorised over ``y``.  Each iterate keeps a
    bracket; a Newton step leaving the bracket is replaced by its midpoint.
    Raises InversionFailure if ``y`` is outside ``[func(lo), func(hi)]`` or the
    residual does not reach ``tol * (1 + |y|)``.
    """
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    flo, fhi = float(func(lo)), float(func(hi))
    slack = tol * (1.0 + np.abs(y))
    if np.any(y < flo - slack) or np.any(y > fhi + slack):
        bad = y[(y < flo - slack) | (y > fhi + slack)][0]
        raise InversionFailure(
            f"value {bad!r} outside the bracket image [{flo!r}, {fhi!r}]")
    a = np.full(y.shape, float(lo))
    b = np.full(y.shape, float(hi))
    x = a + (b - a) * np.clip((y - flo) / (fhi - flo), 0.0, 1.0)
    for _ in range(max_iter):
        r = np.asarray(func(x), dtype=float) - y
        done = np.abs(r) <= tol * (1.0 + np.abs(y))
        if np.all(done):
            break
        a = np.where(r < 0, x, a)
        b = np.where(r > 0, x, b)
        if dfunc is not None:
            d = np.asarray(dfunc(x), dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = x - r / d
            ok = np.isfinite(xn) & (xn > a) & (xn < b)
        else:
            xn = x
            ok = np.zeros(x.shape, dtype=bool)
        x = np.where(done, x, np.where(ok, xn, 0.5 * (a + b)))
    r = np.asarray(func(x), dtype=float) - y
    if np.any(np.abs(r) > tol * (1.0 + np.abs(y))):
        raise InversionFailure(
            f"inversion residual {np.max(np.abs(r)):.3e} exceeds tol={tol:g} "
            f"after {max_iter} iterations (function not monotone on the bracket?)")
    return float(x[0]) if scalar else x


def critical_points(dfunc: Callable, lo: float, hi: float, n_sub: int = 64,
                    iters: int = 200) -> np.ndarray:
    """Roots of ``dfunc`` in ``(lo, hi)`` from sign changes on ``n_sub`` subintervals."""
    xs = np.linspace(lo, hi, n_sub + 1)
    ds = np.asarray(dfunc(xs), dtype=float)
    roots = []
    for i in range(n_sub):
        da, db = ds[i], ds[i + 1]
        if da == 0.0 and 0 < i:
            roots.append(xs[i])
            continue
        if da * db < 0:
            a, b = xs[i], xs[i + 1]
            for _ in range(iters):
                m = 0.5 * (a + b)
                dm = float(dfunc(m))
                if dm == 0.0 or b - a <= 4 * np.finfo(float).eps * max(1.0, abs(m)):
                    break
                if (dm < 0) == (da < 0):
                    a = m
                else:
                    b = m
            roots.append(0.5 * (a + b))
    return np.array(roots, dtype=float)


def check_derivative(func: Callable, dfunc: Callable, lo: float, hi: float,
                     name: str = "f", n: int = 33, rtol: float = 1e-6) -> None:
    """Compare a supplied derivative with central differences at ``h = 1e-5 * scale``."""
    scale = max(abs(lo), abs(hi), hi - lo, 1.0)
    h = 1e-5 * scale
    xs = np.linspace(lo, hi, n)
    fd = (np.asarray(func(xs + h), dtype=float) - np.asarray(func(xs - h), dtype=float)) / (2 * h)
    given = np.asarray(dfunc(xs), dtype=float)
    ref = max(float(np.max(np.abs(given))), 1.0)
    err = float(np.max(np.abs(fd - given)))
    if not err <= rtol * ref:
        raise DerivativeMismatch(
            f"supplied derivative of {name} disagrees with central differences "
            f"by {err:.3e} (relative {err / ref:.3e} > {rtol:g})")


def observed_order(errors, ratio: float = 2.0) -> np.ndarray:
    """Pairwise convergence orders ``log(e_k / e_{k+1}) / log(ratio)``."""
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / math.log(ratio)
