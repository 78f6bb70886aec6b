"""Built-in fluxes, pressure laws and initial profiles."""
from __future__ import annotations

from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ConfigError
from .systems import PressureLaw

# name -> (flux, derivative, description); raw (pre-normalization) densities
FLUXES: dict[str, tuple[Callable, Callable, str]] = {
    "burgers": (lambda r: 0.5 * r ** 2, lambda r: 1.0 * r, "f(rho) = rho^2/2"),
    "cubic": (lambda r: r ** 3, lambda r: 3.0 * r ** 2, "f(rho) = rho^3"),
    "lwr": (lambda r: r * (1.0 - r), lambda r: 1.0 - 2.0 * r,
            "f(rho) = rho (1 - rho), traffic flow"),
}

PRESSURES = {
    "power": ("p(rho) = kappa rho^alpha", {"kappa": 1.0, "alpha": 2.0}),
}


def _constant(x, value):
    return np.full_like(np.asarray(x, dtype=float), float(value))


def _riemann(x, left, right, x_jump=0.0):
    return np.where(np.asarray(x) < x_jump, float(left), float(right))


def _sine(x, mean, amplitude, wavenumber=1.0, phase=0.0, period=1.0):
    return mean + amplitude * np.sin(2 * np.pi * wavenumber * np.asarray(x) / period + phase)


def _bump(x, base, amplitude, center, width):
    r = (np.asarray(x) - center) / width
    return base + amplitude * np.where(np.abs(r) < 1, np.cos(0.5 * np.pi * r) ** 2, 0.0)


# name -> (function, required params, optional params with defaults, description)
PROFILES = {
    "constant": (_constant, ("value",), {}, "rho0(x) = value"),
    "riemann": (_riemann, ("left", "right"), {"x_jump": 0.0},
                "left for x < x_jump, right otherwise"),
    "sine": (_sine, ("mean", "amplitude"), {"wavenumber": 1.0, "phase": 0.0, "period": 1.0},
             "mean + amplitude sin(2 pi wavenumber x / period + phase)"),
    "bump": (_bump, ("base", "amplitude", "center", "width"), {},
             "base + amplitude cos^2(pi (x - center) / (2 width)) on |x - center| < width"),
}


def flux_from_config(cfg: dict) -> tuple[Callable, Callable, str]:
    if "polynomial" in cfg:
        if "name" in cfg:
            raise ConfigError("flux: give either 'name' or 'polynomial', not both")
        poly = Polynomial([float(c) for c in cfg["polynomial"]])
        dpoly = poly.deriv()
        return poly, dpoly, "polynomial" + str(list(poly.coef))
    name = cfg.get("name")
    if name not in FLUXES:
        raise ConfigError(f"flux: unknown built-in {name!r} (known: {', '.join(sorted(FLUXES))})")
    f, fp, _ = FLUXES[name]
    return f, fp, name


def pressure_from_config(cfg: dict) -> PressureLaw:
    name = cfg.get("name", "power")
    if name not in PRESSURES:
        raise ConfigError(f"pressure: unknown law {name!r}")
    params = dict(PRESSURES[name][1])
    params.update({k: float(v) for k, v in cfg.items() if k != "name"})
    return PressureLaw.power(params["kappa"], params["alpha"])


def profile_from_config(cfg: dict, where: str = "initial") -> Callable:
    name = cfg.get("profile")
    if name not in PROFILES:
        raise ConfigError(f"{where}: unknown profile {name!r} (known: {', '.join(sorted(PROFILES))})")
    func, required, optional, _ = PROFILES[name]
    params = {k: v for k, v in cfg.items() if k != "profile"}
    allowed = set(required) | set(optional)
    unknown = sorted(set(params) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown parameter {unknown[0]!r} for profile {name!r}")
    missing = [k for k in required if k not in params]
    if missing:
        raise ConfigError(f"{where}: profile {name!r} requires {missing[0]!r}")
    kwargs = {**optional, **{k: float(v) for k, v in params.items()}}
    return lambda x: func(x, **kwargs)


def listing() -> str:
    """Stable, human-readable catalog text."""
    lines = ["fluxes:"]
    for name in sorted(FLUXES):
        lines.append(f"  {name:<10} {FLUXES[name][2]}")
    lines.append("  {'polynomial': [c0, c1, ...]}  f(rho) = sum c_k rho^k")
    lines.append("pressure laws:")
    for name in sorted(PRESSURES):
        desc, defaults = PRESSURES[name]
        params = ", ".join(f"{k}={v:g}" for k, v in sorted(defaults.items()))
        lines.append(f"  {name:<10} {desc} (defaults: {params})")
    lines.append("initial profiles:")
    for name in sorted(PROFILES):
        _, req, opt, desc = PROFILES[name]
        params = ", ".join(list(req) + [f"{k}={v:g}" for k, v in opt.items()])
        lines.append(f"  {name:<10} {desc} [{params}]")
    return "\n".join(lines) + "\n"
