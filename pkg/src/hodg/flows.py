"""Initial flow fields and exact reference solutions.

Nondimensionalization: freestream density and temperature are 1, so the
freestream pressure is R and the sound speed sqrt(gamma * R); velocities
scale with the freestream Mach number.
"""

from __future__ import annotations

import numpy as np

from .physics import Conserved, GasModel, Primitive

__all__ = [
    "freestream_primitive",
    "freestream_conserved",
    "vortex_primitive",
    "vortex_density",
    "pulse_primitive",
]


def freestream_primitive(gas: GasModel, mach: float, angle_deg: float) -> Primitive:
    rho = 1.0
    T = 1.0
    p = rho * gas.R * T
    a = np.sqrt(gas.gamma * gas.R * T)
    ang = np.deg2rad(angle_deg)
    return Primitive(rho=rho, u=mach * a * np.cos(ang), v=mach * a * np.sin(ang), p=p, T=T)


def freestream_conserved(gas: GasModel, mach: float, angle_deg: float) -> Conserved:
    w = freestream_primitive(gas, mach, angle_deg)
    e = w.p / (gas.gamma - 1.0) + 0.5 * w.rho * (w.u * w.u + w.v * w.v)
    return Conserved(rho=w.rho, rho_u=w.rho * w.u, rho_v=w.rho * w.v, e=e)


def vortex_primitive(gas, mach, angle_deg, beta, x0, y0, t, x, y) -> Primitive:
    """Isentropic vortex of strength beta advecting with the freestream;
    an exact Euler solution, evaluated at time t."""
    inf = freestream_primitive(gas, mach, angle_deg)
    xr = np.asarray(x, dtype=np.float64) - x0 - inf.u * t
    yr = np.asarray(y, dtype=np.float64) - y0 - inf.v * t
    r2 = xr * xr + yr * yr
    g = gas.gamma
    vel_scale = np.sqrt(gas.R)  # carries the temperature units
    envelope = np.exp(0.5 * (1.0 - r2))
    u = inf.u - beta / (2.0 * np.pi) * yr * envelope * vel_scale
    v = inf.v + beta / (2.0 * np.pi) * xr * envelope * vel_scale
    T = 1.0 - (g - 1.0) * beta * beta / (8.0 * g * np.pi * np.pi) * np.exp(1.0 - r2)
    rho = T ** (1.0 / (g - 1.0))
    p = rho * gas.R * T
    return Primitive(rho=rho, u=u, v=v, p=p, T=T)


def vortex_density(gas, mach, angle_deg, beta, x0, y0, t, x, y) -> np.ndarray:
    return np.asarray(vortex_primitive(gas, mach, angle_deg, beta, x0, y0, t, x, y).rho)


def pulse_primitive(gas, amplitude, sigma, x0, y0, x, y, mach=0.0, angle_deg=0.0) -> Primitive:
    """Freestream flow with an isentropic Gaussian pressure bump riding on
    it. The bump radiates and advects away, so with absorbing boundaries
    the field relaxes to the uniform freestream: a steady-convergence
    test case."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    inf = freestream_primitive(gas, mach, angle_deg) if mach > 0.0 else None
    r2 = (x - x0) ** 2 + (y - y0) ** 2
    p_inf = gas.R
    p = p_inf * (1.0 + amplitude * np.exp(-0.5 * r2 / (sigma * sigma)))
    rho = (p / p_inf) ** (1.0 / gas.gamma)
    u = np.full_like(p, inf.u) if inf else np.zeros_like(p)
    v = np.full_like(p, inf.v) if inf else np.zeros_like(p)
    return Primitive(rho=rho, u=u, v=v, p=p, T=p / (rho * gas.R))
