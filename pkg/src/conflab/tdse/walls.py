"""Finite smoothed walls that reproduce hard-wall box levels, and wall schedules.

A hard wall cannot be represented on a grid, so walls are barriers of
height ``v0`` with an error-function edge of width ``s``.  A soft barrier
lets the wavefunction leak in by an energy dependent distance ``d(E)``; the
barrier centre is therefore placed ``d(E1(w))`` inside the nominal wall
position, which makes the barrier box's ground level equal the hard-wall
level of nominal width ``w``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.special import erfc


def wall_profile(u, v0: float, s: float):
    """Barrier rising from 0 (u << 0) to v0 (u >> 0) with an erf edge of width s."""
    u = np.asarray(u, dtype=float)
    if s <= 0:
        return v0 * (u > 0)
    return v0 * 0.5 * erfc(-u / s)


def wall_offset(energy, v0: float, s: float, mass: float = 1.0) -> np.ndarray:
    """Hard-wall-equivalent penetration depth of a single smoothed barrier.

    Integrates the Riccati equation y' = 2m (V - E) - y^2 for y = psi'/psi
    from deep inside the barrier (where y = -kappa) out to the flat region
    and matches to sin(k (d - u)); ``d`` is returned.  Vectorized over
    ``energy``.  For ``s = 0`` this reduces to arctan(k / kappa) / k.
    """
    E = np.atleast_1d(np.asarray(energy, dtype=float))
    if np.any(E <= 0) or np.any(E >= v0):
        raise ValueError("wall_offset needs 0 < E < v0")
    kap = np.sqrt(2 * mass * (v0 - E))
    k = np.sqrt(2 * mass * E)
    if s <= 0:
        return np.arctan(k / kap) / k
    # beyond +-6s the barrier is flat to 1e-17 and y = -kappa is exact there
    u0 = 6.0 * s
    u1 = -6.0 * s
    h = min(s, 1.0 / kap.max(), 1.0 / k.max()) / 40.0
    n = int(math.ceil((u0 - u1) / h))
    h = (u1 - u0) / n  # negative: integrate toward the interior

    def f(u, y):
        return 2 * mass * (v0 * 0.5 * erfc(-u / s) - E) - y * y

    y = -kap.copy()
    u = u0
    for _ in range(n):
        k1 = f(u, y)
        k2 = f(u + h / 2, y + h / 2 * k1)
        k3 = f(u + h / 2, y + h / 2 * k2)
        k4 = f(u + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        u += h
    theta = np.arctan2(k, -y)
    return u1 + theta / k


@lru_cache(maxsize=64)
def _offset_table(v0: float, s: float, mass: float, e_lo: float, e_hi: float):
    e = np.geomspace(e_lo, e_hi, 48)
    d = wall_offset(e, v0, s, mass)
    return CubicSpline(np.log(e), d)


@dataclass(frozen=True)
class BarrierWalls:
    """Pair of smoothed barriers, height ``v0``, edge width ``s``, calibrated for widths in [w_min, w_max]."""

    v0: float
    s: float
    w_min: float
    w_max: float
    mass: float = 1.0

    def __post_init__(self):
        if self.v0 <= self.ground_level(self.w_min):
            raise ValueError("barrier height must exceed the ground level of the narrowest box")

    def ground_level(self, w):
        return (np.pi / np.asarray(w, dtype=float)) ** 2 / (2 * self.mass)

    def offset(self, w):
        e = self.ground_level(w)
        if self.w_min == self.w_max:
            return wall_offset(e, self.v0, self.s, self.mass).reshape(np.shape(e))
        lo, hi = float(self.ground_level(self.w_max)), float(self.ground_level(self.w_min))
        table = _offset_table(float(self.v0), float(self.s), float(self.mass), lo * (1 - 1e-9), hi * (1 + 1e-9))
        return table(np.log(e))

    def potential(self, y, w, center: float = 0.0):
        """Barrier potential for nominal box width ``w`` (scalar or broadcastable to y)."""
        half = 0.5 * np.asarray(w, dtype=float) - self.offset(w)
        return wall_profile(np.abs(np.asarray(y) - center) - half, self.v0, self.s)

    def outer_margin(self) -> float:
        """Distance beyond the nominal wall needed for the evanescent tail and the erf edge."""
        kap = math.sqrt(2 * self.mass * (self.v0 - float(self.ground_level(self.w_max))))
        return 6.0 * self.s + 30.0 / kap


# -- width schedules ------------------------------------------------------------


def smootherstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


@dataclass(frozen=True)
class WidthSchedule:
    """w(t): close from ``a_wide`` to ``a`` over ``ramp``, hold ``T``, reopen symmetrically."""

    a: float
    a_wide: float
    ramp: float
    T: float
    kind: str = "linear"

    def __post_init__(self):
        if self.kind not in ("smooth", "linear"):
            raise ValueError(f"unknown schedule {self.kind!r}")
        if self.kind == "smooth" and self.ramp > 0:
            u = np.linspace(0.0, 1.0, 20001)
            s = 1 / self.a_wide + (1 / self.a - 1 / self.a_wide) * smootherstep(u)
            g = 1.0 / s ** 2
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(u))])
            object.__setattr__(self, "_u", u)
            object.__setattr__(self, "_t_of_u", self.ramp * cum / cum[-1])

    @property
    def duration(self) -> float:
        return 2 * self.ramp + self.T

    def _closing(self, t):
        """Width during the closing ramp, t in [0, ramp]."""
        if self.ramp == 0:
            return np.full_like(t, self.a)
        if self.kind == "linear":
            return self.a_wide + (self.a - self.a_wide) * t / self.ramp
        u = np.interp(t, self._t_of_u, self._u)
        return 1.0 / (1 / self.a_wide + (1 / self.a - 1 / self.a_wide) * smootherstep(u))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tc = np.where(t > self.ramp + self.T, self.duration - t, t)
        tc = np.clip(tc, 0.0, self.ramp)
        w = self._closing(tc)
        w = np.where((t >= self.ramp) & (t <= self.ramp + self.T), self.a, w)
        w = np.where((t <= 0) | (t >= self.duration), self.a_wide, w)
        return w


def smooth_schedule_norm(a: float, a_wide: float) -> float:
    """Integral over u in [0, 1] of 1/s(u)^2 for the smooth schedule (s = 1/w)."""
    f = lambda u: 1.0 / (1 / a_wide + (1 / a - 1 / a_wide) * float(smootherstep(u))) ** 2
    return quad(f, 0, 1, epsrel=1e-13, epsabs=0, limit=200)[0]
