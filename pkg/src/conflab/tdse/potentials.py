"""Potential landscapes on a grid.

A :class:`PotentialSpec` returns the sampled potential at time ``t`` via
:meth:`PotentialSpec.at`.  ``v0`` bounds |V| (used for step-size checks) and
``energy_scale`` is the level spacing scale the dynamics must resolve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..quantities import ChannelSpec, TemporalWindow
from .grid import Grid, GridResolutionError
from .walls import BarrierWalls, WidthSchedule

MIN_WALL_CELLS = 16
MIN_TAPER_CELLS = 4
MIN_BARRIER_RATIO = 100.0


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    grid: Grid
    v0: float
    energy_scale: float
    static: np.ndarray | None = None
    func: Callable[[float], np.ndarray] | None = None
    params: dict = field(default_factory=dict)

    @property
    def time_dependent(self) -> bool:
        return self.func is not None

    def at(self, t: float) -> np.ndarray:
        if self.func is not None:
            return self.func(t)
        return self.static


def _axis_coords(grid: Grid, axis: int):
    """Coordinates along ``axis`` shaped to broadcast against the grid."""
    ax = grid.axes[axis]
    shape = [1] * grid.dim
    shape[axis] = -1
    return ax.reshape(shape)


def _check_width(grid: Grid, width: float, axis: int, what: str):
    d = grid.spacing[axis]
    if width < MIN_WALL_CELLS * d:
        raise GridResolutionError(f"{what} spans {width / d:.1f} cells; at least {MIN_WALL_CELLS} are required")


def _check_barrier(walls: BarrierWalls, width: float):
    e1 = (math.pi / width) ** 2 / (2 * walls.mass)
    if walls.v0 < MIN_BARRIER_RATIO * e1 * (1 - 1e-12):
        raise ValueError(f"barrier height {walls.v0:g} is below {MIN_BARRIER_RATIO:g} E1 = {MIN_BARRIER_RATIO * e1:g}")


def free(grid: Grid) -> PotentialSpec:
    return PotentialSpec("free", grid, 0.0, 0.0, static=np.zeros(grid.shape))


def custom(grid: Grid, potential, energy_scale: float | None = None, v0: float | None = None) -> PotentialSpec:
    """Wrap an array or a callable ``t -> array``."""
    if callable(potential):
        sample = np.asarray(potential(0.0), dtype=float)
        if sample.shape != grid.shape:
            raise ValueError("custom potential has the wrong shape")
        vmax = float(np.max(np.abs(sample))) if v0 is None else v0
        return PotentialSpec("custom", grid, vmax, energy_scale or vmax, func=potential)
    arr = np.asarray(potential, dtype=float)
    if arr.shape != grid.shape:
        raise ValueError("custom potential has the wrong shape")
    vmax = float(np.max(np.abs(arr))) if v0 is None else v0
    return PotentialSpec("custom", grid, vmax, energy_scale or vmax, static=arr)


def default_walls(grid: Grid, w_min: float, w_max: float, v0: float, wall_cells: float = 2.0,
                  mass: float = 1.0, axis: int = -1) -> BarrierWalls:
    return BarrierWalls(v0=v0, s=wall_cells * grid.spacing[axis], w_min=w_min, w_max=w_max, mass=mass)


def box(grid: Grid, width: float, walls: BarrierWalls, axis: int = -1, center: float = 0.0) -> PotentialSpec:
    """Static two-wall box of nominal width ``width`` along ``axis``."""
    _check_width(grid, width, axis, "box width")
    _check_barrier(walls, width)
    y = _axis_coords(grid, axis)
    v = np.broadcast_to(walls.potential(y, width, center), grid.shape).copy()
    e1 = (math.pi / width) ** 2 / (2 * walls.mass)
    return PotentialSpec("box", grid, walls.v0, e1, static=v,
                         params={"width": width, "varies_along": axis % grid.dim})


def temporal_box(grid: Grid, window: TemporalWindow, walls: BarrierWalls, axis: int = -1) -> PotentialSpec:
    """Box whose width follows the window's closing/holding/reopening schedule."""
    _check_width(grid, window.a, axis, "window width a")
    _check_barrier(walls, window.a)
    y = _axis_coords(grid, axis)
    sched = WidthSchedule(window.a, window.a_wide, window.ramp, window.T, window.schedule)
    shape = grid.shape

    def v(t):
        return np.broadcast_to(walls.potential(y, float(sched(t))), shape)

    e1 = (math.pi / window.a) ** 2 / (2 * walls.mass)
    return PotentialSpec("temporal_box", grid, walls.v0, e1, func=v,
                         params={"schedule": sched, "window": window, "varies_along": axis % grid.dim})


def channel_profile(x, channel: ChannelSpec, x_in: float):
    """Fraction f(x) in [0, 1] of full confinement: raised-cosine steps centred on the channel ends.

    The steps are antisymmetric about the ends, so the integral of f is exactly ``l``.
    A sharp channel (``taper_len`` 0) on a uniform grid takes the overlap of each
    cell with [x_in, x_out], which keeps that integral exact on the grid too.
    """
    x = np.asarray(x, dtype=float)
    x_out = x_in + channel.l
    tl = channel.taper_len
    if tl == 0:
        if x.ndim == 1 and x.size > 1:
            h = x[1] - x[0]
            return np.clip((np.minimum(x + h / 2, x_out) - np.maximum(x - h / 2, x_in)) / h, 0.0, 1.0)
        return ((x >= x_in) & (x < x_out)).astype(float)

    def step(u):  # 0 -> 1 over [-tl/2, tl/2]
        z = np.clip(u / tl + 0.5, 0.0, 1.0)
        return 0.5 - 0.5 * np.cos(np.pi * z)

    return step(x - x_in) * step(x_out - x)


def _inv_width_sq(f, channel: ChannelSpec):
    inv_out = 0.0 if math.isinf(channel.a_out) else 1.0 / channel.a_out ** 2
    return inv_out + f * (1.0 / channel.a ** 2 - inv_out)


def _check_taper(grid: Grid, channel: ChannelSpec, axis: int = 0):
    if 0 < channel.taper_len < MIN_TAPER_CELLS * grid.spacing[axis]:
        raise GridResolutionError(f"taper of {channel.taper_len:g} is shorter than {MIN_TAPER_CELLS} cells")


def effective_channel(grid: Grid, channel: ChannelSpec, x_in: float, mass: float = 1.0) -> PotentialSpec:
    """Adiabatic 1D reduction: V(x) = (pi^2 / 2m) (1/a(x)^2 - 1/a_out^2)."""
    if grid.dim != 1:
        raise ValueError("effective_channel needs a 1D grid")
    _check_taper(grid, channel)
    f = channel_profile(grid.axes[0], channel, x_in)
    inv_out = 0.0 if math.isinf(channel.a_out) else 1.0 / channel.a_out ** 2
    v = (math.pi ** 2 / (2 * mass)) * (_inv_width_sq(f, channel) - inv_out)
    vmax = float(v.max())
    return PotentialSpec("effective_channel", grid, vmax, vmax, static=v,
                         params={"channel": channel, "x_in": x_in})


def static_channel(grid: Grid, channel: ChannelSpec, walls: BarrierWalls, x_in: float) -> PotentialSpec:
    """Full 2D channel: walls along y whose separation a(x) follows the channel profile.

    The guide outside the channel has width ``channel.a_out``, which must be finite.
    """
    if grid.dim != 2:
        raise ValueError("static_channel needs a 2D grid")
    if math.isinf(channel.a_out):
        raise ValueError("a 2D channel needs a finite outer guide width a_out")
    _check_taper(grid, channel, 0)
    _check_width(grid, channel.a, 1, "channel width a")
    _check_barrier(walls, channel.a)
    x, y = grid.axes
    f = channel_profile(x, channel, x_in)
    width = 1.0 / np.sqrt(_inv_width_sq(f, channel))
    v = walls.potential(y[None, :], width[:, None])
    e1 = (math.pi / channel.a) ** 2 / (2 * walls.mass)
    return PotentialSpec("static_channel", grid, walls.v0, e1, static=v,
                         params={"channel": channel, "x_in": x_in, "width": width})
