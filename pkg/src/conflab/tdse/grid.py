"""Uniform grids and wavefunction containers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_POINTS = 64


class GridResolutionError(ValueError):
    """The grid cannot represent the requested feature."""


@dataclass(frozen=True)
class Grid:
    """Uniform 1D or 2D grid with symmetric nodes ``x_j = (j - (N-1)/2) dx``.

    ``extent`` is the length ``N dx`` of each axis.  Under Dirichlet
    boundaries the implied zero nodes sit at ``+-(N+1) dx / 2``.
    """

    extent: tuple
    points: tuple
    axes: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ext = tuple(float(e) for e in np.atleast_1d(self.extent))
        pts = tuple(int(n) for n in np.atleast_1d(self.points))
        if len(ext) != len(pts) or len(ext) not in (1, 2):
            raise ValueError("grid must be 1D or 2D with one extent per axis")
        if any(not (e > 0 and np.isfinite(e)) for e in ext):
            raise ValueError(f"extents must be positive and finite, got {ext}")
        if any(n < MIN_POINTS for n in pts):
            raise GridResolutionError(f"each axis needs at least {MIN_POINTS} points, got {pts}")
        object.__setattr__(self, "extent", ext)
        object.__setattr__(self, "points", pts)
        axes = tuple((np.arange(n) - (n - 1) / 2.0) * (e / n) for e, n in zip(ext, pts))
        object.__setattr__(self, "axes", axes)

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def spacing(self) -> tuple:
        return tuple(e / n for e, n in zip(self.extent, self.points))

    @property
    def cell(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def wavenumbers(self) -> tuple:
        return tuple(2.0 * np.pi * np.fft.fftfreq(n, d) for n, d in zip(self.points, self.spacing))

    @property
    def nyquist(self) -> tuple:
        return tuple(np.pi / d for d in self.spacing)

    def spectral_ok(self) -> bool:
        return all(n & (n - 1) == 0 for n in self.points)

    def mesh(self):
        if self.dim == 1:
            return self.axes
        return np.meshgrid(*self.axes, indexing="ij")

    def refined(self) -> "Grid":
        """Same extent with half the spacing."""
        return Grid(self.extent, tuple(2 * n for n in self.points))


@dataclass
class WaveState:
    grid: Grid
    psi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        if self.psi.shape != self.grid.shape:
            raise ValueError(f"psi shape {self.psi.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.psi)):
            raise ValueError("psi contains non-finite values")

    def norm(self) -> float:
        return float(np.vdot(self.psi, self.psi).real * self.grid.cell)

    def normalized(self) -> "WaveState":
        n = self.norm()
        if n <= 0:
            raise ValueError("cannot normalize a zero state")
        return WaveState(self.grid, self.psi / np.sqrt(n), self.t)

    def overlap(self, other: "WaveState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.psi, other.psi) * self.grid.cell)

    def copy(self) -> "WaveState":
        return WaveState(self.grid, self.psi.copy(), self.t)

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2
