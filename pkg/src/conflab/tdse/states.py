"""Initial states: Gaussian packets and box eigenstates."""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .grid import Grid, GridResolutionError, WaveState

MIN_SIGMA_CELLS = 4
SUPPORT_SIGMAS = 8.0


def _tuple(v, dim):
    v = tuple(np.atleast_1d(np.asarray(v, dtype=float)))
    if len(v) == 1 and dim > 1:
        v = v * dim
    if len(v) != dim:
        raise ValueError(f"expected {dim} components, got {len(v)}")
    return v


def gaussian_packet(grid: Grid, center, momentum, width, check_support: bool = True) -> WaveState:
    """Normalized Gaussian exp(-(x-x0)^2 / (4 sigma^2) + i p0 x); ``width`` is sigma of |psi|^2.

    Rejects packets narrower than 4 cells, carriers above half the Nyquist
    wavenumber and (unless ``check_support`` is False) packets closer than
    8 sigma to the grid edge.
    """
    c = _tuple(center, grid.dim)
    p = _tuple(momentum, grid.dim)
    w = _tuple(width, grid.dim)
    psi = np.ones(grid.shape, dtype=complex)
    for ax in range(grid.dim):
        d, half = grid.spacing[ax], grid.extent[ax] / 2
        if w[ax] < MIN_SIGMA_CELLS * d:
            raise GridResolutionError(f"packet width {w[ax]:g} is below {MIN_SIGMA_CELLS} cells on axis {ax}")
        if abs(p[ax]) > 0.5 * grid.nyquist[ax]:
            raise GridResolutionError(f"carrier {p[ax]:g} exceeds half the Nyquist wavenumber {grid.nyquist[ax]:g}")
        if check_support and (abs(c[ax]) + SUPPORT_SIGMAS * w[ax] > half):
            raise GridResolutionError(f"packet support on axis {ax} reaches the grid edge")
        x = grid.axes[ax]
        f = np.exp(-((x - c[ax]) ** 2) / (4 * w[ax] ** 2) + 1j * p[ax] * (x - c[ax]))
        shape = [1] * grid.dim
        shape[ax] = -1
        psi = psi * f.reshape(shape)
    return WaveState(grid, psi).normalized()


def box_state(grid: Grid, width: float, n: int = 1, center: float = 0.0) -> WaveState:
    """Hard-wall eigenfunction sqrt(2/a) sin(n pi (y - c + a/2) / a) on a 1D grid, zero outside."""
    if grid.dim != 1:
        raise ValueError("box_state needs a 1D grid")
    d = grid.spacing[0]
    if width < 16 * d:
        raise GridResolutionError(f"box width {width:g} spans fewer than 16 cells")
    u = grid.axes[0] - center + width / 2
    inside = (u > 0) & (u < width)
    psi = np.where(inside, np.sqrt(2.0 / width) * np.sin(n * math.pi * u / width), 0.0)
    return WaveState(grid, psi).normalized()


def box_ground_state(grid: Grid, width: float, center: float = 0.0) -> WaveState:
    return box_state(grid, width, 1, center)


def hard_wall_energy(state: WaveState, width: float, center: float = 0.0, mass: float = 1.0) -> float:
    """<H> of a 1D state for ideal walls at center +- width/2, which may fall between nodes.

    Second differences use a ghost node on each side whose value makes the
    wavefunction vanish linearly at the wall, so the result is second order
    in the grid spacing.  Density outside the walls is ignored.
    """
    g = state.grid
    if g.dim != 1:
        raise ValueError("hard_wall_energy needs a 1D grid")
    d = g.spacing[0]
    u = g.axes[0] - center
    idx = np.flatnonzero(np.abs(u) < width / 2)
    if idx.size < 16:
        raise GridResolutionError(f"box width {width:g} spans fewer than 16 cells")
    i0, i1 = idx[0], idx[-1]
    psi = state.psi[i0:i1 + 1]
    gap_lo, gap_hi = u[i0] + width / 2, width / 2 - u[i1]
    ext = np.concatenate([[psi[0] * (1 - d / gap_lo)], psi, [psi[-1] * (1 - d / gap_hi)]])
    lap = (ext[2:] - 2 * ext[1:-1] + ext[:-2]) / d ** 2
    return float(-np.vdot(psi, lap).real * d / (2 * mass) / state.norm())


def ground_state_fidelity(state: WaveState, width: float, center: float = 0.0) -> float:
    """|<ground_a|psi>|^2 for the hard-wall ground state of ``width``; psi is normalized first."""
    g = box_ground_state(state.grid, width, center)
    s = state.normalized()
    return float(abs(g.overlap(s)) ** 2)


def transverse_eigenstates(grid: Grid, potential: np.ndarray, count: int = 1, mass: float = 1.0,
                           kinetic: str = "fd"):
    """Lowest ``count`` eigenpairs of -1/(2m) d^2/dy^2 + V on a 1D grid.

    ``kinetic="fd"`` uses the Dirichlet three-point Laplacian (consistent with
    the implicit propagator); ``"spectral"`` diagonalizes the periodic Fourier
    Hamiltonian densely and is meant for small grids.
    """
    if grid.dim != 1:
        raise ValueError("transverse_eigenstates needs a 1D grid")
    v = np.asarray(potential, dtype=float)
    d = grid.spacing[0]
    n = grid.points[0]
    if kinetic == "fd":
        c = 1.0 / (2 * mass * d * d)
        evals, evecs = eigh_tridiagonal(2 * c + v, np.full(n - 1, -c), select="i",
                                        select_range=(0, count - 1))
    elif kinetic == "spectral":
        k = grid.wavenumbers[0]
        f = np.fft.fft(np.eye(n), axis=0)
        t = (np.conj(f).T @ (k[:, None] ** 2 / (2 * mass) * f)).real / n
        evals, evecs = np.linalg.eigh(t + np.diag(v))
        evals, evecs = evals[:count], evecs[:, :count]
    else:
        raise ValueError(f"unknown kinetic discretization {kinetic!r}")
    states = []
    for i in range(count):
        vec = evecs[:, i]
        j = int(np.argmax(np.abs(vec)))
        vec = vec * np.sign(vec[j])
        states.append(WaveState(grid, vec.astype(complex)).normalized())
    return evals, states


def product_state(grid: Grid, fx: np.ndarray, fy: np.ndarray) -> WaveState:
    """psi(x, y) = fx(x) fy(y) on a 2D grid."""
    if grid.dim != 2:
        raise ValueError("product_state needs a 2D grid")
    return WaveState(grid, np.outer(fx, fy)).normalized()
