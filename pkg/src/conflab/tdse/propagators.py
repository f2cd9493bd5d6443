"""Time propagation of the Schrodinger equation (hbar = 1).

Two backends:

``split_step_spectral``
    Strang splitting, half potential kicks around an exact kinetic step in
    Fourier space.  Time-dependent potentials are sampled at mid-step.
``implicit_midpoint_fd``
    Crank-Nicolson / implicit midpoint (Cayley) step along the last axis with second-order
    finite differences, solved as one banded system.  In 2D the first axis
    is handled by exact half steps (spectral if periodic, Cayley if not), so
    every factor is unitary and the composition stays second order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from ._kernels import cayley_cols, cayley_rows
from .grid import Grid, WaveState
from .potentials import PotentialSpec

METHODS = ("split_step_spectral", "implicit_midpoint_fd")
_ALIASES = {"crank_nicolson": "implicit_midpoint_fd", "cn": "implicit_midpoint_fd", "split_step": "split_step_spectral"}
MIN_OVERLAP = 1e-6
DT_SAFETY = 0.5


class PreconditionError(ValueError):
    """A run configuration violates a stability or resolution precondition."""


class DecoheredError(RuntimeError):
    """The system/reference overlap became too small for its phase to mean anything."""


class InstabilityError(RuntimeError):
    def __init__(self, step: int, time: float, norm: float, norm0: float):
        super().__init__(f"norm grew from {norm0:.12g} to {norm:.12g} at step {step} (t={time:.6g})")
        self.step, self.time, self.norm, self.norm0 = step, time, norm, norm0


@dataclass(frozen=True)
class Boundary:
    """Boundary along one axis: ``periodic``, ``dirichlet`` or ``absorbing``.

    An absorbing boundary adds a damping layer of ``width`` with peak rate
    ``strength`` (quadratic onset) on top of the backend's native boundary.
    """

    kind: str = "periodic"
    width: float = 0.0
    strength: float = 0.0

    def __post_init__(self):
        if self.kind not in ("periodic", "dirichlet", "absorbing"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "absorbing" and not (self.width > 0 and self.strength > 0):
            raise ValueError("absorbing boundary needs positive width and strength")


PERIODIC = Boundary("periodic")
DIRICHLET = Boundary("dirichlet")


@dataclass(frozen=True)
class PropagatorConfig:
    method: str = "split_step_spectral"
    dt: float = 1e-3
    steps: int = 1000
    boundary: tuple = (PERIODIC,)
    probe_every: int = 10
    mass: float = 1.0
    max_norm_growth: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "method", _ALIASES.get(self.method, self.method))
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.steps < 0 or self.probe_every < 1:
            raise ValueError("steps must be >= 0 and probe_every >= 1")
        b = self.boundary
        object.__setattr__(self, "boundary", (b,) if isinstance(b, Boundary) else tuple(b))

    def boundaries(self, dim: int) -> tuple:
        if len(self.boundary) == 1:
            return self.boundary * dim
        if len(self.boundary) != dim:
            raise ValueError(f"need 1 or {dim} boundaries, got {len(self.boundary)}")
        return self.boundary

    @property
    def duration(self) -> float:
        return self.dt * self.steps

    def refined(self) -> "PropagatorConfig":
        """Half the time step over the same duration and probe times."""
        return replace(self, dt=self.dt / 2, steps=2 * self.steps, probe_every=2 * self.probe_every)


@dataclass
class ObservableSeries:
    times: np.ndarray
    norm: np.ndarray
    x_mean: np.ndarray
    p_mean: np.ndarray
    energy: np.ndarray
    overlap: np.ndarray | None = None
    extra: dict = field(default_factory=dict)
    frames: list | None = None

    @property
    def relative_phase(self) -> np.ndarray | None:
        """Unwrapped retardation of the system against the reference at each probe."""
        return None if self.overlap is None else unwrap_phase(self.overlap)


@dataclass
class PairResult:
    state: WaveState
    ref_state: WaveState
    series: ObservableSeries
    ref_series: ObservableSeries

    @property
    def phase(self) -> float:
        return float(self.series.relative_phase[-1])


# -- phase bookkeeping -----------------------------------------------------------


def relative_phase(sys_state: WaveState, ref_state: WaveState) -> float:
    """Retardation of ``sys_state`` relative to ``ref_state``, -arg <ref|sys>, principal branch.

    Positive values mean the system lags, as for a packet slowed down in a channel.
    """
    return -float(np.angle(ref_state.overlap(sys_state)))


def unwrap_phase(overlaps) -> np.ndarray:
    """Continuous retardation from a time series of overlaps <ref|sys>.

    Consecutive samples must differ by less than pi; the first sample is taken on the principal branch.
    """
    z = np.asarray(overlaps, dtype=complex)
    small = np.flatnonzero(np.abs(z) < MIN_OVERLAP)
    if small.size:
        raise DecoheredError(f"decohered comparison: |<ref|sys>| < {MIN_OVERLAP:g} at probe {small[0]}")
    return -np.unwrap(np.angle(z))


# -- kinetic operators and observables -------------------------------------------


def _k_sq(grid: Grid, axes) -> np.ndarray:
    out = np.zeros(grid.shape)
    for ax in axes:
        k = grid.wavenumbers[ax]
        shape = [1] * grid.dim
        shape[ax] = -1
        out = out + (k ** 2).reshape(shape)
    return out


def _laplacian_dirichlet(psi: np.ndarray, d: float, axis: int) -> np.ndarray:
    out = -2.0 * psi
    sl = [slice(None)] * psi.ndim
    lo, hi = list(sl), list(sl)
    lo[axis], hi[axis] = slice(0, -1), slice(1, None)
    out[tuple(lo)] += psi[tuple(hi)]
    out[tuple(hi)] += psi[tuple(lo)]
    return out / (d * d)


def apply_kinetic(psi: np.ndarray, grid: Grid, mass: float, kinds) -> np.ndarray:
    """T psi with each axis either ``spectral`` or ``fd`` (Dirichlet finite differences)."""
    out = np.zeros_like(psi)
    for ax, kind in enumerate(kinds):
        if kind == "spectral":
            k = grid.wavenumbers[ax]
            shape = [1] * grid.dim
            shape[ax] = -1
            out += np.fft.ifft(np.fft.fft(psi, axis=ax) * (k ** 2).reshape(shape), axis=ax) / (2 * mass)
        else:
            out += -_laplacian_dirichlet(psi, grid.spacing[ax], ax) / (2 * mass)
    return out


def kinetic_kinds(method: str, boundaries) -> tuple:
    dim = len(boundaries)
    if method == "split_step_spectral":
        return ("spectral",) * dim
    kinds = []
    for ax, b in enumerate(boundaries):
        if ax == dim - 1 or b.kind == "dirichlet":
            kinds.append("fd")
        else:
            kinds.append("spectral")
    return tuple(kinds)


def mean_momentum(psi: np.ndarray, grid: Grid) -> np.ndarray:
    """<p> per axis from the Fourier power spectrum (Nyquist bin excluded)."""
    out = []
    for ax in range(grid.dim):
        f = np.fft.fft(psi, axis=ax)
        pw = np.abs(f) ** 2
        k = grid.wavenumbers[ax].copy()
        n = grid.points[ax]
        if n % 2 == 0:
            k[n // 2] = 0.0
        shape = [1] * grid.dim
        shape[ax] = -1
        out.append(float(np.sum(pw * k.reshape(shape)) / np.sum(pw)))
    return np.array(out)


def momentum_spread(psi: np.ndarray, grid: Grid) -> np.ndarray:
    out = []
    for ax in range(grid.dim):
        pw = np.abs(np.fft.fft(psi, axis=ax)) ** 2
        k = grid.wavenumbers[ax]
        shape = [1] * grid.dim
        shape[ax] = -1
        k = k.reshape(shape)
        tot = pw.sum()
        m1 = np.sum(pw * k) / tot
        out.append(float(np.sqrt(max(np.sum(pw * k * k) / tot - m1 * m1, 0.0))))
    return np.array(out)


@dataclass(frozen=True)
class Observables:
    norm: float
    x_mean: np.ndarray
    p_mean: np.ndarray
    energy: float


def observables(state: WaveState, potential: PotentialSpec | None = None, mass: float = 1.0,
                kinetic: tuple | str = "spectral") -> Observables:
    """Norm and normalized expectation values <x>, <p>, <H> at ``state.t``."""
    g, psi = state.grid, state.psi
    norm = state.norm()
    if norm <= 0:
        raise ValueError("state has zero norm")
    dens = np.abs(psi) ** 2 * g.cell
    xm = np.array([float(np.sum(dens * c)) / norm for c in np.broadcast_arrays(*g.mesh())]) \
        if g.dim == 2 else np.array([float(np.sum(dens * g.axes[0])) / norm])
    pm = mean_momentum(psi, g)
    if kinetic is None:
        return Observables(norm, xm, pm, math.nan)
    kinds = (kinetic,) * g.dim if isinstance(kinetic, str) else kinetic
    h = apply_kinetic(psi, g, mass, kinds)
    if potential is not None:
        h = h + potential.at(state.t) * psi
    e = np.vdot(psi, h) * g.cell / norm
    if abs(e.imag) > 1e-8 * max(1.0, abs(e.real)):
        raise ValueError(f"energy expectation has imaginary part {e.imag:g}")
    return Observables(norm, xm, pm, float(e.real))


# -- steppers ------------------------------------------------------------------------


def _absorber(grid: Grid, boundaries, dt: float) -> np.ndarray | None:
    mask = None
    for ax, b in enumerate(boundaries):
        if b.kind != "absorbing":
            continue
        x = grid.axes[ax]
        edge = grid.extent[ax] / 2
        depth = np.clip((np.abs(x) - (edge - b.width)) / b.width, 0.0, None)
        m1 = np.exp(-b.strength * depth ** 2 * dt)
        shape = [1] * grid.dim
        shape[ax] = -1
        m1 = m1.reshape(shape)
        mask = m1 if mask is None else mask * m1
    return mask


class _SplitStep:
    def __init__(self, grid: Grid, potential: PotentialSpec, cfg: PropagatorConfig):
        self.pot, self.dt = potential, cfg.dt
        self.kin = np.exp(-1j * cfg.dt * _k_sq(grid, range(grid.dim)) / (2 * cfg.mass))
        self.half = None if potential.time_dependent else np.exp(-0.5j * cfg.dt * potential.static)

    def step(self, psi: np.ndarray, t: float) -> np.ndarray:
        half = self.half if self.half is not None else np.exp(-0.5j * self.dt * self.pot.at(t + 0.5 * self.dt))
        psi = psi * half
        psi = np.fft.ifftn(np.fft.fftn(psi) * self.kin)
        return psi * half


class _Cayley:
    """Implicit midpoint along one axis: (1 + i dt H / 2) psi' = (1 - i dt H / 2) psi."""

    def __init__(self, grid: Grid, axis: int, dt: float, mass: float):
        self.axis = axis
        self.n = grid.points[axis]
        self.other = int(np.prod(grid.shape)) // self.n
        d = grid.spacing[axis]
        self.c = 1.0 / (2 * mass * d * d)
        self.dt = dt
        self.d = d
        total = self.n * self.other
        off = np.full(total, -0.5j * dt * self.c)
        off[self.n - 1::self.n] = 0.0  # decouple the independent lines
        self.ab = np.zeros((3, total), dtype=complex)
        self.ab[0, 1:] = off[:-1]
        self.ab[2, :-1] = off[:-1]
        self.kin_diag = 2 * self.c

    def solve(self, psi: np.ndarray, v: np.ndarray | None) -> np.ndarray:
        lines = np.moveaxis(psi, self.axis, -1)
        shape = lines.shape
        lines = lines.reshape(-1, self.n)
        vv = 0.0 if v is None else np.moveaxis(np.broadcast_to(v, psi.shape), self.axis, -1).reshape(-1, self.n)
        hpsi = self.kin_diag * lines + vv * lines
        hpsi[:, 1:] -= self.c * lines[:, :-1]
        hpsi[:, :-1] -= self.c * lines[:, 1:]
        rhs = (lines - 0.5j * self.dt * hpsi).ravel()
        self.ab[1] = (1.0 + 0.5j * self.dt * (self.kin_diag + vv)).ravel() if v is not None else \
            1.0 + 0.5j * self.dt * self.kin_diag
        out = solve_banded((1, 1), self.ab, rhs, overwrite_b=True, check_finite=False)
        return np.moveaxis(out.reshape(shape), -1, self.axis)

    def solve_uniform(self, psi: np.ndarray, vline: np.ndarray | None, rowphase=None) -> np.ndarray:
        """Same step when every line sees the same potential (``vline``, non-negative).

        ``rowphase`` multiplies each line first; it carries the exact x
        kinetic factor when the state is held x-Fourier transformed.
        """
        lines = np.moveaxis(psi, self.axis, -1)
        shape = lines.shape
        rows = np.array(lines, dtype=complex, order="C").reshape(-1, self.n)
        h = self.kin_diag + (np.zeros(self.n) if vline is None else vline)
        diag = (1.0 + 0.5j * self.dt * h).astype(complex)
        ph = np.ones(rows.shape[0], dtype=complex) if rowphase is None else \
            np.broadcast_to(rowphase, lines.shape[:-1]).astype(complex).ravel()
        cayley_rows(rows, diag, complex(-0.5j * self.dt * self.c), ph)
        return np.moveaxis(rows.reshape(shape), -1, self.axis)


class _Implicit:
    def __init__(self, grid: Grid, potential: PotentialSpec, cfg: PropagatorConfig, boundaries):
        if boundaries[-1].kind == "periodic":
            raise PreconditionError("implicit_midpoint_fd needs a dirichlet or absorbing boundary on the last axis")
        self.pot, self.dt = potential, cfg.dt
        last = grid.dim - 1
        self.main = _Cayley(grid, last, cfg.dt, cfg.mass)
        # potentials that vary only along the last axis make every line solve identical
        self.uniform = potential.kind == "free" or potential.params.get("varies_along") == last
        self.first = None
        self.first_full = None
        if grid.dim == 2:
            if boundaries[0].kind == "dirichlet":
                self.first = _Cayley(grid, 0, cfg.dt / 2, cfg.mass)
            else:
                k = grid.wavenumbers[0][:, None]
                self.first = np.exp(-0.5j * cfg.dt * k ** 2 / (2 * cfg.mass))
                if self.uniform:
                    # T_x commutes with an x-independent step, so the two halves merge exactly
                    self.first_full = self.first ** 2

    def _half_first(self, psi):
        if self.first is None:
            return psi
        if isinstance(self.first, _Cayley):
            return self.first.solve(psi, None)
        return np.fft.ifft(np.fft.fft(psi, axis=0) * self.first, axis=0)

    def _main(self, psi, t):
        v = self.pot.at(t)
        if not self.uniform:
            return self.main.solve(psi, v)
        if self.pot.kind == "free":
            return self.main.solve_uniform(psi, None)
        idx = (0,) * (psi.ndim - 1) + (slice(None),)
        return self.main.solve_uniform(psi, np.asarray(v)[idx])

    @property
    def fourier_x(self) -> bool:
        return self.first_full is not None

    def encode(self, psi):
        # x-Fourier transform, stored (y, x) so the y solve sweeps all x modes together
        return np.ascontiguousarray(np.fft.fft(psi, axis=0).T)

    def decode(self, psi):
        return np.fft.ifft(psi.T, axis=0)

    def step_encoded(self, psi: np.ndarray, t: float) -> np.ndarray:
        """One step, in place, on a state held as ``encode`` returns it (x-uniform potentials only)."""
        if self.pot.kind == "free":
            h = np.full(self.main.n, self.main.kin_diag)
        else:
            h = self.main.kin_diag + np.asarray(self.pot.at(t + 0.5 * self.dt))[0]
        diag = (1.0 + 0.5j * self.dt * h).astype(complex)
        return cayley_cols(psi, diag, complex(-0.5j * self.dt * self.main.c), self.first_full[:, 0])

    def step(self, psi: np.ndarray, t: float) -> np.ndarray:
        if self.first_full is not None:
            return self.decode(self.step_encoded(self.encode(psi), t))
        psi = self._half_first(psi)
        psi = self._main(psi, t + 0.5 * self.dt)
        return self._half_first(psi)


# -- preconditions -------------------------------------------------------------------


def fastest_energy(state: WaveState, potential: PotentialSpec, cfg: PropagatorConfig) -> float:
    """Energy scale the step must resolve.

    The state's kinetic scale is (|<p>| + 4 sigma_p)^2 / 2m summed over axes.  The
    split-step backend must also resolve the full potential height; the
    implicit backend is unconditionally stable and only needs the dynamical
    level scale of the potential.
    """
    pm = np.abs(mean_momentum(state.psi, state.grid))
    sp = momentum_spread(state.psi, state.grid)
    e_state = float(np.sum((pm + 4 * sp) ** 2) / (2 * cfg.mass))
    pot = potential.v0 if cfg.method == "split_step_spectral" else potential.energy_scale
    return max(e_state, pot)


def check_preconditions(state: WaveState, potential: PotentialSpec, cfg: PropagatorConfig):
    g = state.grid
    if potential.grid.shape != g.shape:
        raise PreconditionError("potential and state live on different grids")
    boundaries = cfg.boundaries(g.dim)
    if cfg.method == "split_step_spectral":
        if not g.spectral_ok():
            raise PreconditionError(f"split_step_spectral needs power-of-two points, got {g.points}")
        if any(b.kind == "dirichlet" for b in boundaries):
            raise PreconditionError("split_step_spectral is periodic; use implicit_midpoint_fd for dirichlet walls")
    e = fastest_energy(state, potential, cfg)
    if cfg.dt * e > DT_SAFETY:
        raise PreconditionError(f"dt={cfg.dt:g} too large: dt * E_fast = {cfg.dt * e:.3g} > {DT_SAFETY} "
                                f"(E_fast = {e:.4g}); use dt <= {DT_SAFETY / e:.3g}")


# -- drivers ------------------------------------------------------------------------------


class _Recorder:
    def __init__(self, potential, cfg, kinds, probes, keep_frames, energy_every=1):
        self.pot, self.cfg, self.kinds = potential, cfg, kinds
        self.energy_every = energy_every
        self.count = 0
        self.probes = probes or {}
        self.rows = {"times": [], "norm": [], "x_mean": [], "p_mean": [], "energy": []}
        self.extra = {k: [] for k in self.probes}
        self.frames = [] if keep_frames else None

    def record(self, state: WaveState, last: bool = False):
        with_energy = last or self.count % self.energy_every == 0
        self.count += 1
        o = observables(state, self.pot if with_energy else None, self.cfg.mass,
                        self.kinds if with_energy else None)
        self.rows["times"].append(state.t)
        self.rows["norm"].append(o.norm)
        self.rows["x_mean"].append(o.x_mean)
        self.rows["p_mean"].append(o.p_mean)
        self.rows["energy"].append(o.energy)
        for k, fn in self.probes.items():
            self.extra[k].append(fn(state))
        if self.frames is not None:
            self.frames.append(state.psi.copy())
        return o.norm

    def series(self, overlap=None) -> ObservableSeries:
        r = {k: np.array(v) for k, v in self.rows.items()}
        extra = {k: np.array(v) for k, v in self.extra.items()}
        return ObservableSeries(overlap=None if overlap is None else np.array(overlap), extra=extra,
                                frames=self.frames, **r)


def _stepper(grid, potential, cfg, boundaries):
    if cfg.method == "split_step_spectral":
        return _SplitStep(grid, potential, cfg)
    return _Implicit(grid, potential, cfg, boundaries)


def _run(states, potentials, cfg, probes, keep_frames, pair, energy_every=1):
    grid = states[0].grid
    boundaries = cfg.boundaries(grid.dim)
    for s, p in zip(states, potentials):
        check_preconditions(s, p, cfg)
    kinds = kinetic_kinds(cfg.method, boundaries)
    steppers = [_stepper(grid, p, cfg, boundaries) for p in potentials]
    recs = [_Recorder(p, cfg, kinds, pr, keep_frames, energy_every) for p, pr in zip(potentials, probes)]
    mask = _absorber(grid, boundaries, cfg.dt)
    # x-uniform 2D potentials: keep the state x-Fourier transformed between probes
    coded = [mask is None and getattr(st, "fourier_x", False) for st in steppers]

    def real(i, psi):
        return steppers[i].decode(psi) if coded[i] else psi

    psis = [s.psi.copy() for s in states]
    t0 = states[0].t
    overlap = [] if pair else None
    norm0 = [r.record(WaveState(grid, p, t0)) for r, p in zip(recs, psis)]
    if pair:
        overlap.append(np.vdot(psis[1], psis[0]) * grid.cell)
    psis = [steppers[i].encode(p) if coded[i] else p for i, p in enumerate(psis)]
    for n in range(1, cfg.steps + 1):
        t_prev = t0 + (n - 1) * cfg.dt
        for i, st in enumerate(steppers):
            if coded[i]:
                psis[i] = st.step_encoded(psis[i], t_prev)
                continue
            psis[i] = st.step(psis[i], t_prev)
            if mask is not None:
                psis[i] *= mask
        if n % cfg.probe_every == 0 or n == cfg.steps:
            t = t0 + n * cfg.dt
            now = [real(i, p) for i, p in enumerate(psis)]
            for i, r in enumerate(recs):
                if not np.all(np.isfinite(now[i])):
                    raise InstabilityError(n, t, math.nan, norm0[i])
                nrm = r.record(WaveState(grid, now[i], t), last=n == cfg.steps)
                if mask is None and nrm > norm0[i] * (1 + cfg.max_norm_growth):
                    raise InstabilityError(n, t, nrm, norm0[i])
            if pair:
                overlap.append(np.vdot(now[1], now[0]) * grid.cell)
    t_end = t0 + cfg.steps * cfg.dt
    finals = [WaveState(grid, real(i, p), t_end) for i, p in enumerate(psis)]
    return finals, [r.series(overlap) for r in recs]


def propagate(state: WaveState, potential: PotentialSpec, cfg: PropagatorConfig,
              probes: dict[str, Callable] | None = None, keep_frames: bool = False, energy_every: int = 1):
    """Advance ``state`` by ``cfg.steps`` steps.  Returns ``(final_state, ObservableSeries)``.

    ``probes`` maps names to callables ``f(WaveState)`` evaluated at every probe;
    ``energy_every`` thins the (costly) energy evaluation to every n-th probe,
    leaving NaN in between; the first and last probes always carry it.
    """
    (final,), (series,) = _run([state], [potential], cfg, [probes], keep_frames, pair=False,
                               energy_every=energy_every)
    return final, series


def propagate_pair(state: WaveState, potential: PotentialSpec, ref_state: WaveState,
                   ref_potential: PotentialSpec, cfg: PropagatorConfig,
                   probes: dict[str, Callable] | None = None,
                   ref_probes: dict[str, Callable] | None = None, energy_every: int = 1) -> PairResult:
    """Propagate a system and its reference in lockstep, recording <ref|sys> at every probe."""
    if state.grid != ref_state.grid:
        raise PreconditionError("system and reference must share a grid")
    (s, r), (ss, rs) = _run([state, ref_state], [potential, ref_potential], cfg,
                            [probes, ref_probes], False, pair=True, energy_every=energy_every)
    return PairResult(s, r, ss, rs)
