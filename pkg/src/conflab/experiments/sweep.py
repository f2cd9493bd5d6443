"""Parameter sweeps, power-law fits and the halved-resolution convergence check."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..quantities import delta_phi_static
from .runs import (STATIC_2D_TOLERANCES, STATIC_TOLERANCES, TEMPORAL_TOLERANCES, ConfigError, DriverError,
                   Measurement, StaticRun, TemporalRun)
from .static import run_static_2d, run_static_effective
from .temporal import run_temporal

PARAMETERS = ("lambda", "a", "l", "T")


def driver_for(run):
    if isinstance(run, TemporalRun):
        return run_temporal
    if isinstance(run, StaticRun):
        return run_static_2d if run.fidelity == "full_2d" else run_static_effective
    raise TypeError(f"no driver for {type(run).__name__}")


def convergence_tolerance(run) -> float:
    if isinstance(run, TemporalRun):
        return TEMPORAL_TOLERANCES["convergence"]
    if run.fidelity == "full_2d":
        return STATIC_2D_TOLERANCES["convergence"]
    return STATIC_TOLERANCES["convergence"]


def with_parameter(run, parameter: str, value: float):
    """Copy of ``run`` with one physical parameter replaced; grid and solver are re-derived."""
    if parameter not in PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {parameter!r}; choose from {PARAMETERS}")
    value = float(value)
    fresh = {"grid": None, "solver": None}
    if isinstance(run, StaticRun):
        if parameter == "lambda":
            return replace(run, particle=run.particle.with_wavelength(value), **fresh)
        if parameter == "a":
            return replace(run, channel=replace(run.channel, a=value), **fresh)
        if parameter == "l":
            return replace(run, channel=replace(run.channel, l=value), **fresh)
        raise ConfigError("static runs cannot sweep T")
    if parameter == "lambda":
        return replace(run, particle=run.particle.with_wavelength(value), **fresh)
    if parameter == "a":
        return replace(run, window=replace(run.window, a=value), **fresh)
    if parameter == "T":
        return replace(run, window=replace(run.window, T=value), **fresh)
    raise ConfigError("temporal runs cannot sweep l")


def check_convergence(run, measurement: Measurement | None = None, tolerance: float | None = None,
                      driver=None) -> Measurement:
    """Rerun at half dx and half dt; flag the measurement ``converged`` if dphi moves by less than ``tolerance``.

    The refined measurement is kept under ``diagnostics['refined']``.
    """
    driver = driver or driver_for(run)
    m = measurement if measurement is not None else driver(run)
    tol = convergence_tolerance(run) if tolerance is None else tolerance
    try:
        mr = driver(m.run.refined())
    except DriverError as exc:
        mr = exc.measurement
        if mr is None:
            raise
    ref = abs(m.dphi_sim)
    delta = abs(mr.dphi_sim - m.dphi_sim) / ref if ref > 0 else abs(mr.dphi_sim - m.dphi_sim)
    m.diagnostics["convergence_delta"] = delta
    m.diagnostics["convergence_tolerance"] = tol
    m.diagnostics["converged"] = bool(delta <= tol)
    m.diagnostics["refined"] = mr.to_dict()
    return m


@dataclass
class SweepRow:
    value: float
    measurement: Measurement | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepTable:
    parameter: str
    kind: str  # "static" | "temporal"
    rows: list = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.rows])

    def phases(self) -> np.ndarray:
        return np.array([np.nan if r.measurement is None else r.measurement.dphi_sim for r in self.rows])

    @property
    def complete(self) -> bool:
        return all(r.ok for r in self.rows)

    def exponent(self) -> float | None:
        """Slope of log dphi_sim against log(parameter) over rows with a measurement."""
        v, p = self.values, self.phases()
        good = np.isfinite(p) & (p > 0)
        if good.sum() < 2:
            return None
        return float(np.polyfit(np.log(v[good]), np.log(p[good]), 1)[0])

    def spread(self) -> float | None:
        """(max - min) / |mean| of dphi_sim over rows with a measurement."""
        p = self.phases()
        p = p[np.isfinite(p)]
        if p.size == 0:
            return None
        return float((p.max() - p.min()) / abs(p.mean()))


def _run_point(args):
    run, check = args
    driver = driver_for(run)
    try:
        m = driver(run)
        if check:
            check_convergence(run, m, driver=driver)
        return m, None
    except DriverError as exc:
        return exc.measurement, f"{type(exc).__name__}: {exc}"
    except (ValueError, RuntimeError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _strip(m: Measurement | None) -> Measurement | None:
    if m is not None:
        m.trace = None
    return m


def _run_point_stripped(args):
    m, err = _run_point(args)
    return _strip(m), err


def eq5_view(table: SweepTable, base: TemporalRun) -> list:
    """Temporal rows re-read as static channels of length l = v T.

    Each entry holds the plateau phase and the static formula evaluated at that
    length; their relative difference is the bridge check.
    """
    out = []
    for row in table.rows:
        m = row.measurement
        if m is None:
            out.append(None)
            continue
        particle = base.particle.with_wavelength(row.value) if table.parameter == "lambda" else base.particle
        window = m.run.window if m.run is not None else base.window
        from ..quantities import ChannelSpec
        l_eq = particle.speed() * window.T
        if l_eq <= 0:
            out.append(None)
            continue
        static = delta_phi_static(particle, ChannelSpec(a=window.a, l=l_eq))
        hold = m.diagnostics["dphi_hold_eq"]
        out.append({"l_equiv": l_eq, "dphi_static_formula": static, "dphi_hold_eq": hold,
                    "dphi_hold_sim": m.diagnostics["dphi_hold"],
                    "rel_diff": abs(m.diagnostics["dphi_hold"] - static) / static})
    return out


def sweep(base, parameter: str, values, jobs: int = 1, check: bool = False) -> SweepTable:
    """Run ``base`` at each value of ``parameter``; rows keep the input order.

    Per-point failures are recorded on their row (with any partial
    measurement) and the sweep continues.  ``jobs > 1`` runs points in worker
    processes; results are assembled in input order, so the table does not
    depend on completion order.
    """
    values = [float(v) for v in values]
    kind = "temporal" if isinstance(base, TemporalRun) else "static"
    runs, rows = [], []
    for v in values:
        try:
            runs.append(with_parameter(base, parameter, v))
        except ValueError as exc:
            runs.append(exc)
    todo = [(i, r) for i, r in enumerate(runs) if not isinstance(r, Exception)]
    results = {}
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for (i, _), res in zip(todo, pool.map(_run_point_stripped, [(r, check) for _, r in todo])):
                results[i] = res
    else:
        for i, r in todo:
            results[i] = _run_point((r, check))
    for i, v in enumerate(values):
        if isinstance(runs[i], Exception):
            rows.append(SweepRow(v, None, f"{type(runs[i]).__name__}: {runs[i]}"))
        else:
            m, err = results[i]
            rows.append(SweepRow(v, m, err))
    return SweepTable(parameter, kind, rows)
