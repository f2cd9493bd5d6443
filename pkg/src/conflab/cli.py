"""Scenario-driven command line: ``conflab analytic | run | plot``.

``run`` validates a scenario file, dispatches to the matching driver and
writes ``results.json`` (the full record), ``results.csv`` (a flat table)
and optionally ``plot.svg``.  The exit status is 0 only when every check
passed and every convergence flag is clear, 1 when a run failed a check or
raised, and 2 when the scenario or the command line is invalid.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (ConfigError, DriverError, StaticRun, TemporalRun, check_convergence, eq5_view,
                          resolve_static, resolve_temporal, run_static_2d, run_static_effective, run_temporal,
                          run_tof, sweep)
from .interferometer import IndeterminateError, PhaseLaw, Spectrum, classify, fringe
from .persist import csv_text, dumps, to_plain
from .quantities import (NATURAL, NEUTRON_MASS, SI, WIDE_LIMIT, ChannelSpec, DomainError, NaturalScale,
                         ParticleSpec, TemporalWindow, delta_E_temporal, delta_E_temporal_corrected,
                         delta_p_static, delta_phi_static, delta_phi_static_exact, delta_phi_temporal,
                         effective_duration, equivalence_check, tof_delay, validity)
from .scenario import ScenarioError, ScenarioFile, parse_scenario
from .svgplot import PlotError, emit_plot
from .tdse import Boundary, Grid

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2
NULL_PHASE_LIMIT = 1e-6

CSV_COLUMNS = {
    "analytic": ["quantity", "value"],
    "static": ["dphi_sim", "dphi_eq2", "dphi_exact", "dp_sim", "dp_eq1", "rel_err_eq2", "rel_err_exact",
               "rel_err_dp", "reflection", "converged"],
    "static2d": ["dphi_sim", "dphi_eq2", "dphi_exact", "dp_sim", "dp_eq1", "rel_err_eq2", "rel_err_exact",
                 "mode_mixing", "reflection", "converged"],
    "temporal": ["dphi_sim", "dphi_eq4", "dphi_exact", "dE_sim", "dE_eq3", "rel_err_exact", "rel_err_dE",
                 "fidelity", "px_drift", "converged"],
    "tof": ["delay_sim", "delay_pred", "rel_err", "dphi_sim", "converged"],
    "sweep_static": ["param", "value", "dphi_sim", "dphi_eq2", "dphi_exact", "dp_sim", "rel_err_eq2",
                     "converged"],
    "sweep_temporal": ["param", "value", "dphi_sim", "dphi_eq4", "dphi_exact", "dE_sim", "rel_err_exact",
                       "converged"],
    "fringe": ["offset", "intensity", "visibility", "centroid_shift"],
}


@dataclass
class ResultRecord:
    """Everything one scenario run produced; ``to_dict`` is what ``results.json`` holds."""

    mode: str
    status: str
    scenario: dict
    predictions: dict
    payload: dict
    checks: list
    convergence: dict
    errors: list
    wall_clock_s: float
    tool: str = "conflab"
    tool_version: str = __version__

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.ok else EXIT_FAIL

    def to_dict(self) -> dict:
        return to_plain(asdict(self))

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ResultRecord":
        return cls(**{k: d[k] for k in ("mode", "status", "scenario", "predictions", "payload", "checks",
                                         "convergence", "errors", "wall_clock_s", "tool", "tool_version")})

    def csv(self) -> str:
        cols = self.payload.get("columns") or []
        rows = self.payload.get("table") or self.payload.get("rows") or []
        return csv_text(cols, [[r.get(c) for c in cols] for r in rows])


# -- predictions --------------------------------------------------------------


def predictions(particle: ParticleSpec | None, channel: ChannelSpec | None = None,
                window: TemporalWindow | None = None, units=NATURAL) -> dict:
    """Every closed-form value that applies to the given geometry, in ``units``."""
    out = {}
    if particle is not None and channel is not None:
        rep = validity(particle, channel, units)
        out.update({
            "epsilon": rep.epsilon, "propagating": rep.propagating,
            "dp_eq1": delta_p_static(particle, channel, units),
            "dp_eq1_wavelength_form": delta_p_static(particle, channel, units, form="wavelength"),
            "dphi_eq2": delta_phi_static(particle, channel, units),
            "dphi_eq2_energy_form": delta_phi_static(particle, channel, units, form="energy"),
        })
        if rep.propagating:
            out["dphi_exact"] = delta_phi_static_exact(particle, channel, units)
            out["tof_delay"] = tof_delay(particle, channel, units)
        s, t, rel = equivalence_check(particle, channel, units)
        out.update({"transit_time": channel.l / particle.speed(units), "eq5_dphi_static": s,
                    "eq5_dphi_temporal_at_transit": t, "eq5_rel_diff": rel})
    if window is not None:
        p = particle or ParticleSpec(NEUTRON_MASS if units is SI else 1.0, 2 * window.a)
        de_c = delta_E_temporal_corrected(p, window, units)
        t_eff = effective_duration(p, window, units)
        rep = validity(p, window, units)
        out.update({
            "dE_eq3": delta_E_temporal(p, window, units), "dE_eq3_corrected": de_c,
            "dphi_eq4": delta_phi_temporal(p, window, units), "T_eff": t_eff,
            "dphi_eq4_T_eff": de_c * t_eff / units.hbar,
            "adiabaticity": rep.adiabaticity, "adiabaticity_wide": rep.adiabaticity_wide,
        })
    return out


# -- scenario to runs -------------------------------------------------------


def _units(sc: ScenarioFile):
    return SI if sc.units == "si" else NATURAL


def _particle(sc: ScenarioFile) -> ParticleSpec:
    p = sc.get("particle")
    return ParticleSpec(p["mass"], p["lambda"])


def _channel(sc: ScenarioFile) -> ChannelSpec:
    c = sc.get("channel")
    a_out = math.inf if c.get("a_out") is None else c["a_out"]
    return ChannelSpec(c["a"], c["l"], c.get("taper_len", 0.0), a_out)


def _window(sc: ScenarioFile) -> TemporalWindow:
    w = sc.get("window")
    return TemporalWindow(w["a"], w["T"], w["ramp"], w["a_wide"], w.get("schedule", "linear"))


def _scale(sc: ScenarioFile, particle: ParticleSpec, length: float) -> NaturalScale:
    """SI runs are simulated with hbar = m = 1 and the channel width as length unit."""
    if sc.units == "si":
        return NaturalScale(particle.mass, length)
    return NaturalScale(1.0, 1.0, hbar=1.0)


def _grid(sc: ScenarioFile) -> Grid | None:
    g = sc.get("grid")
    return None if g is None else Grid(tuple(g["extent"]), tuple(g["points"]))


def _apply_solver(run, block: dict, resolve):
    """Merge explicit solver fields over the driver's automatic choice."""
    explicit = {k: block[k] for k in ("method", "dt", "steps", "probe_every") if block.get(k) is not None}
    if block.get("boundary") is not None:
        explicit["boundary"] = tuple(Boundary(**b) for b in block["boundary"])
    if not explicit:
        return run
    auto = resolve(run).solver
    return replace(run, solver=replace(auto, **explicit))


def _length(scale: NaturalScale, v):
    return None if v is None else scale.to_natural(v, "length")


def _static_run(sc: ScenarioFile, scale: NaturalScale, fidelity: str) -> StaticRun:
    o, s = sc.get("options"), sc.get("solver")
    run = StaticRun(scale.particle(_particle(sc)), scale.channel(_channel(sc)), fidelity, grid=_grid(sc),
                    packet_width=_length(scale, o["packet_width"]), constriction=o["constriction"],
                    dp_window=o["dp_window"], detector_offset=_length(scale, o["detector_offset"]),
                    v0_factor=s["v0_factor"], wall_cells=s["wall_cells"])
    return _apply_solver(run, s, resolve_static)


def _temporal_run(sc: ScenarioFile, scale: NaturalScale) -> TemporalRun:
    o, s = sc.get("options"), sc.get("solver")
    extra = {} if o["packet_width"] is None else {"packet_width": _length(scale, o["packet_width"])}
    run = TemporalRun(scale.window(_window(sc)), scale.particle(_particle(sc)), grid=_grid(sc),
                      with_longitudinal=o["with_longitudinal"], target_eq3=o["target_eq3"],
                      fidelity_floor=o["fidelity_floor"], v0_factor=s["v0_factor"], wall_cells=s["wall_cells"],
                      **extra)
    return _apply_solver(run, s, resolve_temporal)


def _echo_resolved(echo: dict, run):
    """Record the grid and solver the driver actually used (natural units of the run)."""
    if run is None or run.grid is None or run.solver is None:
        return
    g, c = run.grid, run.solver
    echo["grid"] = {"extent": [float(e) for e in g.extent], "points": [int(p) for p in g.points]}
    echo["solver"].update({
        "method": c.method, "dt": c.dt, "steps": c.steps, "probe_every": c.probe_every,
        "boundary": [{"kind": b.kind, "width": b.width, "strength": b.strength} for b in c.boundary],
    })


# -- checks -------------------------------------------------------------------


class _Checks:
    def __init__(self):
        self.items = []

    def le(self, name: str, value, limit):
        if value is None or limit is None:
            return
        self.items.append({"name": name, "value": value, "op": "<=", "limit": limit,
                           "pass": bool(value <= limit)})

    def ge(self, name: str, value, limit):
        if value is None or limit is None:
            return
        self.items.append({"name": name, "value": value, "op": ">=", "limit": limit,
                           "pass": bool(value >= limit)})

    def flag(self, name: str, ok: bool):
        self.items.append({"name": name, "value": bool(ok), "op": "==", "limit": True, "pass": bool(ok)})

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.items)


def _measurement_checks(ck: _Checks, kind: str, m, tol: dict, prefix: str = "",
                        constriction: bool = True, longitudinal: bool = False):
    d = m.diagnostics
    if kind in ("static", "static2d", "tof") and not constriction:
        ck.le(prefix + "null_phase", abs(m.dphi_sim), NULL_PHASE_LIMIT)
        return
    if kind in ("static", "static2d"):
        ck.le(prefix + "rel_err_exact", m.rel_err_exact, tol.get("dphi_exact"))
        ck.le(prefix + "rel_err_eq2", m.rel_err_eq, tol.get("dphi_eq"))
        ck.le(prefix + "reflection", d.get("reflection"), tol.get("reflection"))
        if kind == "static":
            ck.le(prefix + "rel_err_dp", m.rel_err_dp, tol.get("dp_eq"))
        else:
            ck.le(prefix + "mode_mixing", d.get("mode_mixing"), tol.get("mode_mixing"))
    elif kind == "temporal":
        ck.le(prefix + "rel_err_dE", m.rel_err_dE, tol.get("dE_eq"))
        ck.le(prefix + "rel_err_exact", m.rel_err_exact, tol.get("dphi_exact"))
        ck.ge(prefix + "fidelity", d.get("fidelity"), tol.get("fidelity"))
        if longitudinal:
            ck.le(prefix + "px_drift", d.get("px_drift"), tol.get("px_drift"))


def _error_entry(where: str, exc: BaseException) -> dict:
    return {"where": where, "type": type(exc).__name__, "message": str(exc)}


def _convergence_block(m, checked: bool) -> dict:
    if m is None or not checked or "converged" not in m.diagnostics:
        return {"checked": False, "converged": None}
    d = m.diagnostics
    return {"checked": True, "converged": d["converged"], "delta": d["convergence_delta"],
            "tolerance": d["convergence_tolerance"]}


def _m_dict(m, scale: NaturalScale) -> dict | None:
    """Measurement fields in scenario units; diagnostics stay in the run's natural units."""
    if m is None:
        return None
    d = m.to_dict()
    for k, kind in (("dp_sim", "momentum"), ("dp_eq", "momentum"), ("dE_sim", "energy"), ("dE_eq", "energy")):
        if d[k] is not None:
            d[k] = scale.to_si(d[k], kind)
    d["diagnostics_units"] = "natural"
    return d


# -- mode runners -------------------------------------------------------------


def _run_static(sc: ScenarioFile, echo: dict, ck: _Checks, errors: list, jobs: int):
    mode = sc.mode
    particle = _particle(sc)
    scale = _scale(sc, particle, sc.get("channel")["a"])
    run = _static_run(sc, scale, "full_2d" if mode == "static2d" else "effective_1d")
    tol, o = sc.get("tolerances"), sc.get("options")
    driver = run_static_2d if mode == "static2d" else run_static_effective
    m = None
    tof = None
    try:
        if mode == "tof":
            delay, pred, rel, m = run_tof(run)
            tof = (delay, pred, rel)
        else:
            m = driver(run)
    except DriverError as exc:
        errors.append(_error_entry(mode, exc))
        m = exc.measurement
    if m is not None:
        _echo_resolved(echo, m.run)
    if m is not None and not errors and o["convergence_check"]:
        try:
            if mode == "tof":
                d_ref = run_tof(m.run.refined())[0]
                delta = abs(d_ref - tof[0]) / abs(tof[0]) if tof[0] else abs(d_ref - tof[0])
                m.diagnostics.update({"convergence_delta": delta, "convergence_tolerance": tol["convergence"],
                                      "converged": bool(delta <= tol["convergence"]), "refined_delay": d_ref})
            else:
                check_convergence(m.run, m, tolerance=tol["convergence"], driver=driver)
        except (DriverError, ConfigError) as exc:
            errors.append(_error_entry("convergence", exc))
    conv = _convergence_block(m, o["convergence_check"] and not errors)
    if conv["checked"]:
        ck.flag("converged", conv["converged"])
    payload = {"measurement": _m_dict(m, scale)}
    row = {}
    if m is not None:
        _measurement_checks(ck, mode, m, tol, constriction=o["constriction"])
        d = m.diagnostics
        if mode == "tof":
            ts = scale.factors["time"]
            delay, pred, rel = tof
            row = {"delay_sim": delay * ts, "delay_pred": pred * ts, "rel_err": rel, "dphi_sim": m.dphi_sim,
                   "converged": d.get("converged")}
            if o["constriction"]:
                ck.le("rel_err_delay", rel, tol.get("delay"))
            payload["tof"] = {k: row[k] for k in ("delay_sim", "delay_pred", "rel_err")}
        else:
            pm = scale.factors["momentum"]
            row = {"dphi_sim": m.dphi_sim, "dphi_eq2": m.dphi_eq, "dphi_exact": m.dphi_exact,
                   "dp_sim": m.dp_sim * pm, "dp_eq1": m.dp_eq * pm, "rel_err_eq2": m.rel_err_eq,
                   "rel_err_exact": m.rel_err_exact, "rel_err_dp": m.rel_err_dp, "mode_mixing": d.get("mode_mixing"),
                   "reflection": d.get("reflection"), "converged": d.get("converged")}
    payload["columns"] = CSV_COLUMNS[mode]
    payload["table"] = [row] if row else []
    return payload, conv


def _run_temporal(sc: ScenarioFile, echo: dict, ck: _Checks, errors: list, jobs: int):
    particle = _particle(sc)
    scale = _scale(sc, particle, sc.get("window")["a"])
    run = _temporal_run(sc, scale)
    tol, o = sc.get("tolerances"), sc.get("options")
    m = None
    try:
        m = run_temporal(run)
    except DriverError as exc:
        errors.append(_error_entry("temporal", exc))
        m = exc.measurement
    if m is not None:
        _echo_resolved(echo, m.run)
    if m is not None and not errors and o["convergence_check"]:
        try:
            check_convergence(m.run, m, tolerance=tol["convergence"], driver=run_temporal)
        except (DriverError, ConfigError) as exc:
            errors.append(_error_entry("convergence", exc))
    conv = _convergence_block(m, o["convergence_check"] and not errors)
    if conv["checked"]:
        ck.flag("converged", conv["converged"])
    row = {}
    if m is not None:
        _measurement_checks(ck, "temporal", m, tol, longitudinal=o["with_longitudinal"])
        es, d = scale.factors["energy"], m.diagnostics
        row = {"dphi_sim": m.dphi_sim, "dphi_eq4": m.dphi_eq, "dphi_exact": m.dphi_exact, "dE_sim": m.dE_sim * es,
               "dE_eq3": m.dE_eq * es, "rel_err_exact": m.rel_err_exact, "rel_err_dE": m.rel_err_dE,
               "fidelity": d.get("fidelity"), "px_drift": d.get("px_drift"), "converged": d.get("converged")}
    payload = {"measurement": _m_dict(m, scale), "columns": CSV_COLUMNS["temporal"],
               "table": [row] if row else []}
    return payload, conv


_SWEEP_KIND = {"lambda": "length", "a": "length", "l": "length", "T": "time"}
_EXPECTED_EXPONENT = {("static", "lambda"): 1.0, ("static", "l"): 1.0, ("temporal", "lambda"): 0.0}


def _run_sweep(sc: ScenarioFile, echo: dict, ck: _Checks, errors: list, jobs: int):
    sw, tol, o = sc.get("sweep"), sc.get("tolerances"), sc.get("options")
    base_mode = sw["base"]
    particle = _particle(sc)
    geo_a = (sc.get("window") if base_mode == "temporal" else sc.get("channel"))["a"]
    scale = _scale(sc, particle, geo_a)
    if base_mode == "temporal":
        base = _temporal_run(sc, scale)
    else:
        base = _static_run(sc, scale, "full_2d" if base_mode == "static2d" else "effective_1d")
    mult = geo_a if sw["relative_to_a"] else 1.0
    values = [v * mult for v in sw["values"]]
    nat = [scale.to_natural(v, _SWEEP_KIND[sw["parameter"]]) for v in values]
    table = sweep(base, sw["parameter"], nat, jobs=jobs, check=o["convergence_check"])
    kind = "temporal" if base_mode == "temporal" else "static"
    pm, es = scale.factors["momentum"], scale.factors["energy"]
    rows, conv_rows = [], []
    for i, (v, r) in enumerate(zip(values, table.rows)):
        m = r.measurement
        row = {"param": sw["parameter"], "value": v, "error": r.error,
               "dphi_sim": None if m is None else m.dphi_sim}
        if r.error:
            errors.append({"where": f"sweep[{i}]", "type": r.error.split(":")[0], "message": r.error})
            ck.flag(f"row[{i}].ok", False)
        if m is not None:
            d = m.diagnostics
            if kind == "static":
                row.update({"dphi_eq2": m.dphi_eq, "dphi_exact": m.dphi_exact,
                            "dp_sim": None if m.dp_sim is None else m.dp_sim * pm, "rel_err_eq2": m.rel_err_eq})
            else:
                row.update({"dphi_eq4": m.dphi_eq, "dphi_exact": m.dphi_exact,
                            "dE_sim": None if m.dE_sim is None else m.dE_sim * es})
            row.update({"rel_err_exact": m.rel_err_exact, "converged": d.get("converged"),
                        "measurement": _m_dict(m, scale)})
            _measurement_checks(ck, base_mode, m, tol, prefix=f"row[{i}].", constriction=o["constriction"],
                                longitudinal=bool(o.get("with_longitudinal")))
            if "converged" in d:
                ck.flag(f"row[{i}].converged", d["converged"])
                conv_rows.append(d["converged"])
        rows.append(row)
    payload = {"base": base_mode, "parameter": sw["parameter"], "columns": CSV_COLUMNS[f"sweep_{kind}"],
               "prediction_column": "dphi_eq2" if kind == "static" else "dphi_exact", "rows": rows,
               "complete": table.complete, "exponent": table.exponent(), "spread": table.spread()}
    expected = _EXPECTED_EXPONENT.get((kind, sw["parameter"]))
    if expected is not None and payload["exponent"] is not None and len(rows) >= 2:
        ck.le("exponent", abs(payload["exponent"] - expected), tol["exponent"])
    if kind == "temporal" and sw["parameter"] == "lambda" and payload["spread"] is not None:
        ck.le("spread", payload["spread"], tol["spread"])
    if sw["parameter"] == "lambda":
        try:
            payload["classification"] = asdict(classify(table))
        except (IndeterminateError, ValueError) as exc:
            payload["classification"] = {"label": None, "error": str(exc)}
    if kind == "temporal":
        view = eq5_view(table, base)
        payload["eq5_view"] = view
        for i, e in enumerate(view):
            if e is not None:
                ck.le(f"row[{i}].eq5_rel_diff", e["rel_diff"], tol["equivalence"])
    checked = bool(o["convergence_check"]) and bool(conv_rows)
    conv = {"checked": checked, "converged": all(conv_rows) if checked else None, "rows": conv_rows}
    return payload, conv


def _run_fringe(sc: ScenarioFile, echo: dict, ck: _Checks, errors: list, jobs: int):
    sp, law_b, off = sc.get("spectrum"), sc.get("law"), sc.get("offsets")
    units, mass = _units(sc), _particle(sc).mass
    if sp["kind"] == "monochromatic":
        spectrum = Spectrum.monochromatic(sp["lambda0"])
    elif sp["kind"] == "gaussian":
        spectrum = Spectrum.gaussian(sp["lambda0"], sp["fwhm"], sp["points"], sp["span"])
    else:
        spectrum = Spectrum.tabulated(sp["wavelengths"], sp["weights"])
    if law_b["kind"] == "temporal_eq4":
        law = PhaseLaw.temporal_eq4(_window(sc), mass, units)
    elif law_b["kind"] == "static_eq2":
        law = PhaseLaw.static_eq2(_channel(sc), mass)
    else:
        law = PhaseLaw.exact_dispersion(_channel(sc), mass)
    chi = np.linspace(off["start"], off["stop"], off["num"], endpoint=False)
    ig = fringe(law, spectrum, chi)
    if ig.visibility_fit is not None:
        ck.le("visibility_duality", abs(ig.visibility - ig.visibility_fit), sc.get("tolerances")["visibility"])
    try:
        cls = asdict(classify(law, spectrum))
    except (IndeterminateError, ValueError) as exc:
        cls = {"label": None, "error": str(exc)}
    table = [{"offset": float(x), "intensity": float(i), "visibility": ig.visibility,
              "centroid_shift": ig.centroid_shift} for x, i in zip(ig.offsets, ig.intensity)]
    payload = {"interferogram": {"offsets": ig.offsets, "intensity": ig.intensity, "visibility": ig.visibility,
                                 "visibility_fit": ig.visibility_fit, "centroid_shift": ig.centroid_shift,
                                 "phase_fit": ig.phase_fit},
               "law": law_b["kind"], "spectrum_size": int(spectrum.wavelengths.size), "classification": cls,
               "columns": CSV_COLUMNS["fringe"], "table": table}
    return payload, {"checked": False, "converged": None}


def _run_analytic(sc: ScenarioFile, echo: dict, ck: _Checks, errors: list, jobs: int):
    return {"columns": CSV_COLUMNS["analytic"], "table": []}, {"checked": False, "converged": None}


_RUNNERS = {"analytic": _run_analytic, "static": _run_static, "static2d": _run_static, "tof": _run_static,
            "temporal": _run_temporal, "sweep": _run_sweep, "fringe": _run_fringe}


def _scenario_predictions(sc: ScenarioFile) -> dict:
    units = _units(sc)
    particle = _particle(sc) if sc.get("particle") else None
    channel = _channel(sc) if sc.get("channel") else None
    window = _window(sc) if sc.get("window") else None
    return predictions(particle, channel, window, units)


def run_scenario(scenario: ScenarioFile, out_dir=None, jobs: int = 1, plot: bool = False) -> ResultRecord:
    """Run a parsed scenario; when ``out_dir`` is given write results.json, results.csv and optionally plot.svg."""
    t0 = time.perf_counter()
    echo = scenario.echo()
    ck, errors = _Checks(), []
    preds, payload, conv = {}, {"columns": [], "table": []}, {"checked": False, "converged": None}
    try:
        preds = _scenario_predictions(scenario)
        payload, conv = _RUNNERS[scenario.mode](scenario, echo, ck, errors, jobs)
    except (DomainError, ConfigError, DriverError, ValueError) as exc:
        errors.append(_error_entry(scenario.mode, exc))
    if scenario.mode == "analytic":
        payload["table"] = [{"quantity": k, "value": v} for k, v in preds.items()]
        if "eq5_rel_diff" in preds:
            ck.le("eq5_rel_diff", preds["eq5_rel_diff"], scenario.get("tolerances").get("equivalence"))
    status = "ok" if ck.passed and not errors else "fail"
    record = ResultRecord(scenario.mode, status, echo, preds, payload, ck.items, conv, errors,
                          time.perf_counter() - t0)
    if out_dir is not None:
        write_record(record, out_dir, plot=plot)
    return record


def write_record(record: ResultRecord, out_dir, plot: bool = False):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.json").write_text(record.to_json(), encoding="utf-8")
    (out / "results.csv").write_text(record.csv(), encoding="utf-8")
    if plot:
        try:
            emit_plot(record, out / "plot.svg")
        except PlotError as exc:
            print(f"plot: {exc}", file=sys.stderr)


# -- command line -------------------------------------------------------------


def analytic_table(case: str, units: str = "natural", a: float = 1.0, lam: float | None = None,
                   l: float | None = None, T: float | None = None, mass: float | None = None,
                   ramp: float = 0.0, a_wide: float | None = None) -> dict:
    """Closed-form values for one case; the ``analytic`` subcommand prints this table."""
    u = SI if units == "si" else NATURAL
    mass = mass if mass is not None else (NEUTRON_MASS if u is SI else 1.0)

    def need(name, v):
        if v is None:
            raise ValueError(f"case {case!r} needs --{name}")
        return v

    if case == "temporal":
        p = ParticleSpec(mass, lam if lam is not None else 2 * a)
        w = TemporalWindow(a, need("T", T), ramp, a_wide if a_wide is not None else WIDE_LIMIT * a)
        return predictions(p, None, w, u)
    p = ParticleSpec(mass, need("lambda", lam))
    ch = ChannelSpec(a, need("l", l))
    full = predictions(p, ch, None, u)
    keys = {
        "static": ("epsilon", "propagating", "dp_eq1", "dp_eq1_wavelength_form", "dphi_eq2",
                   "dphi_eq2_energy_form", "dphi_exact"),
        "equivalence": ("transit_time", "eq5_dphi_static", "eq5_dphi_temporal_at_transit", "eq5_rel_diff"),
        "tof": ("dp_eq1", "tof_delay", "transit_time"),
    }[case]
    return {k: full.get(k) for k in keys}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.16e" % v
    return "null" if v is None else str(v)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conflab", description="Confinement phase shifts: formulas and simulations.")
    sub = ap.add_subparsers(dest="command", required=True)
    an = sub.add_parser("analytic", help="print closed-form values as key=value lines")
    an.add_argument("--case", required=True, choices=["static", "temporal", "equivalence", "tof"])
    an.add_argument("--units", default="natural", choices=["natural", "si"])
    an.add_argument("--a", type=float, required=True, help="wall separation")
    an.add_argument("--lambda", dest="lam", type=float, help="de Broglie wavelength")
    an.add_argument("--l", type=float, help="channel length")
    an.add_argument("--T", type=float, help="hold time of the temporal window")
    an.add_argument("--mass", type=float, help="particle mass (default: 1, or the neutron mass in si)")
    an.add_argument("--ramp", type=float, default=0.0, help="closing time of the temporal window")
    an.add_argument("--a-wide", dest="a_wide", type=float, help="open wall separation (default 20 a)")
    rn = sub.add_parser("run", help="run a scenario file")
    rn.add_argument("scenario")
    rn.add_argument("--out", required=True, help="output directory")
    rn.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    rn.add_argument("--plot", action="store_true", help="also write plot.svg")
    pl = sub.add_parser("plot", help="render plot.svg from a results.json")
    pl.add_argument("results")
    pl.add_argument("--out", help="output SVG path (default: next to results.json)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    if args.command == "analytic":
        try:
            table = analytic_table(args.case, args.units, args.a, args.lam, args.l, args.T, args.mass,
                                   args.ramp, args.a_wide)
        except (ValueError, DomainError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        for k, v in table.items():
            print(f"{k}={_fmt(v)}")
        return EXIT_OK
    if args.command == "run":
        if args.jobs < 1:
            print("error: --jobs must be >= 1", file=sys.stderr)
            return EXIT_INVALID
        try:
            text = Path(args.scenario).read_bytes()
            sc = parse_scenario(text)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        except ScenarioError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_INVALID
        rec = run_scenario(sc, args.out, jobs=args.jobs, plot=args.plot)
        for c in rec.checks:
            print(f"{'PASS' if c['pass'] else 'FAIL'} {c['name']}: {_fmt(c['value'])} {c['op']} {_fmt(c['limit'])}")
        for e in rec.errors:
            print(f"ERROR {e['where']}: {e['type']}: {e['message']}", file=sys.stderr)
        print(f"status={rec.status} wall_clock_s={rec.wall_clock_s:.2f} out={args.out}")
        return rec.exit_code
    src = Path(args.results)
    try:
        record = json.loads(src.read_text(encoding="utf-8"))
        out = Path(args.out) if args.out else src.with_name("plot.svg")
        emit_plot(record, out)
    except (OSError, json.JSONDecodeError, PlotError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
