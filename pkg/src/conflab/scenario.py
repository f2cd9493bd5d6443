"""Scenario files: strict JSON schema, semantic validation and default resolution."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass

import jsonschema

from .experiments.runs import (EQUIVALENCE_TOLERANCE, STATIC_2D_TOLERANCES, STATIC_TOLERANCES,
                               TEMPORAL_TOLERANCES, TOF_TOLERANCES)
from .quantities import NEUTRON_MASS, WIDE_LIMIT

SCHEMA_VERSION = 1
MODES = ("analytic", "static", "static2d", "temporal", "tof", "sweep", "fringe")
SI_MASS_LIMIT = 1e-20  # kg; anything heavier is not a single particle

_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_pos_or_null = {"type": ["number", "null"], "exclusiveMinimum": 0}
_int_or_null = {"type": ["integer", "null"], "minimum": 1}


def _obj(props: dict, required=()):
    return {"type": "object", "additionalProperties": False, "properties": props, "required": list(required)}


TOLERANCE_KEYS = ("dphi_eq", "dphi_exact", "dp_eq", "dE_eq", "delay", "fidelity", "px_drift", "mode_mixing",
                  "reflection", "convergence", "exponent", "spread", "equivalence", "visibility")

SCHEMA = _obj({
    "schema_version": {"const": SCHEMA_VERSION},
    "mode": {"enum": list(MODES)},
    "units": {"enum": ["natural", "si"]},
    "seed": {"type": "integer"},
    "particle": _obj({"mass": _pos, "lambda": _pos}, ["lambda"]),
    "channel": _obj({"a": _pos, "l": _pos, "taper_len": _nonneg, "a_out": _pos_or_null}, ["a", "l"]),
    "window": _obj({"a": _pos, "T": _nonneg, "ramp": _nonneg, "a_wide": _pos,
                    "schedule": {"enum": ["linear", "smooth"]}}, ["a", "T", "ramp", "a_wide"]),
    "solver": _obj({
        "method": {"enum": ["split_step_spectral", "implicit_midpoint_fd", None]},
        "dt": _pos_or_null, "steps": _int_or_null, "probe_every": _int_or_null,
        "boundary": {"type": ["array", "null"], "minItems": 1, "maxItems": 2,
                     "items": _obj({"kind": {"enum": ["periodic", "dirichlet", "absorbing"]},
                                    "width": _nonneg, "strength": _nonneg}, ["kind"])},
        "v0_factor": _pos, "wall_cells": _pos}),
    "grid": {"oneOf": [{"type": "null"}, _obj({
        "extent": {"type": "array", "items": _pos, "minItems": 1, "maxItems": 2},
        "points": {"type": "array", "items": {"type": "integer", "minimum": 64}, "minItems": 1, "maxItems": 2}},
        ["extent", "points"])]},
    "options": _obj({
        "with_longitudinal": {"type": "boolean"}, "packet_width": _pos_or_null,
        "constriction": {"type": "boolean"}, "dp_window": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "detector_offset": {"type": ["number", "null"]}, "convergence_check": {"type": "boolean"},
        "target_eq3": {"type": "boolean"}, "fidelity_floor": {"type": "number", "minimum": 0, "maximum": 1}}),
    "sweep": _obj({"base": {"enum": ["static", "static2d", "temporal"]},
                   "parameter": {"enum": ["lambda", "a", "l", "T"]},
                   "values": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                   "relative_to_a": {"type": "boolean"}}, ["base", "parameter", "values"]),
    "spectrum": _obj({"kind": {"enum": ["monochromatic", "gaussian", "tabulated"]},
                      "lambda0": _pos, "fwhm": _pos, "points": {"type": "integer", "minimum": 1}, "span": _pos,
                      "wavelengths": {"type": "array", "items": _pos, "minItems": 1},
                      "weights": {"type": "array", "items": _nonneg, "minItems": 1}}, ["kind"]),
    "law": _obj({"kind": {"enum": ["static_eq2", "exact_dispersion", "temporal_eq4"]}}, ["kind"]),
    "offsets": _obj({"start": {"type": "number"}, "stop": {"type": "number"},
                     "num": {"type": "integer", "minimum": 3}}),
    "tolerances": {"type": "object", "additionalProperties": False,
                   "properties": {k: _nonneg for k in TOLERANCE_KEYS}},
}, ["schema_version", "mode"])

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


class ScenarioError(ValueError):
    """All validation failures of a scenario, each as ``(path, message)``."""

    def __init__(self, errors: list):
        self.errors = errors
        super().__init__("invalid scenario:\n" + "\n".join(f"  {p}: {m}" for p, m in errors))


def default_tolerances(mode: str, base: str | None = None) -> dict:
    m = base if mode == "sweep" else mode
    if m == "static":
        tol = dict(STATIC_TOLERANCES)
    elif m == "static2d":
        tol = dict(STATIC_2D_TOLERANCES)
    elif m == "temporal":
        tol = dict(TEMPORAL_TOLERANCES)
    elif m == "tof":
        tol = dict(TOF_TOLERANCES)
    elif m == "fringe":
        tol = {"visibility": 1e-10}
    else:
        tol = {}
    if mode == "sweep":
        tol.update({"exponent": 0.02, "spread": 1e-3, "equivalence": 0.01})
    if mode == "analytic":
        tol["equivalence"] = 1e-12
    if mode == "temporal":
        tol["equivalence"] = EQUIVALENCE_TOLERANCE
    return tol


def _path(parts) -> str:
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in parts)


@dataclass
class ScenarioFile:
    schema_version: int
    mode: str
    units: str
    seed: int
    blocks: dict

    def get(self, name: str, default=None):
        return self.blocks.get(name, default)

    @property
    def simulation_mode(self) -> str | None:
        if self.mode == "sweep":
            return self.blocks["sweep"]["base"]
        return self.mode if self.mode in ("static", "static2d", "temporal", "tof") else None

    def echo(self) -> dict:
        out = {"schema_version": self.schema_version, "mode": self.mode, "units": self.units, "seed": self.seed}
        out.update(copy.deepcopy(self.blocks))
        return out


def _required_blocks(doc: dict) -> list:
    mode = doc.get("mode")
    need = []
    if mode == "analytic":
        need = ["particle"] if "channel" in doc else []
        if "channel" not in doc and "window" not in doc:
            need.append("channel|window")
    elif mode in ("static", "static2d", "tof"):
        need = ["particle", "channel"]
    elif mode == "temporal":
        need = ["window"]
    elif mode == "sweep":
        need = ["sweep"]
        base = doc.get("sweep", {}).get("base")
        need += ["particle", "channel"] if base in ("static", "static2d") else ["window"] if base == "temporal" else []
    elif mode == "fringe":
        need = ["spectrum", "law"]
        kind = doc.get("law", {}).get("kind")
        if kind in ("static_eq2", "exact_dispersion"):
            need.append("channel")
        elif kind == "temporal_eq4":
            need.append("window")
    return need


def _semantic_errors(doc: dict) -> list:
    errs = []
    for b in _required_blocks(doc):
        if "|" in b:
            errs.append(("$", f"mode {doc['mode']!r} requires one of the blocks {b.split('|')}"))
        elif b not in doc:
            errs.append((f"$.{b}", f"mode {doc['mode']!r} requires a {b!r} block"))
    units = doc.get("units", "natural")
    part, ch, win = doc.get("particle"), doc.get("channel"), doc.get("window")
    if part and "mass" in part:
        if units == "si" and part["mass"] > SI_MASS_LIMIT:
            errs.append(("$.particle.mass", f"units are si but mass {part['mass']:g} kg is not a particle mass"))
        if units == "natural" and part["mass"] < SI_MASS_LIMIT:
            errs.append(("$.particle.mass", f"units are natural but mass {part['mass']:g} looks like kilograms"))
    if ch:
        if "taper_len" in ch and "l" in ch and ch["taper_len"] >= ch["l"] / 2:
            errs.append(("$.channel.taper_len", "taper_len must be smaller than l/2"))
        if ch.get("a_out") is not None and "a" in ch and ch["a_out"] <= ch["a"]:
            errs.append(("$.channel.a_out", "outer guide a_out must exceed a"))
    if win and "a" in win and "a_wide" in win and win["a_wide"] / win["a"] < WIDE_LIMIT:
        errs.append(("$.window.a_wide", f"a_wide/a must be >= {WIDE_LIMIT:g}"))
    mode = doc.get("mode")
    static_like = mode in ("static", "static2d", "tof") or (
        mode == "sweep" and doc.get("sweep", {}).get("base") in ("static", "static2d"))
    if static_like and part and ch and "lambda" in part and "a" in ch:
        if part["lambda"] >= 2 * ch["a"]:
            errs.append(("$.particle.lambda", f"below cutoff: lambda={part['lambda']:g} >= 2a={2 * ch['a']:g}; "
                                              "the guided mode does not propagate"))
    sw = doc.get("sweep")
    if mode == "sweep" and sw:
        base, param = sw.get("base"), sw.get("parameter")
        if base in ("static", "static2d") and param == "T":
            errs.append(("$.sweep.parameter", "static sweeps cannot vary T"))
        if base == "temporal" and param == "l":
            errs.append(("$.sweep.parameter", "temporal sweeps cannot vary l"))
        scale = 1.0
        if sw.get("relative_to_a"):
            geo = ch if base in ("static", "static2d") else win
            scale = geo["a"] if geo and "a" in geo else 1.0
        for i, v in enumerate(sw.get("values", [])):
            x = v * scale
            if not x > 0 and param != "T":
                errs.append((f"$.sweep.values[{i}]", "value must be positive"))
            if param == "T" and x < 0:
                errs.append((f"$.sweep.values[{i}]", "T must be >= 0"))
            if param == "lambda" and static_like and ch and "a" in ch and x >= 2 * ch["a"]:
                errs.append((f"$.sweep.values[{i}]", f"below cutoff: lambda={x:g} >= 2a"))
    if mode == "sweep":
        if doc.get("grid") is not None:
            errs.append(("$.grid", "sweeps derive the grid per point; leave grid unset"))
        for k in ("dt", "steps", "probe_every", "boundary"):
            if (doc.get("solver") or {}).get(k) is not None:
                errs.append((f"$.solver.{k}", "sweeps derive the solver per point; leave it unset"))
    if mode != "sweep" and "sweep" in doc:
        errs.append(("$.sweep", f"sweep block is not used by mode {mode!r}"))
    sp = doc.get("spectrum")
    if sp:
        kind = sp.get("kind")
        if kind in ("monochromatic", "gaussian") and "lambda0" not in sp:
            errs.append(("$.spectrum.lambda0", f"{kind} spectrum needs lambda0"))
        if kind == "gaussian" and "fwhm" not in sp:
            errs.append(("$.spectrum.fwhm", "gaussian spectrum needs fwhm"))
        if kind == "tabulated":
            if "wavelengths" not in sp or "weights" not in sp:
                errs.append(("$.spectrum", "tabulated spectrum needs wavelengths and weights"))
            elif len(sp["wavelengths"]) != len(sp["weights"]):
                errs.append(("$.spectrum.weights", "weights and wavelengths differ in length"))
    grid = doc.get("grid")
    if grid:
        if len(grid["extent"]) != len(grid["points"]):
            errs.append(("$.grid", "extent and points must have the same length"))
        dim = len(grid["points"])
        want = {"static": 1, "tof": 1, "static2d": 2}.get(mode)
        if mode == "temporal":
            want = 2 if doc.get("options", {}).get("with_longitudinal") else 1
        if want is not None and dim != want:
            errs.append(("$.grid", f"mode {mode!r} needs a {want}D grid, got {dim}D"))
    solver = doc.get("solver") or {}
    method = solver.get("method")
    if method:
        if mode in ("static", "static2d", "tof") and method != "split_step_spectral":
            errs.append(("$.solver.method", f"mode {mode!r} uses split_step_spectral"))
        if mode == "temporal" and method != "implicit_midpoint_fd":
            errs.append(("$.solver.method", "temporal mode uses implicit_midpoint_fd"))
    return errs


def _defaults(doc: dict) -> dict:
    d = copy.deepcopy(doc)
    mode = d["mode"]
    si = d.get("units", "natural") == "si"
    if "particle" in d:
        d["particle"].setdefault("mass", NEUTRON_MASS if si else 1.0)
    elif mode in ("analytic", "temporal", "fringe") or (mode == "sweep" and d["sweep"]["base"] == "temporal"):
        win = d.get("window", {})
        a = win.get("a", 1.0)
        d["particle"] = {"mass": NEUTRON_MASS if si else 1.0, "lambda": 2.0 * a}
    if "channel" in d:
        d["channel"].setdefault("taper_len", 0.0)
        d["channel"].setdefault("a_out", None)
    if "window" in d:
        d["window"].setdefault("schedule", "linear")
    if "sweep" in d:
        d["sweep"].setdefault("relative_to_a", False)
    if "spectrum" in d and d["spectrum"]["kind"] == "gaussian":
        d["spectrum"].setdefault("points", 512)
        d["spectrum"].setdefault("span", 4.0)
    if mode == "fringe":
        d.setdefault("offsets", {})
        d["offsets"].setdefault("start", 0.0)
        d["offsets"].setdefault("stop", 2 * math.pi)
        d["offsets"].setdefault("num", 64)
    sim = mode in ("static", "static2d", "temporal", "tof", "sweep")
    if sim:
        s = d.setdefault("solver", {})
        for k in ("method", "dt", "steps", "probe_every", "boundary"):
            s.setdefault(k, None)
        s.setdefault("v0_factor", 200.0)
        s.setdefault("wall_cells", 2.0)
        d.setdefault("grid", None)
        o = d.setdefault("options", {})
        o.setdefault("convergence_check", True)
        o.setdefault("packet_width", None)
        o.setdefault("constriction", True)
        base = d["sweep"]["base"] if mode == "sweep" else mode
        if base in ("static", "static2d", "tof"):
            o.setdefault("dp_window", 0.5)
            o.setdefault("detector_offset", None)
        if base == "temporal":
            o.setdefault("with_longitudinal", False)
            o.setdefault("target_eq3", True)
            o.setdefault("fidelity_floor", 0.99)
    base = d["sweep"]["base"] if mode == "sweep" else None
    tol = default_tolerances(mode, base)
    tol.update(d.get("tolerances", {}))
    d["tolerances"] = tol
    return d


def parse_scenario(text: str | bytes | dict) -> ScenarioFile:
    """Validate a scenario and apply defaults.  Raises :class:`ScenarioError` listing every problem."""
    if isinstance(text, dict):
        doc = copy.deepcopy(text)
    else:
        try:
            if isinstance(text, bytes):
                text = text.decode("utf-8")
            doc = json.loads(text)
        except UnicodeDecodeError as exc:
            raise ScenarioError([("$", f"not UTF-8 text: {exc}")]) from None
        except json.JSONDecodeError as exc:
            raise ScenarioError([("$", f"not valid JSON: {exc}")]) from None
    if not isinstance(doc, dict):
        raise ScenarioError([("$", "scenario must be a JSON object")])
    errors = [(_path(e.absolute_path), e.message) for e in _VALIDATOR.iter_errors(doc)]
    errors.sort()
    errors += _semantic_errors(doc)
    if errors:
        raise ScenarioError(errors)
    d = _defaults(doc)
    blocks = {k: v for k, v in d.items() if k not in ("schema_version", "mode", "units", "seed")}
    return ScenarioFile(d["schema_version"], d["mode"], d.get("units", "natural"), d.get("seed", 0), blocks)
