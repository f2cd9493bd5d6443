"""Minimal deterministic SVG plots for sweep tables and interferograms."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 80, "right": 30, "top": 40, "bottom": 60}


class PlotError(ValueError):
    """The record carries no plottable series."""


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _range(values) -> tuple:
    lo, hi = min(values), max(values)
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class _Canvas:
    def __init__(self, xr, yr):
        self.x0, self.x1 = xr
        self.y0, self.y1 = yr
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        self.parts = []

    def px(self, x: float) -> float:
        return MARGIN["left"] + (x - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y: float) -> float:
        return MARGIN["top"] + (self.y1 - y) / (self.y1 - self.y0) * self.ph

    def axes(self, title: str, xlabel: str, ylabel: str):
        l, t = MARGIN["left"], MARGIN["top"]
        p = self.parts
        p.append(f'<rect x="{l}" y="{t}" width="{self.pw}" height="{self.ph}" fill="none" stroke="#000"/>')
        for xv in _ticks(self.x0, self.x1):
            x = self.px(xv)
            p.append(f'<line x1="{x:.2f}" y1="{t + self.ph}" x2="{x:.2f}" y2="{t + self.ph + 5}" stroke="#000"/>')
            p.append(f'<text x="{x:.2f}" y="{t + self.ph + 20}" text-anchor="middle" font-size="11">{xv:.4g}</text>')
        for yv in _ticks(self.y0, self.y1):
            y = self.py(yv)
            p.append(f'<line x1="{l - 5}" y1="{y:.2f}" x2="{l}" y2="{y:.2f}" stroke="#000"/>')
            p.append(f'<text x="{l - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="11">{yv:.4g}</text>')
        p.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
        p.append(f'<text x="{l + self.pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" '
                 f'font-size="12">{escape(xlabel)}</text>')
        p.append(f'<text x="18" y="{t + self.ph / 2:.1f}" text-anchor="middle" font-size="12" '
                 f'transform="rotate(-90 18 {t + self.ph / 2:.1f})">{escape(ylabel)}</text>')

    def polyline(self, xs, ys, cls: str, color: str):
        pts = " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')

    def points(self, xs, ys, cls: str, color: str):
        for x, y in zip(xs, ys):
            self.parts.append(f'<circle class="{cls}" cx="{self.px(x):.2f}" cy="{self.py(y):.2f}" r="4" '
                              f'fill="{color}"/>')

    def legend(self, entries):
        x, y = MARGIN["left"] + 10, MARGIN["top"] + 16
        for i, (label, color) in enumerate(entries):
            yy = y + 16 * i
            self.parts.append(f'<rect x="{x}" y="{yy - 8}" width="10" height="10" fill="{color}"/>')
            self.parts.append(f'<text x="{x + 16}" y="{yy + 1}" font-size="11">{escape(label)}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
                f'viewBox="0 0 {WIDTH} {HEIGHT}">')
        return "\n".join([head, '<rect width="100%" height="100%" fill="#fff"/>', *self.parts, "</svg>"]) + "\n"


def _finite(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _sweep_svg(payload: dict) -> str:
    rows = payload.get("rows") or []
    pred_key = payload.get("prediction_column")
    pts = [(r["value"], r["dphi_sim"]) for r in rows if _finite(r.get("dphi_sim"))]
    curve = sorted((r["value"], r[pred_key]) for r in rows if pred_key and _finite(r.get(pred_key)))
    if not pts and not curve:
        raise PlotError("nothing to plot: the sweep has no finite phases")
    xs = [p[0] for p in pts] + [c[0] for c in curve]
    ys = [p[1] for p in pts] + [c[1] for c in curve]
    cv = _Canvas(_range(xs), _range(ys))
    param = payload.get("parameter", "value")
    cv.axes(f"phase shift vs {param}", param, "dphi (rad)")
    if curve:
        cv.polyline([c[0] for c in curve], [c[1] for c in curve], "prediction", "#c03")
    cv.points([p[0] for p in pts], [p[1] for p in pts], "simulated", "#036")
    cv.legend([("simulated dphi_sim", "#036"), (f"prediction {pred_key}", "#c03")])
    return cv.render()


def _fringe_svg(payload: dict) -> str:
    ig = payload["interferogram"]
    chi, inten = ig.get("offsets") or [], ig.get("intensity") or []
    if not chi:
        raise PlotError("nothing to plot: empty interferogram")
    cv = _Canvas(_range(chi), (0.0, 1.0))
    cv.axes(f"fringe, visibility {ig['visibility']:.6f}", "offset chi (rad)", "I(chi)")
    cv.polyline(chi, inten, "intensity", "#036")
    return cv.render()


def render_svg(record: dict) -> str:
    """SVG text for a record dict; raises :class:`PlotError` when there is no series."""
    payload = record.get("payload") or {}
    if "rows" in payload:
        return _sweep_svg(payload)
    if "interferogram" in payload:
        return _fringe_svg(payload)
    raise PlotError(f"nothing to plot: {record.get('mode', 'this')} record has no sweep table or interferogram")


def emit_plot(record, path) -> str:
    """Write the plot for ``record`` (a ResultRecord or its dict) to ``path``; returns the path."""
    d = record.to_dict() if hasattr(record, "to_dict") else record
    text = render_svg(d)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return str(path)
