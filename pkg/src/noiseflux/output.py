"""CSV and SVG writers for time series.

The SVG writer is deliberately small: one ``<polyline>`` per series, error
bars and axes drawn with ``<line>``, labels with ``<text>``. No external
plotting stack is needed and the result is a single self-contained file.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from html import escape
from pathlib import Path

import numpy as np

from .errors import ConfigError

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#17becf", "#7f7f7f", "#bcbd22")


@dataclass(eq=False)
class Series:
    name: str
    t: np.ndarray
    y: np.ndarray
    err: np.ndarray = None
    axis: str = "left"
    dashed: bool = False

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.err is not None:
            self.err = np.asarray(self.err, dtype=float)


def _require(series):
    series = list(series)
    if not series:
        raise ConfigError("nothing to write: empty series collection", key="routes")
    return series


def emit_csv(series, path) -> Path:
    """Write series sharing one time grid as ``t,<name>,...`` with 17 significant digits."""
    series = _require(series)
    t = series[0].t
    for s in series[1:]:
        if s.t.shape != t.shape or np.any(s.t != t):
            raise ConfigError(f"series {s.name!r} is on a different time grid", key="t_samples")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [s.name for s in series])
        cols = [t] + [s.y for s in series]
        for row in zip(*cols):
            w.writerow([f"{v:.17g}" for v in row])
    return path


def read_csv(path) -> dict:
    """Inverse of :func:`emit_csv`: column name -> float array."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]) if body else np.empty((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}


def emit_table(rows, path) -> Path:
    """Write a list of flat dicts (same keys) as CSV."""
    rows = list(rows)
    if not rows:
        raise ConfigError("nothing to write: empty table", key="routes")
    path = Path(path)
    keys = list(rows[0].keys())
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([f"{r[k]:.17g}" if isinstance(r[k], float) else r[k] for k in keys])
    return path


def _nice_ticks(lo, hi, target=6):
    if not math.isfinite(lo) or not math.isfinite(hi):
        return []
    if hi == lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _fmt(v):
    return f"{v:.4g}"


def _range(series, axis):
    vals = []
    for s in series:
        if s.axis != axis:
            continue
        y = s.y
        if s.err is not None:
            vals.extend([np.nanmin(y - s.err), np.nanmax(y + s.err)])
        vals.extend([np.nanmin(y), np.nanmax(y)])
    if not vals:
        return None
    lo, hi = float(min(vals)), float(max(vals))
    pad = 0.05 * (hi - lo) if hi > lo else 1.0
    return lo - pad, hi + pad


def emit_svg(series, path, title="", xlabel="t (dimensionless)",
             ylabel="flux j (dimensionless)", y2label="", width=800, height=500) -> Path:
    """Line chart with optional right-hand axis and error bars."""
    series = _require(series)
    ml, mr, mt, mb = 80, 80 if any(s.axis == "right" for s in series) else 30, 40, 60
    pw, ph = width - ml - mr, height - mt - mb
    t_lo = min(float(np.min(s.t)) for s in series)
    t_hi = max(float(np.max(s.t)) for s in series)
    if t_hi == t_lo:
        t_hi = t_lo + 1.0
    ranges = {"left": _range(series, "left"), "right": _range(series, "right")}

    def sx(t):
        return ml + (t - t_lo) / (t_hi - t_lo) * pw

    def sy(v, axis):
        lo, hi = ranges[axis]
        return mt + ph - (v - lo) / (hi - lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2}" y="{mt / 2 + 4}" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    # frame and ticks
    out.append(f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>')
    out.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>')
    for tv in _nice_ticks(t_lo, t_hi):
        x = sx(tv)
        out.append(f'<line x1="{x:.2f}" y1="{mt + ph}" x2="{x:.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{mt + ph + 18}" text-anchor="middle">{_fmt(tv)}</text>')
    for axis, x0, anchor, dx in (("left", ml, "end", -8), ("right", ml + pw, "start", 8)):
        if ranges[axis] is None:
            continue
        if axis == "right":
            out.append(f'<line x1="{x0}" y1="{mt}" x2="{x0}" y2="{mt + ph}" stroke="black"/>')
        for v in _nice_ticks(*ranges[axis]):
            y = sy(v, axis)
            out.append(f'<line x1="{x0}" y1="{y:.2f}" x2="{x0 + (5 if dx > 0 else -5)}" '
                       f'y2="{y:.2f}" stroke="black"/>')
            out.append(f'<text x="{x0 + dx}" y="{y + 4:.2f}" text-anchor="{anchor}">{_fmt(v)}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{mt + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {mt + ph / 2})">{escape(ylabel)}</text>')
    if y2label and ranges["right"] is not None:
        xr = width - 15
        out.append(f'<text x="{xr}" y="{mt + ph / 2}" text-anchor="middle" '
                   f'transform="rotate(90 {xr} {mt + ph / 2})">{escape(y2label)}</text>')
    # data
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="4 3"' if s.dashed else ""
        pts = " ".join(f"{sx(t):.2f},{sy(v, s.axis):.2f}" for t, v in zip(s.t, s.y)
                       if math.isfinite(v))
        if s.err is not None:
            step = max(1, s.t.size // 60)
            for t, v, e in zip(s.t[::step], s.y[::step], s.err[::step]):
                if e > 0 and math.isfinite(e):
                    x = sx(t)
                    out.append(f'<line x1="{x:.2f}" y1="{sy(v - e, s.axis):.2f}" x2="{x:.2f}" '
                               f'y2="{sy(v + e, s.axis):.2f}" stroke="{color}" stroke-width="1"/>')
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} '
                   f'points="{pts}"><title>{escape(s.name)}</title></polyline>')
    # legend
    lx, ly = ml + 12, mt + 12
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="4 3"' if s.dashed else ""
        y = ly + 16 * i
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 24}" y2="{y}" stroke="{color}" '
                   f'stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 30}" y="{y + 4}">{escape(s.name)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path
