"""Table container and CSV / JSON / SVG emission."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {"name": self.name, "columns": list(self.columns),
                "rows": [list(r) for r in self.rows], "meta": dict(self.meta)}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Table":
        return cls(name=obj["name"], columns=list(obj["columns"]),
                   rows=[list(r) for r in obj["rows"]],
                   meta=dict(obj.get("meta", {})))

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


def table_to_csv(table: Table) -> str:
    lines = [",".join(str(c) for c in table.columns)]
    for row in table.rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit(table: Table, fmt: str, path: str) -> str:
    """Write the table as csv, json or svg; returns the path."""
    if fmt == "csv":
        payload = table_to_csv(table)
    elif fmt == "json":
        payload = json.dumps(table.to_json_obj(), indent=2) + "\n"
    elif fmt == "svg":
        payload = svg_from_table(table)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write {fmt} table to {path}: {exc}") from exc
    return path


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f"]


def svg_from_table(table: Table, x_col: int = 0) -> str:
    """Line chart with every non-x numeric column as one series."""
    xs = [row[x_col] for row in table.rows]
    series = []
    for ci, cname in enumerate(table.columns):
        if ci == x_col:
            continue
        ys = [row[ci] for row in table.rows]
        pairs = [(x, y) for x, y in zip(xs, ys)
                 if isinstance(y, (int, float)) and y is not None
                 and not (isinstance(y, float) and math.isnan(y))]
        if pairs:
            series.append((str(cname), [p[0] for p in pairs],
                           [p[1] for p in pairs]))
    return svg_line_chart(series, xlabel=str(table.columns[x_col]),
                          title=table.name,
                          y_log=bool(table.meta.get("y_log", False)))


def svg_line_chart(series, xlabel: str = "", ylabel: str = "",
                   title: str = "", y_log: bool = False,
                   width: int = 720, height: int = 480) -> str:
    """Self-contained SVG line chart: axes, ticks, one polyline per series,
    legend.  Falls back to a linear y axis if log is requested but some value
    is not positive."""
    ml, mr, mt, mb = 70, 160, 40, 55
    pw, ph = width - ml - mr, height - mt - mb
    all_x = [x for _, xs, _ in series for x in xs]
    all_y = [y for _, _, ys in series for y in ys]
    if y_log and any(y <= 0 for y in all_y):
        y_log = False
    if not all_x:
        all_x, all_y = [0.0, 1.0], [0.0, 1.0]

    def span(vals):
        lo, hi = min(vals), max(vals)
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        return lo, hi

    x_lo, x_hi = span(all_x)
    ys_scaled = [math.log10(y) for y in all_y] if y_log else all_y
    y_lo, y_hi = span(ys_scaled)

    def sx(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        v = math.log10(y) if y_log else y
        return mt + ph - (v - y_lo) / (y_hi - y_lo) * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width/2:.1f}" y="24" text-anchor="middle" '
             f'font-size="15" font-family="sans-serif">{_esc(title)}</text>']
    # axes
    parts.append(f'<line x1="{ml}" y1="{mt+ph}" x2="{ml+pw}" y2="{mt+ph}" '
                 f'stroke="black"/>')
    parts.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt+ph}" '
                 f'stroke="black"/>')
    for k in range(5):
        xv = x_lo + k * (x_hi - x_lo) / 4
        xp = sx(xv)
        parts.append(f'<line x1="{xp:.1f}" y1="{mt+ph}" x2="{xp:.1f}" '
                     f'y2="{mt+ph+5}" stroke="black"/>')
        parts.append(f'<text x="{xp:.1f}" y="{mt+ph+20}" text-anchor="middle" '
                     f'font-size="11" font-family="sans-serif">{xv:.4g}</text>')
        yv = y_lo + k * (y_hi - y_lo) / 4
        yp = mt + ph - k * ph / 4
        label = 10.0 ** yv if y_log else yv
        parts.append(f'<line x1="{ml-5}" y1="{yp:.1f}" x2="{ml}" y2="{yp:.1f}" '
                     f'stroke="black"/>')
        parts.append(f'<text x="{ml-8}" y="{yp+4:.1f}" text-anchor="end" '
                     f'font-size="11" font-family="sans-serif">{label:.4g}</text>')
    parts.append(f'<text x="{ml+pw/2:.1f}" y="{height-12}" text-anchor="middle" '
                 f'font-size="13" font-family="sans-serif">{_esc(xlabel)}</text>')
    if ylabel:
        parts.append(f'<text x="18" y="{mt+ph/2:.1f}" text-anchor="middle" '
                     f'font-size="13" font-family="sans-serif" '
                     f'transform="rotate(-90 18 {mt+ph/2:.1f})">{_esc(ylabel)}</text>')
    for si, (label, xs, ys) in enumerate(series):
        color = _COLORS[si % len(_COLORS)]
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.8"/>')
        ly = mt + 16 + 18 * si
        parts.append(f'<line x1="{ml+pw+10}" y1="{ly-4}" x2="{ml+pw+34}" '
                     f'y2="{ly-4}" stroke="{color}" stroke-width="1.8"/>')
        parts.append(f'<text x="{ml+pw+40}" y="{ly}" font-size="12" '
                     f'font-family="sans-serif">{_esc(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))
