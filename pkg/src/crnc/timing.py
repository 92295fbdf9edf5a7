"""Minimal SVG timing diagrams: one lane per rail pair, dual rail dashed."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .model import BAR

__all__ = ["rail_pairs", "timing_svg", "write_timing_svg"]

LANE_H, LANE_GAP, LEFT, RIGHT, TOP, WIDTH = 48, 14, 90, 20, 20, 900


def rail_pairs(species: Sequence[str]) -> list[tuple[str, str | None]]:
    """Group ``W`` with ``W_bar`` when both are present, keeping first-seen order."""
    present = set(species)
    out, seen = [], set()
    for s in species:
        base = s[: -len(BAR)] if s.endswith(BAR) else s
        if base in seen:
            continue
        seen.add(base)
        dual = base + BAR
        if base in present:
            out.append((base, dual if dual in present else None))
        else:
            out.append((s, None))
    return out


def _polyline(t, v, x0, y0, sx, sy, dashed, color):
    pts = " ".join(f"{x0 + sx * a:.2f},{y0 - sy * b:.2f}" for a, b in zip(t, v))
    dash = ' stroke-dasharray="5,3"' if dashed else ""
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.3"{dash} points="{pts}"/>'


def timing_svg(times, columns: dict[str, np.ndarray], max_points: int = 1500, title: str = "") -> str:
    """Render ``columns`` (species -> samples over ``times``) as an SVG document."""
    times = np.asarray(times, dtype=float)
    if len(times) > max_points:
        idx = np.unique(np.linspace(0, len(times) - 1, max_points).round().astype(int))
    else:
        idx = np.arange(len(times))
    t = times[idx]
    pairs = rail_pairs(list(columns))
    height = TOP * 2 + len(pairs) * (LANE_H + LANE_GAP) + 20
    span = (t[-1] - t[0]) if len(t) > 1 else 1.0
    sx = (WIDTH - LEFT - RIGHT) / (span or 1.0)
    vmax = max([1.0] + [float(np.max(c)) for c in columns.values() if len(c)])
    sy = LANE_H / vmax
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="monospace" font-size="11">']
    if title:
        out.append(f'<text x="{LEFT}" y="14">{escape(title)}</text>')
    for i, (a, b) in enumerate(pairs):
        y0 = TOP + 10 + i * (LANE_H + LANE_GAP) + LANE_H
        out.append(f'<line x1="{LEFT}" y1="{y0}" x2="{WIDTH - RIGHT}" y2="{y0}" stroke="#ccc"/>')
        out.append(f'<text x="4" y="{y0 - LANE_H / 2 + 4}">{escape(a)}</text>')
        out.append(_polyline(t - t[0], np.asarray(columns[a])[idx], LEFT, y0, sx, sy, False, "#1f4e9c"))
        if b is not None:
            out.append(_polyline(t - t[0], np.asarray(columns[b])[idx], LEFT, y0, sx, sy, True, "#c0392b"))
    y_axis = TOP + 10 + len(pairs) * (LANE_H + LANE_GAP) + 4
    for tick in np.linspace(t[0], t[-1], 7) if len(t) > 1 else []:
        x = LEFT + sx * (tick - t[0])
        out.append(f'<text x="{x:.1f}" y="{y_axis + 10}" text-anchor="middle">{tick:.3g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_timing_svg(path, trace, include_inputs: bool = True, title: str = "") -> None:
    """Inputs (from the trace's input signal) above the state species."""
    columns = {}
    sig = trace.input_signal
    if include_inputs and sig is not None and len(sig.species) and len(trace.times):
        vals = sig(trace.times)
        for j, s in enumerate(sig.species):
            columns[s] = vals[:, j]
    for s in trace.species:
        columns[s] = trace[s]
    if not len(trace.times):
        svg = f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="40"></svg>\n'
    else:
        svg = timing_svg(trace.times, columns, title=title)
    with open(path, "w") as fh:
        fh.write(svg)
