"""Hand-written SVG for profile plots and MDS maps.

Output is a pure function of the inputs with fixed-precision number
formatting, so identical analyses give byte-identical files.
"""
from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"]
PANEL_W = 300
PANEL_H = 230
MARGIN = {"left": 52, "right": 14, "top": 30, "bottom": 42}
MAX_COLS = 3


def _esc(text) -> str:
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _f(v: float) -> str:
    out = f"{v:.2f}"
    return "0.00" if out == "-0.00" else out


def _nice_ceiling(v: float) -> float:
    if v <= 0:
        return 1.0
    mag = 10 ** math.floor(math.log10(v))
    for step in (1, 2, 2.5, 5, 10):
        if step * mag >= v:
            return step * mag
    return 10 * mag


def _canvas(n_panels: int, title: str):
    cols = min(MAX_COLS, max(n_panels, 1))
    rows = math.ceil(max(n_panels, 1) / cols)
    width, height = cols * PANEL_W, rows * PANEL_H + 28
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="Helvetica,Arial,sans-serif">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width / 2:.1f}" y="19" text-anchor="middle" font-size="14" font-weight="bold">{_esc(title)}</text>',
    ]
    origins = [((i % cols) * PANEL_W, 28 + (i // cols) * PANEL_H) for i in range(n_panels)]
    return head, origins


def _panel_title(label: str | None, cid, n_frames: int | None) -> str:
    text = f"C{cid + 1}" if isinstance(cid, (int, np.integer)) else "all"
    if label:
        text += f" [{label}]"
    if n_frames:
        text += f" n={n_frames}"
    return text


def profile_plot(
    matrices: Sequence,
    game_average,
    lineup: Sequence[str] = (),
    labels: Sequence[str] | None = None,
    title: str = "Mean dyad distance per cluster",
) -> str:
    """One panel per cluster: mean distance per canonical dyad vs the stint-wide mean.

    The stint-wide mean of each dyad is drawn as a short horizontal grey line.
    """
    ref = np.asarray(game_average.dyads() if hasattr(game_average, "dyads") else game_average, dtype=np.float64)
    values = [np.asarray(m.dyads()) for m in matrices]
    size = matrices[0].matrix.shape[0] if matrices else 5
    names = list(lineup) if len(lineup) == size else [str(i + 1) for i in range(size)]
    dyads = [f"{names[i]}-{names[j]}" for i, j in itertools.combinations(range(size), 2)]
    y_max = _nice_ceiling(max([ref.max(initial=0.0)] + [v.max(initial=0.0) for v in values]) * 1.05)

    parts, origins = _canvas(len(matrices), title)
    pw = PANEL_W - MARGIN["left"] - MARGIN["right"]
    ph = PANEL_H - MARGIN["top"] - MARGIN["bottom"]
    step = pw / len(dyads)
    for p, (m, vals, (ox, oy)) in enumerate(zip(matrices, values, origins)):
        x0, y0 = ox + MARGIN["left"], oy + MARGIN["top"]

        def ys(v):
            return y0 + ph - v / y_max * ph

        label = labels[p] if labels else None
        parts.append(f'<g class="panel" data-cluster="{m.cluster_id}">')
        parts.append(
            f'<text x="{_f(ox + PANEL_W / 2)}" y="{_f(oy + 18)}" text-anchor="middle" font-size="12">'
            f"{_esc(_panel_title(label, m.cluster_id, m.n_frames))}</text>"
        )
        parts.append(f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(pw)}" height="{_f(ph)}" fill="none" stroke="#999999"/>')
        for tick in np.linspace(0, y_max, 5):
            parts.append(
                f'<text x="{_f(x0 - 4)}" y="{_f(ys(tick) + 3)}" text-anchor="end" font-size="8">{tick:.0f}</text>'
            )
        pts = []
        for d, (v, r) in enumerate(zip(vals, ref)):
            cx = x0 + step * (d + 0.5)
            parts.append(
                f'<line class="reference" x1="{_f(cx - step * 0.4)}" y1="{_f(ys(r))}" x2="{_f(cx + step * 0.4)}" '
                f'y2="{_f(ys(r))}" stroke="#888888" stroke-width="1.5"/>'
            )
            pts.append(f"{_f(cx)},{_f(ys(v))}")
            parts.append(
                f'<text x="{_f(cx)}" y="{_f(y0 + ph + 10)}" text-anchor="end" font-size="7" '
                f'transform="rotate(-45 {_f(cx)} {_f(y0 + ph + 10)})">{_esc(dyads[d])}</text>'
            )
        color = COLORS[p % len(COLORS)]
        parts.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" stroke-width="1.2"/>')
        for d, (v, r) in enumerate(zip(vals, ref)):
            cx = x0 + step * (d + 0.5)
            parts.append(
                f'<circle class="marker" cx="{_f(cx)}" cy="{_f(ys(v))}" r="3" fill="{color}" '
                f'data-dyad="{_esc(dyads[d])}" data-value="{_f(v)}" data-reference="{_f(r)}"/>'
            )
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def mds_plot(
    embeddings: Sequence,
    lineup: Sequence[str] = (),
    labels: Sequence[str] | None = None,
    title: str = "MDS map of mean player distances per cluster",
) -> str:
    """One panel per cluster with the five embedded players; all panels share one scale."""
    reach = max([float(np.abs(e.coords).max(initial=0.0)) for e in embeddings] + [0.0])
    half = _nice_ceiling(reach * 1.15) if reach > 0 else 1.0
    parts, origins = _canvas(len(embeddings), title)
    side = min(PANEL_W - MARGIN["left"] - MARGIN["right"], PANEL_H - MARGIN["top"] - MARGIN["bottom"])
    for p, (e, (ox, oy)) in enumerate(zip(embeddings, origins)):
        n = e.coords.shape[0]
        names = list(lineup) if len(lineup) == n else [f"P{i + 1}" for i in range(n)]
        cx0 = ox + PANEL_W / 2
        cy0 = oy + MARGIN["top"] + side / 2
        scale = side / 2 / half

        label = labels[p] if labels else None
        parts.append(f'<g class="panel" data-cluster="{e.cluster_id}">')
        parts.append(
            f'<text x="{_f(cx0)}" y="{_f(oy + 18)}" text-anchor="middle" font-size="12">'
            f"{_esc(_panel_title(label, e.cluster_id, None))}</text>"
        )
        parts.append(
            f'<rect x="{_f(cx0 - side / 2)}" y="{_f(cy0 - side / 2)}" width="{_f(side)}" height="{_f(side)}" '
            f'fill="none" stroke="#999999"/>'
        )
        parts.append(f'<line x1="{_f(cx0 - side / 2)}" y1="{_f(cy0)}" x2="{_f(cx0 + side / 2)}" y2="{_f(cy0)}" stroke="#dddddd"/>')
        parts.append(f'<line x1="{_f(cx0)}" y1="{_f(cy0 - side / 2)}" x2="{_f(cx0)}" y2="{_f(cy0 + side / 2)}" stroke="#dddddd"/>')
        parts.append(
            f'<text x="{_f(cx0 + side / 2)}" y="{_f(cy0 + side / 2 + 11)}" text-anchor="end" font-size="8">'
            f"axis half-range {half:.0f} cm</text>"
        )
        color = COLORS[p % len(COLORS)]
        dims = e.coords.shape[1]
        for i in range(n):
            x = e.coords[i, 0]
            y = e.coords[i, 1] if dims > 1 else 0.0
            px, py = cx0 + x * scale, cy0 - y * scale
            parts.append(
                f'<circle class="player" cx="{_f(px)}" cy="{_f(py)}" r="4" fill="{color}" '
                f'data-player="{_esc(names[i])}" data-x="{_f(x)}" data-y="{_f(y)}"/>'
            )
            parts.append(f'<text x="{_f(px + 5)}" y="{_f(py - 5)}" font-size="9">{_esc(names[i])}</text>')
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
