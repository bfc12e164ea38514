"""SVG views of trajectories and clusters, and matplotlib figures for reports.

Trajectories are drawn on a 400x400 canvas as dots whose colour runs from
blue at the first point to red at the last, joined by a faint polyline.
"""
from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .trajectory import Trajectory, resample_by_arc_length

CANVAS = 400
DOT_RADIUS = 2.0  # 4 px dots
GAP = 12
CHOSEN_COLOR = "#2ca02c"
OTHER_COLOR = "#9a9a9a"
SVG_NS = "http://www.w3.org/2000/svg"


def point_color(i: int, n: int) -> str:
    """Linear RGB blend from blue (start) to red (end)."""
    f = i / (n - 1) if n > 1 else 0.0
    r, b = round(255 * f), round(255 * (1 - f))
    return f"#{r:02x}00{b:02x}"


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _trajectory_group(parent, t: Trajectory, x: float, y: float, scale: float):
    g = ET.SubElement(
        parent, "g", {"class": "trajectory", "data-id": t.id,
                      "transform": f"translate({_fmt(x)},{_fmt(y)}) scale({_fmt(scale)})"}
    )
    pts = t.points
    ET.SubElement(
        g, "polyline",
        {"points": " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in pts),
         "fill": "none", "stroke": "#000000", "stroke-opacity": "0.2",
         "stroke-width": _fmt(1.0 / scale)},
    )
    r = _fmt(DOT_RADIUS / scale)
    for i, (px, py) in enumerate(pts):
        ET.SubElement(g, "circle", {"cx": _fmt(px), "cy": _fmt(py), "r": r, "fill": point_color(i, len(pts))})
    return g


def _grid(n: int, cols: int | None) -> tuple[int, int]:
    cols = cols or max(1, math.ceil(math.sqrt(n)))
    return cols, max(1, math.ceil(n / cols))


def _svg(width: float, height: float):
    root = ET.Element(
        "svg", {"xmlns": SVG_NS, "width": _fmt(width), "height": _fmt(height),
                "viewBox": f"0 0 {_fmt(width)} {_fmt(height)}"}
    )
    ET.SubElement(root, "rect", {"width": "100%", "height": "100%", "fill": "#ffffff"})
    return root


def _to_text(root) -> str:
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def _prepare(ts, resample: int | None) -> list[Trajectory]:
    return [resample_by_arc_length(t, resample) for t in ts] if resample else list(ts)


def render_trajectories(ts, cols: int | None = None, panel: float = CANVAS, resample: int | None = None) -> str:
    """Grid of canvases, one trajectory per panel."""
    ts = _prepare(ts, resample)
    cols, rows = _grid(len(ts), cols)
    scale = panel / CANVAS
    root = _svg(cols * (panel + GAP) + GAP, rows * (panel + GAP) + GAP)
    for k, t in enumerate(ts):
        x = GAP + (k % cols) * (panel + GAP)
        y = GAP + (k // cols) * (panel + GAP)
        ET.SubElement(root, "rect", {"x": _fmt(x), "y": _fmt(y), "width": _fmt(panel), "height": _fmt(panel),
                                     "fill": "none", "stroke": "#dddddd"})
        _trajectory_group(root, t, x, y, scale)
    return _to_text(root)


def render_clusters(
    ts,
    labels,
    chosen=(),
    thumb: float = 120.0,
    cols: int = 5,
    resample: int | None = None,
) -> str:
    """One panel per cluster holding thumbnails of its members.

    ``labels`` gives a cluster id per trajectory.  Panels of the cluster ids
    in ``chosen`` get a green border, the rest a grey one.
    """
    ts = _prepare(ts, resample)
    if len(labels) != len(ts):
        raise ValueError("one label per trajectory required")
    clusters: dict[int, list[int]] = {}
    for i, c in enumerate(labels):
        clusters.setdefault(int(c), []).append(i)
    chosen = {int(c) for c in chosen}
    scale = thumb / CANVAS
    heights = []
    for members in clusters.values():
        heights.append(math.ceil(len(members) / cols) * (thumb + GAP) + GAP + 18)
    width = cols * (thumb + GAP) + 3 * GAP
    root = _svg(width, sum(heights) + GAP * (len(heights) + 1))
    y = GAP
    for (c, members), h in zip(clusters.items(), heights):
        picked = c in chosen
        ET.SubElement(root, "rect", {"class": "cluster", "data-cluster": str(c), "x": _fmt(GAP), "y": _fmt(y),
                                     "width": _fmt(width - 2 * GAP), "height": _fmt(h), "fill": "none",
                                     "stroke": CHOSEN_COLOR if picked else OTHER_COLOR,
                                     "stroke-width": "4" if picked else "1.5"})
        label = ET.SubElement(root, "text", {"x": _fmt(2 * GAP), "y": _fmt(y + 15), "font-size": "12",
                                             "font-family": "sans-serif"})
        label.text = f"cluster {c} ({len(members)})"
        for k, i in enumerate(members):
            tx = 2 * GAP + (k % cols) * (thumb + GAP)
            ty = y + 18 + GAP + (k // cols) * (thumb + GAP)
            _trajectory_group(root, ts[i], tx, ty, scale)
        y += h + GAP
    return _to_text(root)


def write_svg(text: str, path) -> None:
    Path(path).write_text(text)


# ---- report figures ------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> None:
    # no timestamp/version chunks, so repeated runs give identical bytes
    fig.savefig(path, dpi=100, metadata={"Software": None})


def plot_metric_bars(rows: list[dict], path, metrics=("accuracy", "precision", "recall", "f1"), title: str = "") -> None:
    """Grouped bars, one group per criterion, one bar per metric (in percent)."""
    plt = _pyplot()
    names = [r["criterion"] for r in rows]
    x = np.arange(len(names))
    width = 0.8 / len(metrics)
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(names) + 2), 4.0))
    for k, m in enumerate(metrics):
        vals = [100 * r[m] if r.get(m) is not None else 0.0 for r in rows]
        ax.bar(x + (k - (len(metrics) - 1) / 2) * width, vals, width, label=m)
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylim(0, 100)
    ax.set_ylabel("%")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8, loc="upper left", bbox_to_anchor=(1.0, 1.0))
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_tau_sweep(rows: list[dict], path, metric: str = "f1") -> None:
    """One line per criterion of ``metric`` against tau (log axis)."""
    plt = _pyplot()
    by_crit: dict[str, list[tuple[float, float]]] = {}
    for r in rows:
        if r.get(metric) is not None:
            by_crit.setdefault(r["criterion"], []).append((r["tau"], 100 * r[metric]))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name, pts in by_crit.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=name)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("tau (px)")
    ax.set_ylabel(f"{metric} (%)")
    ax.set_ylim(0, 100)
    ax.legend(fontsize=8, loc="upper left", bbox_to_anchor=(1.0, 1.0))
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
