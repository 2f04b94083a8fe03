#!/usr/bin/env python3
"""
SVG output: log-log scaling plots of sweep rows and drawings of the native
representation. Figures are built without pyplot so nothing needs a display.
"""

import logging
import math

import matplotlib
from matplotlib.collections import LineCollection
from matplotlib.figure import Figure
from matplotlib.patches import Circle
import numpy as np

from scaling_fit import median_series

logger = logging.getLogger(__name__)

SVG_SALT = "hrg"
SVG_METADATA = {"Date": None}
EDGE_DRAW_CAP = 200_000


def _save(fig, path):
    with matplotlib.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata=SVG_METADATA)


def fit_line(ns, values, correction=0.0):
    """Least-squares line through (ln n, ln y); needs two distinct sizes"""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if correction:
        y = y - correction * np.log(x)
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def emit_plot(rows, path, measurement, correction=0.0, alpha=None, title=None):
    """Scatter of every seed, per-n medians and the fitted power law"""
    fig = Figure(figsize=(6, 4), dpi=100)
    ax = fig.add_subplot(111)
    ax.set_xscale("log")
    ax.set_yscale("log")

    ns, medians, _ = median_series(rows, measurement, alpha)
    pts = [(int(row["n"]), float(row["value"])) for row in rows
           if row.get("measurement") == measurement and row.get("status", "ok") == "ok"
           and float(row["value"]) > 0
           and (alpha is None or math.isclose(float(row["alpha"]), alpha))]
    slope = None
    if pts:
        xs, ys = zip(*pts)
        ax.plot(xs, ys, 'o', color='tab:blue', alpha=0.35, markersize=3, label='seeds')
        ax.plot(ns, medians, 's', color='tab:blue', markersize=5, label='median')
    if ns.shape[0] >= 2:
        slope, intercept = fit_line(ns, medians, correction)
        grid = np.geomspace(ns[0], ns[-1], 50)
        line = np.exp(intercept) * grid ** slope
        if correction:
            line = line * np.log(grid) ** correction
        ax.plot(grid, line, 'r--', linewidth=1.5, label=f'slope {slope:.3f}')
    else:
        ax.set_xlim(1, 10)
        ax.set_ylim(1, 10)

    ax.set_xlabel('n')
    ax.set_ylabel(measurement)
    ax.set_title(title or measurement)
    ax.grid(True, alpha=0.3)
    if pts:
        ax.legend()
    _save(fig, path)
    logger.info("wrote %s (%d points, slope %s)", path, len(pts),
                "n/a" if slope is None else "%.4f" % slope)
    return slope


def draw_native(g, h=None, path="native.svg", draw_edges=True):
    """Vertices at (r cos theta, r sin theta) inside the disk of radius R"""
    R = g.R
    x = g.r * np.cos(g.theta)
    y = g.r * np.sin(g.theta)
    in_center = np.zeros(g.n, dtype=bool)
    if h is not None:
        in_center[h.members] = True

    fig = Figure(figsize=(6, 6), dpi=100)
    ax = fig.add_subplot(111)
    ax.set_aspect("equal")
    ax.add_patch(Circle((0, 0), R, fill=False, color='black', linewidth=1.0))
    ax.add_patch(Circle((0, 0), R / 2.0, fill=False, color='gray', linestyle='--', linewidth=0.8))

    if draw_edges and g.edge_count:
        us, vs = g.edges()
        if us.shape[0] > EDGE_DRAW_CAP:
            logger.info("drawing only the first %d of %d edges", EDGE_DRAW_CAP, us.shape[0])
            us, vs = us[:EDGE_DRAW_CAP], vs[:EDGE_DRAW_CAP]
        segs = np.stack([np.column_stack([x[us], y[us]]), np.column_stack([x[vs], y[vs]])], axis=1)
        colors = np.where((in_center[us] & in_center[vs])[:, None],
                          [[0.85, 0.33, 0.1, 0.5]], [[0.5, 0.5, 0.5, 0.25]])
        ax.add_collection(LineCollection(segs, colors=colors, linewidths=0.3))

    ax.scatter(x[~in_center], y[~in_center], s=2, color='gray')
    ax.scatter(x[in_center], y[in_center], s=3, color='tab:red')
    ax.set_xlim(-R * 1.05, R * 1.05)
    ax.set_ylim(-R * 1.05, R * 1.05)
    ax.set_axis_off()
    p = g.params
    ax.set_title(f"alpha={p.alpha:g}, C={p.C:g}, n={p.n}"
                 + (f", center component {h.k}" if h is not None else ""))
    _save(fig, path)
