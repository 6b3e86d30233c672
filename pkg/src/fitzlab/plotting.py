"""One-dimensional slices of pair functions, as CSV tables and PNG figures.

matplotlib is imported lazily (Agg backend) so runs with figures disabled
never touch it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numerics import PairFunction, pair_products

SLICE_POINTS = 201


@dataclass
class Slice:
    """Values of several pair functions along ``p0 + s * direction``."""

    name: str
    s: np.ndarray
    points: np.ndarray
    columns: dict

    def rows(self):
        keys = list(self.columns)
        for i in range(self.s.size):
            yield [self.s[i], *self.points[i], *(self.columns[k][i] for k in keys)]

    def header(self) -> list[str]:
        n = self.points.shape[1] // 2
        coords = [f"x{i}" for i in range(n)] + [f"xstar{i}" for i in range(n)]
        return ["s", *coords, *self.columns]


def make_slice(name: str, functions: dict[str, PairFunction], p0, direction, s_range,
               count: int = SLICE_POINTS) -> Slice:
    p0 = np.asarray(p0, dtype=float)
    d = np.asarray(direction, dtype=float)
    s = np.linspace(s_range[0], s_range[1], count)
    P = p0[None, :] + s[:, None] * d[None, :]
    cols = {"pi": pair_products(P)}
    for label, h in functions.items():
        cols[label] = np.asarray(h.evaluate(P), dtype=float)
    return Slice(name, s, P, cols)


def _fmt(v) -> str:
    v = float(v)
    if np.isposinf(v):
        return "inf"
    if np.isneginf(v):
        return "-inf"
    return repr(round(v, 12))


def write_slice_csv(sl: Slice, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(sl.header())
        for row in sl.rows():
            w.writerow([_fmt(v) for v in row])
    return path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_slice(sl: Slice, path, title: str = "") -> Path:
    """Line plot of every column against ``s``; infinite values leave gaps."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    for label, v in sl.columns.items():
        y = np.where(np.isfinite(v), v, np.nan)
        style = {"color": "0.35", "lw": 1.0, "ls": "--"} if label == "pi" else {"lw": 1.6}
        ax.plot(sl.s, y, label=label, **style)
    ax.set_xlabel("s")
    ax.set_ylabel("value")
    ax.set_title(title or sl.name, fontsize=10)
    ax.legend(frameon=False, fontsize=8)
    ax.grid(alpha=0.25)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_gap_map(h: PairFunction, box, graph_points, path, title: str = "", resolution: int = 161) -> Path:
    """Filled contours of ``h - pi`` over a 2-D box, with the graph overlaid."""
    plt = _pyplot()
    box = np.asarray(box, dtype=float)
    xs = np.linspace(box[0, 0], box[0, 1], resolution)
    ys = np.linspace(box[1, 0], box[1, 1], resolution)
    X, Y = np.meshgrid(xs, ys)
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    gap = h.evaluate(P) - pair_products(P)
    G = np.where(np.isfinite(gap), gap, np.nan).reshape(X.shape)
    fig, ax = plt.subplots(figsize=(5.0, 4.4))
    cs = ax.contourf(X, Y, G, levels=20, cmap="viridis")
    fig.colorbar(cs, ax=ax, label="h - pi")
    gp = np.asarray(graph_points, dtype=float)
    if gp.size:
        ax.plot(gp[:, 0], gp[:, 1], ".", color="w", ms=2.5)
    ax.set_xlabel("x")
    ax.set_ylabel("x*")
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
