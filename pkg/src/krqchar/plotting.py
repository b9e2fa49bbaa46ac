"""Figures for the CLI: quiver windows, module supports, character weights
and verification grids.  Everything renders to a file with the Agg backend."""

from __future__ import annotations

from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .cartan import CartanData  # noqa: E402
from .laurent import LaurentPoly  # noqa: E402
from .quiverbuild import LabeledQuiver, Vertex  # noqa: E402

__all__ = ["plot_quiver", "plot_module", "plot_character_weights", "plot_report_grid"]

_STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def _layered(ax, points: dict, edges: list, labels: dict, boxed=frozenset()) -> None:
    for (u, w), m in Counter(edges).items():
        (x0, y0), (x1, y1) = points[u], points[w]
        for n in range(m):
            bend = 0.0 if m == 1 else 0.15 * (n - (m - 1) / 2)
            ax.annotate(
                "",
                xy=(x1, y1),
                xytext=(x0, y0),
                arrowprops=dict(arrowstyle="->", lw=0.8, color="0.35", shrinkA=9, shrinkB=9, connectionstyle=f"arc3,rad={bend}"),
            )
    for v, (x, y) in points.items():
        box = dict(boxstyle="square,pad=0.2" if v in boxed else "round,pad=0.2", fc="white", ec="0.2", lw=0.6)
        ax.text(x, y, labels[v], ha="center", va="center", fontsize=7, bbox=box)
    xs = [p[0] for p in points.values()] or [0]
    ys = [p[1] for p in points.values()] or [0]
    ax.set_xlim(min(xs) - 0.7, max(xs) + 0.7)
    ax.set_ylim(min(ys) - 1.5, max(ys) + 1.5)
    ax.set_xticks(sorted(set(xs)))
    ax.set_xlabel("node")
    ax.set_ylabel("shift")


def plot_quiver(quiver: LabeledQuiver, path, title: str = "") -> Path:
    """Vertices at (node, shift); frozen vertices are drawn square."""
    with plt.rc_context(_STYLE):
        verts = [v for v in quiver.vertices if isinstance(v, Vertex)]
        fig, ax = plt.subplots(figsize=(1.2 + 0.9 * max(1, len({v.node for v in verts})), 0.35 * len({v.shift for v in verts}) + 1.5))
        points = {v: (v.node, v.shift) for v in verts}
        edges = [(u, w) for (u, w), m in quiver.arrows().items() if u in points and w in points for _ in range(m)]
        _layered(ax, points, edges, {v: f"{v.node},{v.shift}" for v in verts}, frozenset(quiver.frozen))
        ax.set_title(title)
        return _save(fig, path)


def plot_module(rep, path, title: str = "") -> Path:
    """Support of a representation; a vertex label carries its dimension when > 1."""
    with plt.rc_context(_STYLE):
        sup = rep.support()
        fig, ax = plt.subplots(figsize=(1.2 + 0.9 * max(1, len({v.node for v in sup})), 0.35 * len({v.shift for v in sup}) + 1.5))
        points = {v: (v.node, v.shift) for v in sup}
        edges = [(a.source, a.target) for a in rep.arrows() if any(x for row in rep.matrix(a) for x in row)]
        labels = {v: f"{v.node},{v.shift}" + (f" [{rep.dims[v]}]" if rep.dims[v] > 1 else "") for v in sup}
        _layered(ax, points, edges, labels)
        ax.set_title(title)
        return _save(fig, path)


def plot_character_weights(cd: CartanData, poly: LaurentPoly, path, title: str = "") -> Path:
    """Multiplicities of the weights of a q-character.

    Rank two gets the weight diagram in the plane of fundamental weights;
    other ranks get a histogram of the heights.
    """
    wts: Counter = Counter()
    for c, exps in poly.terms():
        w = [0] * cd.rank
        for var, e in exps:
            if var.family == "Y":
                w[var.node - 1] += e
        wts[tuple(w)] += c
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4, 3.2))
        if cd.rank == 2:
            xs, ys, ss = zip(*[(w[0], w[1], m) for w, m in sorted(wts.items())]) if wts else ((), (), ())
            ax.scatter(xs, ys, s=[25 * m for m in ss], c="k")
            for x, y, m in zip(xs, ys, ss):
                if m > 1:
                    ax.annotate(str(m), (x, y), textcoords="offset points", xytext=(4, 4), fontsize=7)
            ax.set_xlabel("coefficient of w_1")
            ax.set_ylabel("coefficient of w_2")
            ax.set_aspect("equal", adjustable="datalim")
        else:
            heights = cd.fundamental_weight_heights()
            hist: Counter = Counter()
            for w, m in wts.items():
                hist[float(sum(h * a for h, a in zip(heights, w)))] += m
            keys = sorted(hist)
            ax.bar(keys, [hist[k] for k in keys], width=0.4, color="0.3")
            ax.set_xlabel("height of weight")
            ax.set_ylabel("multiplicity")
        ax.set_title(title or f"{cd.label}: {poly.coefficient_sum()} states")
        return _save(fig, path)


def plot_report_grid(rows: list[dict], row_key: str, col_key: str, path, title: str = "") -> Path:
    """Pass/fail grid, e.g. T-system equations by (node, level)."""
    cells: dict = {}
    for e in rows:
        key = (e[row_key], e[col_key])
        cells[key] = cells.get(key, True) and bool(e["ok"])
    rk = sorted({k[0] for k in cells})
    ck = sorted({k[1] for k in cells})
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(0.6 * len(ck) + 1.5, 0.5 * len(rk) + 1.2))
        grid = [[1.0 if cells.get((r, c)) else (0.0 if (r, c) in cells else 0.5) for c in ck] for r in rk]
        ax.imshow(grid, cmap="RdYlGn", vmin=0, vmax=1, aspect="auto")
        ax.set_xticks(range(len(ck)), [str(c) for c in ck])
        ax.set_yticks(range(len(rk)), [str(r) for r in rk])
        ax.set_xlabel(col_key)
        ax.set_ylabel(row_key)
        ax.set_title(title)
        return _save(fig, path)
