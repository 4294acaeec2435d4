"""Rendering of run artifacts as PNG panels.

The panels mirror the CSV value files written by the runner: spectral
curves overlaid with the matching chunks of the sorted matrix spectrum,
outlier ratios against the sweep parameter, zero-distribution profiles,
ergodic-average gaps, and the nondecreasing rearrangement.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "render_compare_panel",
    "render_outlier_table",
    "render_zero_dist",
    "render_weyl_gaps",
    "render_rearrangement",
]

_FIGSIZE = (7.0, 4.6)
_DPI = 120


def _save(fig, path):
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_compare_panel(curves, empirical_sorted, counts, title, path, kind="sv"):
    """Symbol curves (lines) against the sorted matrix spectrum (dots).

    The sorted spectrum is split into consecutive chunks, one per curve, and
    each chunk is drawn over the same index-fraction axis as its curve's
    sorted samples.
    """
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    empirical_sorted = np.asarray(empirical_sorted)
    offset = 0
    colors = plt.cm.viridis(np.linspace(0.0, 0.9, max(len(curves), 1)))
    for l, (_thetas, vals) in enumerate(curves):
        vals = np.sort(np.asarray(vals))
        g = vals.size
        xs = (np.arange(g) + 0.5) / g
        ax.plot(xs, vals, "-", color=colors[l], lw=1.4,
                label=f"branch {l + 1} (symbol)")
        chunk = empirical_sorted[offset:offset + g]
        if chunk.size:
            xc = (np.arange(chunk.size) + 0.5) / chunk.size
            ax.plot(xc, chunk, ".", color=colors[l], ms=3.0, alpha=0.65)
        offset += g
    ax.set_xlabel("index fraction within branch")
    ax.set_ylabel("eigenvalue" if kind == "eig" else "singular value")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    _save(fig, path)


def render_outlier_table(rows, title, path):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    etas = [float(r[0]) for r in rows]
    ratios = [float(r[3]) for r in rows]
    ax.plot(etas, ratios, "o-", lw=1.4)
    ax.set_xlabel("eta")
    ax.set_ylabel("fraction of deviations >= h")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    _save(fig, path)


def render_zero_dist(rows, title, path):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    variants: dict[str, list[tuple[float, float]]] = {}
    for variant, eta, _size, frac in rows:
        if frac != "":
            variants.setdefault(variant, []).append((float(eta), float(frac)))
    for variant, pairs in sorted(variants.items()):
        pairs.sort()
        ax.plot([p[0] for p in pairs], [p[1] for p in pairs], "o-", lw=1.4,
                label=f"full minus {variant}")
    ax.set_xlabel("eta")
    ax.set_ylabel("fraction of singular values >= eps")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    _save(fig, path)


def render_weyl_gaps(rows, title, path):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    fns: dict[str, list[tuple[float, float]]] = {}
    for eta, name, gap in rows:
        fns.setdefault(name, []).append((float(eta), float(gap)))
    for name, pairs in sorted(fns.items()):
        pairs.sort()
        ax.semilogy([p[0] for p in pairs], [p[1] for p in pairs], "o-", lw=1.4,
                    label=name)
    ax.set_xlabel("eta")
    ax.set_ylabel("|spectral average - symbol integral|")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    _save(fig, path)


def render_rearrangement(rearranged, title, path):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(rearranged.positions, rearranged.values, "-", lw=1.4)
    ax.set_xlabel("x")
    ax.set_ylabel("rearranged value")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    _save(fig, path)
