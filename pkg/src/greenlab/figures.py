"""Matplotlib renderings emitted alongside delimited reports.

All figures are written straight to files with the Agg backend; nothing is
shown interactively.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def ratio_figure(rows, pass_constant: float, path: str, title: str) -> None:
    """Scatter of verification ratios vs n, one marker style per generator."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    generators = sorted({r["generator"] for r in rows})
    for gen in generators:
        ns = [r["n"] for r in rows if r["generator"] == gen]
        ratios = [r["ratio"] for r in rows if r["generator"] == gen]
        ax.scatter(ns, ratios, label=gen, alpha=0.8)
    ax.axhline(pass_constant, color="k", linestyle="--", linewidth=1.0,
               label=f"C = {pass_constant:g}")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("lhs / rhs")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def scaling_figure(xs, ys, slope: float, intercept: float, path: str,
                   xlabel: str, ylabel: str, title: str) -> None:
    """Log-log scatter with the fitted power law overlaid."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(xs, ys, "o", label="data")
    grid = np.geomspace(xs.min(), xs.max(), 64)
    ax.loglog(grid, np.exp(intercept) * grid ** slope, "-",
              label=f"fit slope {slope:.3f}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def history_figure(energy_history, path: str, title: str = "descent history") -> None:
    """Energy along the descent, shifted to show decrease on a log scale."""
    hist = np.asarray(energy_history, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    final = hist[-1]
    excess = hist - final
    positive = excess[excess > 0]
    if positive.size >= 2:
        ax.semilogy(np.nonzero(excess > 0)[0], positive, "-")
        ax.set_ylabel("energy - final energy")
    else:
        ax.plot(hist, "-")
        ax.set_ylabel("energy")
    ax.set_xlabel("accepted step")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
