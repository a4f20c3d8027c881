#!/usr/bin/env python3
"""
Figures: static SVGs of the KS rate and the density overlay (matplotlib, Agg)
"""

from pathlib import Path
from typing import Union

import matplotlib
import numpy as np
from matplotlib.figure import Figure

# Figure objects, no pyplot: batch runs draw from worker threads
matplotlib.rcParams["svg.hashsalt"] = "stablecall"


def _save(fig: Figure, path: Union[str, Path]) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})


def figure_rate(result, path: Union[str, Path]) -> None:
    """log-log KS against n with the fitted line"""
    n = np.array([r.n for r in result.rows], dtype=float)
    ks = np.array([r.ks for r in result.rows], dtype=float)
    fig = Figure(figsize=(6, 4.5))
    ax = fig.add_subplot()
    ax.loglog(n, ks, "o-", linewidth=1.5, label=f"KS ({result.ks_mode})")
    if result.fitted_slope is not None:
        ax.loglog(n, np.exp(result.intercept) * n ** result.fitted_slope, "--",
                  label=f"fit: slope {result.fitted_slope:.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("KS distance")
    ax.grid(True, which="both", linestyle="--", alpha=0.5)
    ax.legend()
    _save(fig, path)


def figure_density_overlay(overlay, path: Union[str, Path]) -> None:
    """Empirical densities of S_n against the stable density"""
    frame = overlay.frame
    fig = Figure(figsize=(7, 4.5))
    ax = fig.add_subplot()
    for column in frame.columns:
        if column.startswith("f_n"):
            ax.plot(frame["y"], frame[column], linewidth=1.2, label=f"n = {column[3:]}")
    ax.plot(frame["y"], frame["f_stable"], "k-", linewidth=2, label="stable")
    ax.set_xlabel("y")
    ax.set_ylabel("density")
    ax.grid(True, linestyle="--", alpha=0.5)
    ax.legend()
    _save(fig, path)
