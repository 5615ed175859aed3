"""Figure rendering for the CLI report paths.

Figures are optional side artifacts next to the delimited output; CSV/JSON
stay the canonical data interface.  PNG metadata is pinned so identical
runs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_META = {"Software": "semimix"}


def _save(fig, path: str | Path) -> None:
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata=_PNG_META)
    plt.close(fig)


def save_profile_figure(times, values, path, eps: float | None = None,
                        ylabel: str = "aggregated TV distance") -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(times, np.maximum(values, 1e-300), marker="o", ms=3, lw=1.2)
    if eps is not None:
        ax.axhline(eps, color="crimson", ls="--", lw=1, label=f"eps = {eps:g}")
        ax.legend(frameon=False)
    ax.set_xlabel("time")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def save_pmf_figure(ns, probs, errs, path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar(ns, probs, yerr=3 * np.asarray(errs), width=0.85, capsize=2,
           color="steelblue", ecolor="dimgray")
    ax.set_xlabel("event count n")
    ax.set_ylabel("estimated probability")
    if title:
        ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    _save(fig, path)


def save_demo_figure(states, emp_at, emp_before, reference, path,
                     t_at: float, t_before: float) -> None:
    """Two panels: empirical state frequencies at and before the bound time,
    against the binomial reference."""
    fig, axes = plt.subplots(1, 2, figsize=(9.5, 4.0), sharey=True)
    for ax, emp, t, label in (
        (axes[0], emp_at, t_at, "at bound time"),
        (axes[1], emp_before, t_before, "before (1% of bound)"),
    ):
        ax.plot(states, emp, "b*", ms=9, label="empirical")
        ax.plot(states, reference, "r*", ms=9, label="binomial")
        ax.set_xlabel("state")
        ax.set_title(f"{label}, t = {t:.4g}")
        ax.grid(True, alpha=0.3)
    axes[0].set_ylabel("frequency")
    axes[0].legend(frameon=False)
    _save(fig, path)
