"""Figure rendering for the report path (headless matplotlib)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from parisphere.measures import FrsbClosedForm, ParisiMeasure

_PAIR_TITLES = {
    "same_beta1": "|R| within temperature 1",
    "same_beta2": "|R| within temperature 2",
    "cross": "|R| across temperatures",
}


def save_overlap_histograms(stats, path: str | Path) -> Path:
    """Three-panel |R| histograms with predicted atoms as dashed overlays."""
    path = Path(path)
    edges = np.asarray(stats.bin_edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    width = edges[1] - edges[0]
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4), sharey=True)
    for ax, key in zip(axes, ("same_beta1", "same_beta2", "cross")):
        counts = np.asarray(stats.histograms[key], float)
        total = counts.sum()
        density = counts / (total * width) if total > 0 else counts
        ax.bar(centers, density, width=width, color="steelblue", alpha=0.8)
        atoms = stats.predicted_atoms.get(key)
        if atoms:
            for a in atoms:
                ax.axvline(a, color="crimson", linestyle="--", linewidth=1.2)
        ax.set_title(_PAIR_TITLES[key], fontsize=10)
        ax.set_xlabel("|R|")
        ax.set_xlim(0, 1)
    axes[0].set_ylabel("density")
    fig.suptitle("overlap histograms (dashed: predicted atoms, qualitative overlay)", fontsize=11)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_measure_cdf(measure: ParisiMeasure, path: str | Path, grid: int = 512) -> Path:
    """Plot the c.d.f. of a Parisi measure."""
    path = Path(path)
    ts = np.linspace(0.0, 1.0, grid)
    vals = [measure.cdf_at(float(t)) for t in ts]
    fig, ax = plt.subplots(figsize=(5, 3.4))
    if isinstance(measure, FrsbClosedForm):
        ax.plot(ts, vals, color="steelblue")
        ax.axvline(measure.q, color="gray", linestyle=":", linewidth=1)
    else:
        ax.step(ts, vals, where="post", color="steelblue")
    ax.set_xlabel("s")
    ax.set_ylabel("alpha(s)")
    ax.set_ylim(-0.02, 1.05)
    ax.set_title("Parisi measure c.d.f.", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
