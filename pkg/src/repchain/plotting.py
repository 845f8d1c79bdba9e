"""Figure rendering for CLI reports.

Every delimited report the CLI writes can be accompanied by a rendered
figure next to it: distribution dumps get PMF/CDF/Werner panels, search
summaries get an objective trace with the running best.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from repchain.timedist import TimeDistribution

__all__ = ["plot_distribution", "plot_search_history", "figure_path_for"]


def figure_path_for(report_path) -> str:
    return f"{report_path}.png"


def plot_distribution(dist: TimeDistribution, path, title: str | None = None) -> None:
    """Render PMF, CDF, and conditional Werner parameter over time."""
    t = np.arange(dist.t_trunc + 1)
    cdf = np.cumsum(dist.p)
    with np.errstate(invalid="ignore", divide="ignore"):
        werner = np.where(dist.p > 1e-14, dist.v / np.where(dist.p > 0, dist.p, 1.0), np.nan)

    fig, axs = plt.subplots(1, 3, figsize=(13, 3.6))
    axs[0].plot(t[1:], dist.p[1:])
    axs[0].set_title("PMF")
    axs[0].set_ylabel("Probability")
    axs[1].plot(t[1:], cdf[1:])
    axs[1].set_title("CDF")
    axs[1].set_ylim(0, 1.02)
    axs[2].plot(t[1:], werner[1:])
    axs[2].set_title("Werner parameter")
    axs[2].set_ylim(0, 1.02)
    for ax in axs:
        ax.set_xlabel("Waiting time (units)")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_search_history(history, path, title: str | None = None) -> None:
    """Render per-trial objective values and the running best."""
    idx = [r.trial_index for r in history]
    obj = [r.objective for r in history]
    best = np.maximum.accumulate(obj)

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(idx, obj, ".", alpha=0.6, label="trial")
    ax.plot(idx, best, "-", label="best so far")
    ax.set_xlabel("Trial")
    ax.set_ylabel("Secret-key rate (per unit)")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
