"""
SVG figures: sampled Score-life curves (with optional polynomial overlay),
state trajectories and cumulative reward curves.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)


def total_variation(values):
    """Sum of |S_{k+1} - S_k| over a curve sorted by l."""
    values = np.asarray(values, dtype=float)
    return float(np.sum(np.abs(np.diff(values)))) if values.size > 1 else 0.0


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info(f"Figure écrite: {path}")
    return path


def plot_score_curves(curves, path, overlays=None, title=None):
    """
    One panel per curve.

    Args:
        curves: dict label -> DataFrame with columns l, S
        path: output .svg
        overlays: optional dict label -> representation drawn over the samples
    """
    overlays = overlays or {}
    fig, axes = plt.subplots(1, len(curves), figsize=(4 * len(curves), 3.2), squeeze=False)
    for ax, (label, frame) in zip(axes[0], curves.items()):
        ax.plot(frame["l"], frame["S"], linewidth=0.6, label="S(l, x)")
        if label in overlays:
            grid = np.linspace(0.0, 1.0, 512, endpoint=False)
            ax.plot(grid, overlays[label].score(grid), linewidth=1.5, label="polynôme")
            ax.legend(fontsize=7)
        ax.set_title(label, fontsize=9)
        ax.set_xlabel("l")
    axes[0][0].set_ylabel("S")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_trajectories(frames, path, state_labels=("x", "xdot", "theta", "thetadot")):
    """State components against time, one panel per component, one line per run."""
    fig, axes = plt.subplots(len(state_labels), 1, figsize=(6, 1.8 * len(state_labels)), sharex=True)
    axes = np.atleast_1d(axes)
    for label, frame in frames.items():
        for ax, column in zip(axes, state_labels):
            ax.plot(frame["t"], frame[column], linewidth=1.0, label=label)
            ax.set_ylabel(column)
    axes[-1].set_xlabel("t")
    axes[0].legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_cumulative_reward(frame, path):
    """Cumulative reward against t for every (method, seed) in a comparison table."""
    methods = list(dict.fromkeys(frame["method"]))
    fig, axes = plt.subplots(1, len(methods), figsize=(5 * len(methods), 3.2), squeeze=False)
    for ax, method in zip(axes[0], methods):
        subset = frame[frame["method"] == method]
        for seed, episode in subset.groupby("seed"):
            ax.plot(episode["t"], episode["cum_reward"], linewidth=1.0, label=f"seed {seed}")
        ax.set_title(method)
        ax.set_xlabel("t")
    axes[0][0].set_ylabel("récompense cumulée")
    fig.tight_layout()
    return _save(fig, path)
