"""Figures for score maps and the timing comparison (written to files, never shown)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def save_heatmap(path, background: np.ndarray, score_map: np.ndarray, best=None, worst=None, title: str = "") -> None:
    """Background beside its score map, with the chosen best/worst locations marked."""
    fig, axes = plt.subplots(1, 2, figsize=(7, 3.4))
    axes[0].imshow(background)
    axes[0].set_title("background")
    im = axes[1].imshow(score_map, vmin=0.0, vmax=1.0, cmap="viridis")
    axes[1].set_title(title or "score map")
    for pick, marker in ((best, "g+"), (worst, "rx")):
        if pick is not None:
            for ax in axes:
                ax.plot(pick[0], pick[1], marker, markersize=10, mew=2)
    for ax in axes:
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(im, ax=axes[1], fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def save_bench_figure(path, reports) -> None:
    """Log-scale bars of Time-a and FLOPs per score map."""
    names = [r.method for r in reports]
    fig, axes = plt.subplots(1, 2, figsize=(7, 3))
    axes[0].bar(names, [r.time_all_s for r in reports], color=["tab:orange", "tab:blue"][: len(names)])
    axes[0].set_yscale("log")
    axes[0].set_ylabel("seconds per score map")
    axes[1].bar(names, [r.flops_per_map / 1e9 for r in reports], color=["tab:orange", "tab:blue"][: len(names)])
    axes[1].set_yscale("log")
    axes[1].set_ylabel("GFLOPs per score map")
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
