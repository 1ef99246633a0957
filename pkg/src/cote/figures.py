"""Summary figures rendered next to evaluation reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_MAX_PAGES_SHOWN = 40
_SERIES = (
    ("coverage", "#2ecc71"),
    ("overlap", "#f1c40f"),
    ("trespass", "#e74c3c"),
    ("excess", "#3498db"),
)


def render_corpus_figures(result, path: str | Path) -> Path:
    """Write a per-page metric breakdown and an IoU-vs-COTe scatter.

    Only the first 40 pages are drawn in the bar panel to keep labels
    readable; the aggregate always appears as the final group.
    """
    pages = result.pages[:_MAX_PAGES_SHOWN]
    labels = [p.image_id for p in pages] + ["macro mean"]
    values = {
        name: [getattr(p.cote, name) for p in pages] + [result.aggregate[name]]
        for name, _ in _SERIES
    }
    cotes = [p.cote.cote for p in pages] + [result.aggregate["cote"]]

    have_iou = all(p.mean_iou is not None for p in result.pages)
    fig, axes = plt.subplots(
        1, 2 if have_iou else 1, figsize=(12 if have_iou else 8, 4.5), squeeze=False
    )
    ax = axes[0][0]
    x = np.arange(len(labels))
    width = 0.2
    for i, (name, color) in enumerate(_SERIES):
        ax.bar(x + (i - 1.5) * width, values[name], width, label=name, color=color)
    ax.plot(x, cotes, "k--o", markersize=4, label="cote")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("score")
    ax.set_title("Per-page metric decomposition")
    ax.legend(fontsize=8)
    ax.grid(axis="y", alpha=0.3)

    if have_iou:
        ax2 = axes[0][1]
        ax2.scatter(
            [p.mean_iou for p in result.pages],
            [p.cote.cote for p in result.pages],
            c="#34495e",
            s=18,
        )
        ax2.set_xlabel("mean IoU")
        ax2.set_ylabel("COTe")
        rho = result.spearman_iou_cote
        ax2.set_title(
            "IoU vs COTe per page"
            + (f" (spearman {rho:.2f})" if rho is not None else " (spearman n/a)")
        )
        ax2.grid(alpha=0.3)

    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
