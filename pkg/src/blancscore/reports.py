"""Figure rendering for the CLI report path.

Renders analysis outputs to PNG files next to the delimited data they
come from. Library analysis code stays data-only; only the CLI calls in
here.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analysis import SplitRecord
from .corruption import SwapFractions

_FIGSIZE = (7.0, 4.2)
_DPI = 150


def _new_axes(title: str):
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_split_correlations(records: Sequence[SplitRecord], quality: str, path: str) -> str:
    """Sorted per-split correlation curves, one marker family per kind.

    Each series is sorted independently; splits whose coefficient is not
    significant are omitted from that series.
    """
    hh = sorted(r.human_human.coefficient for r in records if r.human_human_significant)
    bh = sorted(r.blanc_human.coefficient for r in records if r.blanc_human_significant)
    fig, ax = _new_axes(f"Annotator-split correlations ({quality})")
    ax.plot(range(len(hh)), hh, "o", mfc="none", ms=4, label="small group vs large group")
    ax.plot(range(len(bh)), bh, "+", ms=6, label="score vs large group")
    ax.set_xlabel("split (sorted independently per series)")
    ax.set_ylabel("Spearman correlation")
    ax.legend(loc="lower right", fontsize=8)
    return _save(fig, path)


def render_outperform(fraction: float, quality: str, path: str) -> str:
    fig, ax = _new_axes(f"Score outperforms small annotator group ({quality})")
    ax.bar([0], [fraction], width=0.4, color="tab:blue")
    ax.set_xticks([0])
    ax.set_xticklabels([quality])
    ax.set_ylim(0, 1)
    ax.set_ylabel("fraction of splits")
    ax.axhline(0.5, color="gray", lw=0.8, ls="--")
    return _save(fig, path)


def render_sweep(rows: Sequence[dict], path: str) -> str:
    """Mean score per gap (one line per mask width), correlation if present."""
    widths = sorted({r["mask_width"] for r in rows})
    have_corr = any(r.get("spearman_rho") is not None for r in rows)
    n_axes = 2 if have_corr else 1
    fig, axes = plt.subplots(1, n_axes, figsize=(5.2 * n_axes, 4.0), dpi=_DPI, squeeze=False)
    ax_mean = axes[0][0]
    for w in widths:
        sub = sorted((r for r in rows if r["mask_width"] == w), key=lambda r: r["gap"])
        ax_mean.plot([r["gap"] for r in sub], [r["mean_score"] for r in sub], "o-", label=f"width {w}")
    ax_mean.set_xlabel("gap (mask step)")
    ax_mean.set_ylabel("mean score")
    ax_mean.set_title("Mean score by masking gap")
    ax_mean.grid(True, alpha=0.3)
    ax_mean.legend(fontsize=8)
    if have_corr:
        ax_c = axes[0][1]
        for w in widths:
            sub = sorted(
                (r for r in rows if r["mask_width"] == w and r.get("spearman_rho") is not None),
                key=lambda r: r["gap"],
            )
            ax_c.plot([r["gap"] for r in sub], [r["spearman_rho"] for r in sub], "s-", label=f"width {w}")
        ax_c.set_xlabel("gap (mask step)")
        ax_c.set_ylabel("Spearman vs human")
        ax_c.set_title("Human correlation by gap")
        ax_c.grid(True, alpha=0.3)
        ax_c.legend(fontsize=8)
    return _save(fig, path)


def render_swap_fractions(fractions: Sequence[SwapFractions], path: str) -> str:
    labels = [f.label for f in fractions]
    x = range(len(labels))
    width = 0.27
    fig, ax = _new_axes("Score response to entity swaps")
    ax.bar([i - width for i in x], [f.frac_decreased for f in fractions], width, label="decreased")
    ax.bar(list(x), [f.frac_increased for f in fractions], width, label="increased")
    ax.bar([i + width for i in x], [f.frac_unchanged for f in fractions], width, label="unchanged")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_ylim(0, 1)
    ax.set_ylabel("fraction of trials")
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_score_histogram(scores: Sequence[float], path: str) -> str:
    fig, ax = _new_axes("Score distribution")
    ax.hist(scores, bins=min(30, max(5, len(scores) // 2)), color="tab:blue", alpha=0.8)
    ax.set_xlabel("score")
    ax.set_ylabel("pairs")
    return _save(fig, path)
