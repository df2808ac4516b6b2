"""Figures rendered next to report files: outcome counts and the achieved
distance distribution."""

from __future__ import annotations

import os
from collections import Counter

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .harness import ReportRow


def outcome_figure(rows: list[ReportRow], path: str) -> None:
    counts = Counter(r.outcome.split(":")[0] for r in rows)
    names = sorted(counts)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(names, [counts[n] for n in names], color="#4878a8")
    ax.set_ylabel("inputs")
    ax.set_title("outcomes")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def distance_figure(rows: list[ReportRow], path: str, alpha: float | None = None) -> None:
    values = [r.mu_value for r in rows if r.mu_value is not None]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    if values:
        lo, hi = min(values), max(values)
        if hi - lo < 1e-9:
            # Degenerate spread (all candidates on the ball boundary):
            # a padded range keeps the bin widths finite.
            pad = 0.05 * max(abs(hi), 1.0)
            ax.hist(values, bins=5, range=(lo - pad, hi + pad), color="#70a860")
        else:
            ax.hist(values, bins=min(20, max(5, len(values))), color="#70a860")
    if alpha is not None:
        ax.axvline(alpha, color="#a84848", linestyle="--", label=f"alpha = {alpha:g}")
        ax.legend()
    ax.set_xlabel("achieved distance")
    ax.set_ylabel("count")
    ax.set_title("distance to anchor")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_figures(
    rows: list[ReportRow], report_path: str, alpha: float | None = None
) -> list[str]:
    """Write the standard figures alongside a report file; returns paths."""
    stem, _ext = os.path.splitext(report_path)
    outcome_path = f"{stem}_outcomes.png"
    distance_path = f"{stem}_distance.png"
    outcome_figure(rows, outcome_path)
    distance_figure(rows, distance_path, alpha=alpha)
    return [outcome_path, distance_path]
