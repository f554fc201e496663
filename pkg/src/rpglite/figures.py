"""Report figures rendered to files.

Everything uses the Agg backend and strips the writer's software tag
so identical inputs give byte-identical PNG files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analytics import CostSeries, StatsReport
from .config import CHARACTERS

_SAVE = {"format": "png", "dpi": 120, "metadata": {"Software": None}}


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def retention_figure(report: StatsReport, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ks = np.arange(len(report.retention))
    ax.step(ks, report.retention, where="post", label="forfeits included")
    nf = report.retention_no_forfeit
    ax.step(np.arange(len(nf)), nf, where="post", label="forfeits excluded")
    ax.set_xlabel("games completed (k)")
    ax.set_ylabel("users with at least k games")
    ax.set_title("Retention")
    ax.legend()
    fig.tight_layout()
    return _finish(fig, path)


def acquisition_figure(report: StatsReport, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    if report.acquisition:
        days, counts = zip(*report.acquisition)
        ax.bar(days, counts, width=0.9)
    ax.set_xlabel("day")
    ax.set_ylabel("new users")
    ax.set_title("Acquisition")
    fig.tight_layout()
    return _finish(fig, path)


def character_rates_figure(report: StatsReport, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    names = [c.value for c in CHARACTERS]
    xs = np.arange(len(names))
    ax.bar(xs - 0.2, [report.pick_rates[n] for n in names], width=0.4, label="pick rate")
    ax.bar(
        xs + 0.2,
        [report.win_rates[n] if report.win_rates[n] is not None else 0.0 for n in names],
        width=0.4,
        label="win rate",
    )
    ax.set_xticks(xs)
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylim(0.0, 1.0)
    ax.set_title("Character pick and win rates")
    ax.legend()
    fig.tight_layout()
    return _finish(fig, path)


def learning_curve_figure(series: CostSeries, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = np.arange(len(series.game_means))
    ax.plot(xs, series.game_means, marker="o", linestyle="", alpha=0.6, label="per-game mean")
    ax.plot(xs, series.moving_average, label=f"{series.window}-game average")
    if series.slope is not None and len(xs) >= 2:
        fit = np.polyfit(xs, np.asarray(series.game_means), 1)
        ax.plot(xs, np.polyval(fit, xs), linestyle="--",
                label=f"slope {series.slope:.4g}")
    ax.set_xlabel("game")
    ax.set_ylabel("mean move cost")
    ax.set_title(f"Learning curve: {series.username}")
    ax.legend()
    fig.tight_layout()
    return _finish(fig, path)


def matrix_figure(matrix: np.ndarray, labels: list[str], path: str | Path,
                  title: str = "Pair vs pair win probability") -> Path:
    fig, ax = plt.subplots(figsize=(9, 8))
    image = ax.imshow(matrix, vmin=0.0, vmax=1.0, cmap="RdBu_r")
    ax.set_xticks(range(len(labels)))
    ax.set_yticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_yticklabels(labels, fontsize=6)
    ax.set_title(title)
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    return _finish(fig, path)


def usage_figure(usage: dict[str, float], path: str | Path,
                 title: str = "Character usage") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    names = [c.value for c in CHARACTERS]
    xs = np.arange(len(names))
    ax.bar(xs, [usage.get(n, 0.0) for n in names])
    ax.set_xticks(xs)
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylabel("frequency")
    ax.set_title(title)
    fig.tight_layout()
    return _finish(fig, path)
