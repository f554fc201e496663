"""Configuration balance: exhaustive matchup values plus usage spread.

Two separate scores, deliberately not composited: the matrix score
measures how far pair-vs-pair win probabilities drift from a coin
flip, and the usage score measures how evenly an optimal-play
metagame spreads across the eight characters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import CHARACTERS, Config
from .context import WorkContext
from .csg import N_PAIRS, PAIRS, _round9, run_csg
from .solver import DEFAULT_TOL, Matchup, pair_label, solve_minimax


_MATRIX_WORKER: dict = {}


def _matrix_worker_init(config_json: dict, tol: float) -> None:
    from .config import validate_config

    _MATRIX_WORKER["config"] = validate_config(config_json)
    _MATRIX_WORKER["tol"] = tol
    _MATRIX_WORKER["context"] = WorkContext()


def _matrix_worker_cell(cell: tuple[int, int]) -> tuple[float, float]:
    i, j = cell
    config = _MATRIX_WORKER["config"]
    tol = _MATRIX_WORKER["tol"]
    space = _MATRIX_WORKER["context"].space(Matchup.of(PAIRS[i], PAIRS[j]), config)
    v01 = solve_minimax(space, tol, side=0).coin_flip_value
    v10 = solve_minimax(space, tol, side=1).coin_flip_value if j > i else 1.0 - v01
    return v01, v10


def matchup_matrix(
    config: Config,
    tol: float = DEFAULT_TOL,
    context: WorkContext | None = None,
    jobs: int = 1,
) -> np.ndarray:
    """M[i, j] = coin-flip minimax win probability of pair i vs pair j.

    Each off-diagonal space is enumerated once and solved from both
    designated sides, filling M[i, j] and M[j, i] together.  ``jobs``
    spreads cells over processes; cell values do not depend on it.
    """
    cells = [(i, j) for i in range(N_PAIRS) for j in range(i, N_PAIRS)]
    if jobs <= 1:
        context = context or WorkContext()
        m = np.zeros((N_PAIRS, N_PAIRS), np.float64)
        for i, j in cells:
            space = context.space(Matchup.of(PAIRS[i], PAIRS[j]), config)
            m[i, j] = solve_minimax(space, tol, side=0).coin_flip_value
            if j > i:
                m[j, i] = solve_minimax(space, tol, side=1).coin_flip_value
        return m

    import multiprocessing
    from concurrent.futures import ProcessPoolExecutor

    ctx = multiprocessing.get_context("fork")
    m = np.zeros((N_PAIRS, N_PAIRS), np.float64)
    with ProcessPoolExecutor(
        max_workers=jobs,
        mp_context=ctx,
        initializer=_matrix_worker_init,
        initargs=(config.to_json_dict(), tol),
    ) as pool:
        for (i, j), (v01, v10) in zip(cells, pool.map(_matrix_worker_cell, cells, chunksize=4)):
            m[i, j] = v01
            if j > i:
                m[j, i] = v10
    return m


def matrix_score(m: np.ndarray) -> float:
    """1 - 2*RMS(row mean - 0.5); 1 when every pair is a coin flip."""
    row_means = m.mean(axis=1)
    rms = float(np.sqrt(np.mean((row_means - 0.5) ** 2)))
    return 1.0 - 2.0 * rms


def usage_score(frequencies: np.ndarray) -> float:
    """Normalized entropy of character frequencies; 1 when uniform."""
    f = np.asarray(frequencies, np.float64)
    nz = f[f > 0.0]
    entropy = float(-(nz * np.log(nz)).sum())
    return entropy / float(np.log(len(f)))


@dataclass
class BalanceReport:
    config_hash: str
    season_id: str
    matrix: np.ndarray
    usage: np.ndarray
    matrix_score: float
    usage_score: float
    csg_values: list[float]
    params: dict

    def to_json_dict(self) -> dict:
        labels = [pair_label(p) for p in PAIRS]
        return {
            "kind": "balance-report",
            "tool": {"name": "rpglite", "version": __version__},
            "config_hash": self.config_hash,
            "season_id": self.season_id,
            "params": dict(self.params),
            "scores": {
                "matrix": _round9(self.matrix_score),
                "usage": _round9(self.usage_score),
            },
            "usage_frequencies": {
                c.value: _round9(float(self.usage[ci]))
                for ci, c in enumerate(CHARACTERS)
            },
            "csg_values": [_round9(v) for v in self.csg_values],
            "pair_labels": labels,
            "matrix": [
                [_round9(float(self.matrix[i, j])) for j in range(N_PAIRS)]
                for i in range(N_PAIRS)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def balance_report(
    config: Config,
    tol: float = DEFAULT_TOL,
    csg_iterations: int = 6,
    stop_epsilon: float = 0.01,
    window: int | None = None,
    context: WorkContext | None = None,
    jobs: int = 1,
) -> BalanceReport:
    """Solve all matchups and measure usage under metagame iteration."""
    context = context or WorkContext()
    m = matchup_matrix(config, tol, context, jobs=jobs)
    trace = run_csg(
        config,
        iterations=csg_iterations,
        stop_epsilon=stop_epsilon,
        window=window,
        tol=tol,
        context=context,
        jobs=jobs,
    )
    usage = trace.usage_frequencies()
    return BalanceReport(
        config_hash=config.config_hash(),
        season_id=config.season_id,
        matrix=m,
        usage=usage,
        matrix_score=matrix_score(m),
        usage_score=usage_score(usage),
        csg_values=[it.value for it in trace.iterations],
        params={
            "tol": tol,
            "csg_iterations": csg_iterations,
            "stop_epsilon": stop_epsilon,
            "window": window,
        },
    )


def comparison_verdict(matrix_delta: float, usage_delta: float) -> str | None:
    """"a" or "b" when both score deltas agree in direction, else None.

    Deltas are b - a, so positive deltas favor b.
    """
    if matrix_delta > 0.0 and usage_delta > 0.0:
        return "b"
    if matrix_delta < 0.0 and usage_delta < 0.0:
        return "a"
    return None


@dataclass
class ConfigComparison:
    report_a: BalanceReport
    report_b: BalanceReport
    matrix_delta: float
    usage_delta: float
    more_balanced: str | None

    def to_json_dict(self) -> dict:
        return {
            "kind": "balance-comparison",
            "tool": {"name": "rpglite", "version": __version__},
            "a": self.report_a.to_json_dict(),
            "b": self.report_b.to_json_dict(),
            "deltas": {
                "matrix": _round9(self.matrix_delta),
                "usage": _round9(self.usage_delta),
            },
            "more_balanced": self.more_balanced,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def compare_configs(
    config_a: Config,
    config_b: Config,
    tol: float = DEFAULT_TOL,
    csg_iterations: int = 6,
    stop_epsilon: float = 0.01,
    window: int | None = None,
    context: WorkContext | None = None,
    jobs: int = 1,
) -> ConfigComparison:
    """Emit both balance reports plus per-score deltas (b - a)."""
    context = context or WorkContext()
    kwargs = dict(
        tol=tol,
        csg_iterations=csg_iterations,
        stop_epsilon=stop_epsilon,
        window=window,
        context=context,
        jobs=jobs,
    )
    report_a = balance_report(config_a, **kwargs)
    report_b = balance_report(config_b, **kwargs)
    matrix_delta = report_b.matrix_score - report_a.matrix_score
    usage_delta = report_b.usage_score - report_a.usage_score
    return ConfigComparison(
        report_a=report_a,
        report_b=report_b,
        matrix_delta=matrix_delta,
        usage_delta=usage_delta,
        more_balanced=comparison_verdict(matrix_delta, usage_delta),
    )
