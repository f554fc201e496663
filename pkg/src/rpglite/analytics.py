"""Move-cost and population analytics over game datasets.

The cost of a move is the regret of one decision: the best achievable
win probability at the state minus the value of the move actually
played, both measured against the mover's own minimax value function.
That makes costs opponent-independent, so a player's learning rate can
be read off their own games alone.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .artifacts import ArtifactStore
from .config import CHARACTERS, Config
from .dataset import Dataset
from .errors import ReplayMismatchError
from .simulate import GameRecord, replay_game
from .solver import q_values
from .state import encode_move

DAY = 86400.0


@dataclass(frozen=True)
class MoveCost:
    game_id: str
    move_index: int
    side: int
    username: str
    move: dict
    value_before: float  # best achievable win probability at the state
    q_chosen: float
    cost: float


@dataclass
class CostSeries:
    """Per-player cost trajectory: one mean per game, in order."""

    username: str
    game_ids: list[str]
    game_means: list[float]
    moving_average: list[float]
    slope: float | None
    window: int
    move_costs: list[MoveCost] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "username": self.username,
            "window": self.window,
            "game_ids": self.game_ids,
            "game_means": self.game_means,
            "moving_average": self.moving_average,
            "slope": self.slope,
        }


def move_costs(record: GameRecord, config: Config, store: ArtifactStore) -> list[MoveCost]:
    """Cost of every move in a game, both sides.

    Replays the record first (raising ReplayMismatchError if the log
    disagrees with the rules) and scores each decision against the
    mover's optimal value function; Forfeit is worth 0 to the mover by
    definition.
    """
    states = replay_game(record, config)
    space = store.space(config, record.matchup)
    solutions: dict[int, object] = {}
    out: list[MoveCost] = []
    for entry, state in zip(record.moves, states):
        side = entry.side
        if side != state.active_side:
            # an out-of-turn concession is a resignation, not a decision
            # at one of the mover's states, so it has no meaningful cost
            continue
        if side not in solutions:
            solutions[side] = store.solution(config, record.matchup, side)
        values = solutions[side].values
        idx = space.index_of(state)
        qs = q_values(space, values, idx, include_forfeit=True)
        if entry.move not in qs:
            raise ReplayMismatchError(
                f"game {record.game_id}: move {entry.index} not in the legal set"
            )
        best = max(qs.values())
        q = qs[entry.move]
        out.append(
            MoveCost(
                game_id=record.game_id,
                move_index=entry.index,
                side=side,
                username=record.usernames[side],
                move=encode_move(entry.move),
                value_before=best,
                q_chosen=q,
                cost=best - q,
            )
        )
    return out


def game_mean_cost(costs: list[MoveCost], username: str) -> float | None:
    own = [c.cost for c in costs if c.username == username]
    if not own:
        return None
    return float(np.mean(own))


def learning_curve(
    records: list[GameRecord],
    username: str,
    config: Config,
    store: ArtifactStore,
    window: int = 5,
) -> CostSeries:
    """Per-game mean cost for one player's games in the given
    (chronological) order, with a trailing moving average and a
    least-squares slope over the game index.

    Games in which the player made no move are skipped; a series of
    fewer than two games has no slope (reported as None).
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    game_ids: list[str] = []
    means: list[float] = []
    all_costs: list[MoveCost] = []
    for rec in records:
        if username not in rec.usernames:
            continue
        costs = move_costs(rec, config, store)
        all_costs.extend(c for c in costs if c.username == username)
        mean = game_mean_cost(costs, username)
        if mean is None:
            continue
        game_ids.append(rec.game_id)
        means.append(mean)

    moving = []
    for i in range(len(means)):
        lo = max(0, i - window + 1)
        moving.append(float(np.mean(means[lo : i + 1])))

    slope: float | None = None
    if len(means) >= 2:
        xs = np.arange(len(means), dtype=np.float64)
        slope = float(np.polyfit(xs, np.asarray(means), 1)[0])

    return CostSeries(
        username=username,
        game_ids=game_ids,
        game_means=means,
        moving_average=moving,
        slope=slope,
        window=window,
        move_costs=all_costs,
    )


@dataclass
class StatsReport:
    """Population statistics over a dataset bundle."""

    n_players: int
    n_games: int
    n_completed: int  # decided games, forfeits included
    n_completed_no_forfeit: int
    n_capped: int
    acquisition: list[tuple[int, int]]  # (day index, new users)
    retention: list[int]  # r(k), forfeits included, k = 0..max
    retention_no_forfeit: list[int]
    games_per_user: dict[str, int]
    pick_rates: dict[str, float]  # per character, picks / completed game sides
    win_rates: dict[str, float | None]  # per character, side wins / picks
    pick_counts: dict[str, int]
    win_counts: dict[str, int]

    def to_json_dict(self) -> dict:
        return {
            "kind": "dataset-stats",
            "players": self.n_players,
            "games": self.n_games,
            "completed_games": self.n_completed,
            "completed_games_excluding_forfeits": self.n_completed_no_forfeit,
            "capped_games": self.n_capped,
            "acquisition": [{"day": d, "new_users": c} for d, c in self.acquisition],
            "retention": self.retention,
            "retention_excluding_forfeits": self.retention_no_forfeit,
            "games_per_user": self.games_per_user,
            "characters": {
                c.value: {
                    "picks": self.pick_counts[c.value],
                    "wins": self.win_counts[c.value],
                    "pick_rate": self.pick_rates[c.value],
                    "win_rate": self.win_rates[c.value],
                }
                for c in CHARACTERS
            },
        }


def _retention(counts: dict[str, int], n_players: int) -> list[int]:
    top = max(counts.values(), default=0)
    curve = []
    for k in range(top + 1):
        curve.append(sum(1 for v in counts.values() if v >= k) if k else n_players)
    return curve


def dataset_stats(dataset: Dataset) -> StatsReport:
    """Acquisition, retention (inclusive and exclusive of forfeits),
    games per user, and per-character pick and win rates over the
    completed games."""
    players = dataset.players
    games = dataset.games

    t0 = min((p.created_at for p in players), default=0.0)
    day_counts: dict[int, int] = {}
    for p in players:
        day = int((p.created_at - t0) // DAY)
        day_counts[day] = day_counts.get(day, 0) + 1
    acquisition = sorted(day_counts.items())

    completed: dict[str, int] = {p.username: 0 for p in players}
    completed_nf: dict[str, int] = {p.username: 0 for p in players}
    games_per_user: dict[str, int] = {p.username: 0 for p in players}
    pick_counts = {c.value: 0 for c in CHARACTERS}
    win_counts = {c.value: 0 for c in CHARACTERS}
    n_completed = n_completed_nf = n_capped = 0

    for rec in games:
        for name in rec.usernames:
            if name in games_per_user:
                games_per_user[name] += 1
        if not rec.decided:
            n_capped += 1
            continue
        n_completed += 1
        if rec.end_reason == "win":
            n_completed_nf += 1
        for name in rec.usernames:
            if name in completed:
                completed[name] += 1
                if rec.end_reason == "win":
                    completed_nf[name] += 1
        for side in (0, 1):
            for c in rec.pairs[side]:
                pick_counts[c.value] += 1
                if rec.winner == side:
                    win_counts[c.value] += 1

    sides = 2 * n_completed
    pick_rates = {
        name: (count / sides if sides else 0.0) for name, count in pick_counts.items()
    }
    win_rates: dict[str, float | None] = {
        name: (win_counts[name] / count if count else None)
        for name, count in pick_counts.items()
    }
    return StatsReport(
        n_players=len(players),
        n_games=len(games),
        n_completed=n_completed,
        n_completed_no_forfeit=n_completed_nf,
        n_capped=n_capped,
        acquisition=acquisition,
        retention=_retention(completed, len(players)),
        retention_no_forfeit=_retention(completed_nf, len(players)),
        games_per_user=games_per_user,
        pick_rates=pick_rates,
        win_rates=win_rates,
        pick_counts=pick_counts,
        win_counts=win_counts,
    )


def stats_tables(report: StatsReport) -> dict[str, list[list]]:
    """The report as named CSV-ready tables."""
    retention = [["k", "users_at_least_k", "users_at_least_k_no_forfeits"]]
    nf = report.retention_no_forfeit
    for k, count in enumerate(report.retention):
        retention.append([k, count, nf[k] if k < len(nf) else 0])
    acquisition = [["day", "new_users"]] + [[d, c] for d, c in report.acquisition]
    characters = [["character", "picks", "wins", "pick_rate", "win_rate"]]
    for c in CHARACTERS:
        name = c.value
        characters.append([
            name,
            report.pick_counts[name],
            report.win_counts[name],
            f"{report.pick_rates[name]:.9g}",
            "" if report.win_rates[name] is None else f"{report.win_rates[name]:.9g}",
        ])
    per_user = [["username", "games"]] + [
        [name, count] for name, count in sorted(report.games_per_user.items())
    ]
    return {
        "retention": retention,
        "acquisition": acquisition,
        "characters": characters,
        "games_per_user": per_user,
    }


def tables_to_csv(tables: dict[str, list[list]]) -> dict[str, str]:
    out = {}
    for name, rows in tables.items():
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerows(rows)
        out[name] = buf.getvalue()
    return out
