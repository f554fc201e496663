"""Synthetic dataset generation and NDJSON bundle input/output.

A dataset is three newline-delimited JSON files (players, games,
interactions) plus a manifest echoing the tool version and every
parameter.  All timestamps are synthetic, drawn from seeded streams,
so acquisition and retention reports have shape without pretending
realism.  Generation is a pure function of (population, config, seed):
re-running writes byte-identical files, regardless of the job count.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from math import log
from pathlib import Path

from . import __version__
from .bots import BotSpec
from .config import CHARACTERS, Config, CharacterId
from .errors import SchemaViolationError
from .medals import DEFAULT_MEDALS, MedalBook, earned_medals
from .rating import DEFAULT_SKILL, elo_update
from .rng import Rng
from .simulate import (
    DEFAULT_MOVE_CAP,
    RUN_SCHEMA,
    GameRecord,
    GameTask,
    run_game_tasks,
)

PLAYER_SCHEMA = "rpglite.player/1"
INTERACTION_SCHEMA = "rpglite.interaction/1"

PLAYERS_FILE = "players.ndjson"
GAMES_FILE = "games.ndjson"
INTERACTIONS_FILE = "interactions.ndjson"
MANIFEST_FILE = "manifest.json"

DAY = 86400.0


@dataclass
class PlayerRecord:
    """One player's lifetime tallies, as stored in the players file."""

    username: str
    created_at: float
    skill: float = DEFAULT_SKILL
    played: dict[CharacterId, int] = field(default_factory=dict)
    won: dict[CharacterId, int] = field(default_factory=dict)
    medals: list[str] = field(default_factory=list)
    losses_to: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "schema": PLAYER_SCHEMA,
            "username": self.username,
            "created_at": self.created_at,
            "skill": self.skill,
            "characters": {
                c.value: {"played": self.played.get(c, 0), "won": self.won.get(c, 0)}
                for c in CHARACTERS
            },
            "medals": list(self.medals),
            "losses_to": list(self.losses_to),
        }

    @staticmethod
    def from_json_dict(raw: dict) -> "PlayerRecord":
        chars = raw["characters"]
        return PlayerRecord(
            username=str(raw["username"]),
            created_at=float(raw["created_at"]),
            skill=float(raw["skill"]),
            played={c: int(chars[c.value]["played"]) for c in CHARACTERS},
            won={c: int(chars[c.value]["won"]) for c in CHARACTERS},
            medals=[str(m) for m in raw["medals"]],
            losses_to=[str(u) for u in raw["losses_to"]],
        )


@dataclass(frozen=True)
class PopulationMember:
    """A bot identity in the synthetic population.

    ``games`` is the number of games this member initiates.  When
    ``final_epsilon`` is set (epsilon-greedy members only) the member's
    exploration rate anneals linearly from spec.epsilon to it over the
    member's appearances, modeling a player who learns.
    """

    username: str
    spec: BotSpec
    games: int
    final_epsilon: float | None = None

    def to_json_dict(self) -> dict:
        out = {"username": self.username, "spec": self.spec.to_json_dict(), "games": self.games}
        if self.final_epsilon is not None:
            out["final_epsilon"] = self.final_epsilon
        return out


@dataclass
class Dataset:
    players: list[PlayerRecord]
    games: list[GameRecord]
    interactions: list[dict]
    manifest: dict


def _digest(params: dict) -> str:
    blob = json.dumps(params, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(blob).hexdigest()[:12]


def _event(at: float, username: str | None, endpoint: str, params: dict, result: int, outcome: str) -> dict:
    return {
        "schema": INTERACTION_SCHEMA,
        "at": at,
        "seq": 0,  # assigned after the global time sort
        "username": username,
        "endpoint": endpoint,
        "params_digest": _digest(params),
        "result": result,
        "outcome": outcome,
    }


def _plan(
    population: list[PopulationMember], seed: int, start_epoch: float
) -> tuple[list[float], list[GameTask]]:
    """Deterministic schedule: join times, pairings, per-game seeds and
    per-participant exploration rates."""
    master = Rng(seed)
    n = len(population)

    join_rng = master.derive("join")
    joins: list[float] = []
    t = start_epoch
    for _ in range(n):
        t += -0.4 * DAY * log(1.0 - join_rng.u01())
        joins.append(round(t, 3))

    raw: list[tuple[float, int, int]] = []  # (time, initiator, opponent)
    for i, member in enumerate(population):
        cal = master.derive_indexed("cal", i)
        foe = master.derive_indexed("foe", i)
        when = joins[i]
        for _ in range(member.games):
            when += 3600.0 + -6.0 * 3600.0 * log(1.0 - cal.u01())
            j = foe.randint(n - 1)
            if j >= i:
                j += 1
            raw.append((round(when, 3), i, j))
    raw.sort(key=lambda r: (r[0], r[1]))

    # Exploration anneal: a member's rate at a game depends on how many
    # games they have already appeared in, over the whole plan.
    appearances = [0] * n
    seed_rng = master.derive("games")
    tasks: list[GameTask] = []
    for k, (when, i, j) in enumerate(raw):
        specs = []
        for m in (i, j):
            member = population[m]
            spec = member.spec
            if member.final_epsilon is not None and spec.kind == "epsilon_greedy":
                horizon = max(1, member.games - 1)
                frac = min(1.0, appearances[m] / horizon)
                spec = spec.with_epsilon(
                    spec.epsilon + (member.final_epsilon - spec.epsilon) * frac
                )
            specs.append(spec)
            appearances[m] += 1
        tasks.append(
            GameTask(
                index=k,
                game_id=f"g{k + 1:06d}",
                seed=seed_rng.next_u64(),
                usernames=(population[i].username, population[j].username),
                specs=(specs[0], specs[1]),
                started_at=when,
            )
        )
    return joins, tasks


def generate_dataset(
    population: list[PopulationMember],
    config: Config,
    seed: int,
    *,
    season_id: str = "season-1",
    move_cap: int = DEFAULT_MOVE_CAP,
    start_epoch: float = 1_700_000_000.0,
    medal_book: MedalBook = DEFAULT_MEDALS,
    jobs: int = 1,
) -> Dataset:
    """Simulate a whole population and assemble the three collections.

    Each member initiates its requested number of games against
    seeded-random opponents from the rest of the population.  Decided
    games update skill (Elo), per-character tallies, medals and
    losses_to; capped games are recorded but excluded from win
    bookkeeping.  Identical inputs give identical output, independent
    of ``jobs``.
    """
    if not population:
        raise ValueError("population must not be empty")
    names = [m.username for m in population]
    if len(set(names)) != len(names):
        raise ValueError("population usernames must be unique")
    if len(population) < 2 and any(m.games > 0 for m in population):
        raise ValueError("need at least two members to schedule games")
    for member in population:
        member.spec.validate()
        if member.games < 0:
            raise ValueError("game counts must be non-negative")

    joins, tasks = _plan(population, seed, start_epoch)
    records = run_game_tasks(tasks, config, season_id, move_cap, jobs)

    players = {
        m.username: PlayerRecord(username=m.username, created_at=joins[i])
        for i, m in enumerate(population)
    }
    wins_by: dict[str, set[CharacterId]] = {m.username: set() for m in population}
    flawless: dict[str, int] = {m.username: 0 for m in population}
    decided_counts: dict[str, tuple[int, int]] = {m.username: (0, 0) for m in population}

    for rec in records:
        if not rec.decided:
            continue
        for side in (0, 1):
            user = players[rec.usernames[side]]
            for c in rec.pairs[side]:
                user.played[c] = user.played.get(c, 0) + 1
                if rec.winner == side:
                    user.won[c] = user.won.get(c, 0) + 1
                    wins_by[user.username].add(c)
        w_name = rec.usernames[rec.winner]
        l_name = rec.usernames[1 - rec.winner]
        played_w, won_w = decided_counts[w_name]
        decided_counts[w_name] = (played_w + 1, won_w + 1)
        played_l, won_l = decided_counts[l_name]
        decided_counts[l_name] = (played_l + 1, won_l)
        new_w, new_l = elo_update(players[w_name].skill, players[l_name].skill)
        players[w_name].skill = round(new_w, 6)
        players[l_name].skill = round(new_l, 6)
        if w_name not in players[l_name].losses_to:
            players[l_name].losses_to.append(w_name)
        final = rec.moves[-1].state_after
        if all(c.hp == config.health(c.id) for c in final.sides[rec.winner]):
            flawless[w_name] += 1

    for name, player in players.items():
        games_played, games_won = decided_counts[name]
        player.medals = earned_medals(
            games_played, games_won, wins_by[name], flawless[name], medal_book
        )

    events: list[dict] = []
    for i, member in enumerate(population):
        events.append(
            _event(joins[i], member.username, "/v1/register",
                   {"username": member.username}, 201, "registered")
        )
    for rec in records:
        for side in (0, 1):
            events.append(
                _event(rec.created_at, rec.usernames[side], "/v1/queue",
                       {"game_id": rec.game_id}, 200, "matched")
            )
            events.append(
                _event(rec.created_at, rec.usernames[side],
                       f"/v1/games/{rec.game_id}/pair",
                       {"pair": [c.value for c in rec.pairs[side]]}, 200, "chosen")
            )
        for entry in rec.moves:
            last = entry.index == len(rec.moves) - 1
            outcome = rec.end_reason if (last and rec.decided) else "move"
            events.append(
                _event(entry.at, rec.usernames[entry.side],
                       f"/v1/games/{rec.game_id}/moves",
                       {"sequence": entry.index}, 200, outcome)
            )
    events.sort(key=lambda e: e["at"])
    for k, event in enumerate(events):
        event["seq"] = k + 1

    manifest = {
        "kind": "dataset-manifest",
        "tool": "rpglite",
        "version": __version__,
        "seed": seed,
        "season_id": season_id,
        "config_hash": config.config_hash(),
        "move_cap": move_cap,
        "start_epoch": start_epoch,
        "population": [m.to_json_dict() for m in population],
        "counts": {
            "players": len(players),
            "games": len(records),
            "interactions": len(events),
        },
    }
    return Dataset(
        players=[players[m.username] for m in population],
        games=records,
        interactions=events,
        manifest=manifest,
    )


def _ndjson(rows) -> str:
    return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in rows)


def write_dataset(dataset: Dataset, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "players": out / PLAYERS_FILE,
        "games": out / GAMES_FILE,
        "interactions": out / INTERACTIONS_FILE,
        "manifest": out / MANIFEST_FILE,
    }
    paths["players"].write_text(_ndjson(p.to_json_dict() for p in dataset.players))
    paths["games"].write_text(_ndjson(g.to_json_dict() for g in dataset.games))
    paths["interactions"].write_text(_ndjson(dataset.interactions))
    paths["manifest"].write_text(json.dumps(dataset.manifest, indent=2) + "\n")
    return paths


def _rows(path: Path, source: str) -> list[tuple[int, dict]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolationError(source, n, f"bad JSON: {exc}") from exc
            if not isinstance(row, dict):
                raise SchemaViolationError(source, n, "row is not an object")
            rows.append((n, row))
    return rows


def _check(cond: bool, source: str, line: int, message: str) -> None:
    if not cond:
        raise SchemaViolationError(source, line, message)


def _validate_player(raw: dict, source: str, line: int) -> PlayerRecord:
    _check(raw.get("schema") == PLAYER_SCHEMA, source, line, "wrong or missing schema tag")
    for key in ("username", "created_at", "skill", "characters", "medals", "losses_to"):
        _check(key in raw, source, line, f"missing field {key!r}")
    _check(isinstance(raw["username"], str) and raw["username"], source, line, "bad username")
    _check(isinstance(raw["skill"], (int, float)) and raw["skill"] >= 0, source, line, "bad skill")
    chars = raw["characters"]
    _check(isinstance(chars, dict), source, line, "characters must be an object")
    for c in CHARACTERS:
        entry = chars.get(c.value)
        _check(isinstance(entry, dict), source, line, f"missing character entry {c.value!r}")
        played, won = entry.get("played"), entry.get("won")
        _check(isinstance(played, int) and played >= 0, source, line, f"bad played for {c.value}")
        _check(isinstance(won, int) and 0 <= won <= played, source, line,
               f"won exceeds played for {c.value}")
    _check(isinstance(raw["medals"], list), source, line, "medals must be a list")
    _check(isinstance(raw["losses_to"], list), source, line, "losses_to must be a list")
    try:
        return PlayerRecord.from_json_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolationError(source, line, f"malformed player row: {exc}") from exc


def _validate_game(raw: dict, source: str, line: int) -> GameRecord:
    _check(raw.get("schema") == "rpglite.game/1", source, line, "wrong or missing schema tag")
    for key in ("game_id", "usernames", "season_id", "pairs", "first_mover",
                "moves", "winner", "end_reason", "created_at", "ended_at"):
        _check(key in raw, source, line, f"missing field {key!r}")
    _check(raw["end_reason"] in ("win", "forfeit", "cap"), source, line, "bad end_reason")
    _check(raw["first_mover"] in (0, 1), source, line, "bad first_mover")
    _check(raw["winner"] in (0, 1, None), source, line, "bad winner")
    _check((raw["winner"] is None) == (raw["end_reason"] == "cap"), source, line,
           "winner must be null exactly for capped games")
    usernames = raw["usernames"]
    _check(isinstance(usernames, list) and len(usernames) == 2, source, line, "bad usernames")
    pairs = raw["pairs"]
    _check(isinstance(pairs, list) and len(pairs) == 2, source, line, "bad pairs")
    for pair in pairs:
        _check(isinstance(pair, list) and len(pair) == 2, source, line, "bad pair shape")
        for name in pair:
            _check(
                isinstance(name, str) and name in {c.value for c in CHARACTERS},
                source, line, f"unknown character {name!r}",
            )
        _check(pair[0] != pair[1], source, line, "duplicate character in pair")
    _check(isinstance(raw["moves"], list), source, line, "moves must be a list")
    try:
        return GameRecord.from_json_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolationError(source, line, f"malformed game row: {exc}") from exc


def _validate_interaction(raw: dict, source: str, line: int) -> dict:
    _check(raw.get("schema") == INTERACTION_SCHEMA, source, line, "wrong or missing schema tag")
    for key in ("at", "seq", "username", "endpoint", "params_digest", "result", "outcome"):
        _check(key in raw, source, line, f"missing field {key!r}")
    _check(isinstance(raw["at"], (int, float)), source, line, "bad timestamp")
    _check(isinstance(raw["result"], int), source, line, "bad result code")
    _check(raw["username"] is None or isinstance(raw["username"], str), source, line, "bad username")
    return raw


def load_games_file(path: str | Path) -> list[GameRecord]:
    """Read and validate a standalone games NDJSON file.

    A leading run-header row (schema ``rpglite.run/1``), as written by
    the simulate command, is skipped.
    """
    path = Path(path)
    return [
        _validate_game(row, path.name, n)
        for n, row in _rows(path, path.name)
        if not (isinstance(row, dict) and row.get("schema") == RUN_SCHEMA)
    ]


def population_from_json(raw: list) -> list[PopulationMember]:
    """Parse a population description (the ``dataset export`` input)."""
    if not isinstance(raw, list) or not raw:
        raise ValueError("population file must hold a non-empty list")
    members = []
    for entry in raw:
        spec = BotSpec.from_json_dict(entry["spec"])
        members.append(
            PopulationMember(
                username=str(entry["username"]),
                spec=spec,
                games=int(entry["games"]),
                final_epsilon=(
                    None if entry.get("final_epsilon") is None
                    else float(entry["final_epsilon"])
                ),
            )
        )
    return members


def load_dataset(in_dir: str | Path) -> Dataset:
    """Read and schema-validate a dataset bundle.

    Raises SchemaViolationError naming the file and line of the first
    offending row.
    """
    root = Path(in_dir)
    players = [
        _validate_player(row, PLAYERS_FILE, n) for n, row in _rows(root / PLAYERS_FILE, PLAYERS_FILE)
    ]
    games = [
        _validate_game(row, GAMES_FILE, n) for n, row in _rows(root / GAMES_FILE, GAMES_FILE)
    ]
    interactions = [
        _validate_interaction(row, INTERACTIONS_FILE, n)
        for n, row in _rows(root / INTERACTIONS_FILE, INTERACTIONS_FILE)
    ]
    manifest_path = root / MANIFEST_FILE
    manifest = json.loads(manifest_path.read_text()) if manifest_path.exists() else {}
    seen = set()
    for p in players:
        if p.username in seen:
            raise SchemaViolationError(PLAYERS_FILE, 0, f"duplicate username {p.username!r}")
        seen.add(p.username)
    return Dataset(players=players, games=games, interactions=interactions, manifest=manifest)
