"""Game simulation and replayable game records.

A record stores, for every submitted move, the per-roll outcomes and
the full post-move snapshot; replaying the recorded outcomes from the
initial state must reproduce every snapshot exactly, which makes the
rules engine a referee for any dataset, synthetic or live.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import Config, CharacterId
from .errors import ReplayMismatchError, RulesError
from .rng import Rng
from .rules import (
    BranchEvents,
    concede,
    initial_state,
    sample_transition,
    replay_transition,
    winner,
)
from .solver import Matchup
from .state import (
    GameState,
    Move,
    MoveKind,
    decode_move,
    decode_state,
    encode_move,
    encode_state,
)

GAME_SCHEMA = "rpglite.game/1"
RUN_SCHEMA = "rpglite.run/1"
DEFAULT_MOVE_CAP = 1000

END_WIN = "win"
END_FORFEIT = "forfeit"
END_CAP = "cap"


def _events_dict(events: BranchEvents) -> dict:
    return {
        "rolls": [
            {"target_slot": r.target_slot, "hit": r.hit, "damage": r.damage}
            for r in events.rolls
        ],
        "heal": None if events.heal is None else list(events.heal),
        "stun_slot": events.stun_slot,
        "execute": events.execute,
        "rage": events.rage,
        "graze": events.graze,
    }


@dataclass(frozen=True)
class MoveEntry:
    """One submitted move: who, what, the roll outcomes, and the state
    left behind."""

    index: int
    side: int
    actor: str | None  # character name for attacks, None for skip/forfeit
    move: Move
    hits: tuple[bool, ...]
    events: dict
    state_after: GameState
    at: float

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "side": self.side,
            "actor": self.actor,
            "move": encode_move(self.move),
            "hits": list(self.hits),
            "events": self.events,
            "state_after": encode_state(self.state_after),
            "at": self.at,
        }

    @staticmethod
    def from_json_dict(raw: dict) -> "MoveEntry":
        return MoveEntry(
            index=int(raw["index"]),
            side=int(raw["side"]),
            actor=raw.get("actor"),
            move=decode_move(raw["move"]),
            hits=tuple(bool(h) for h in raw["hits"]),
            events=raw["events"],
            state_after=decode_state(raw["state_after"]),
            at=float(raw["at"]),
        )


@dataclass
class GameRecord:
    game_id: str
    usernames: tuple[str, str]
    season_id: str
    pairs: tuple[tuple[CharacterId, CharacterId], tuple[CharacterId, CharacterId]]
    first_mover: int
    moves: list[MoveEntry]
    winner: int | None
    end_reason: str
    created_at: float
    ended_at: float
    config_hash: str = ""

    @property
    def matchup(self) -> Matchup:
        return Matchup.of(self.pairs[0], self.pairs[1])

    @property
    def decided(self) -> bool:
        return self.end_reason in (END_WIN, END_FORFEIT)

    def winner_username(self) -> str | None:
        return None if self.winner is None else self.usernames[self.winner]

    def to_json_dict(self) -> dict:
        return {
            "schema": GAME_SCHEMA,
            "game_id": self.game_id,
            "usernames": list(self.usernames),
            "season_id": self.season_id,
            "config_hash": self.config_hash,
            "pairs": [[c.value for c in pair] for pair in self.pairs],
            "first_mover": self.first_mover,
            "moves": [m.to_json_dict() for m in self.moves],
            "winner": self.winner,
            "end_reason": self.end_reason,
            "created_at": self.created_at,
            "ended_at": self.ended_at,
        }

    @staticmethod
    def from_json_dict(raw: dict) -> "GameRecord":
        pairs = tuple(
            tuple(CharacterId(c) for c in pair) for pair in raw["pairs"]
        )
        return GameRecord(
            game_id=str(raw["game_id"]),
            usernames=(str(raw["usernames"][0]), str(raw["usernames"][1])),
            season_id=str(raw["season_id"]),
            pairs=pairs,  # type: ignore[arg-type]
            first_mover=int(raw["first_mover"]),
            moves=[MoveEntry.from_json_dict(m) for m in raw["moves"]],
            winner=None if raw["winner"] is None else int(raw["winner"]),
            end_reason=str(raw["end_reason"]),
            created_at=float(raw["created_at"]),
            ended_at=float(raw["ended_at"]),
            config_hash=str(raw.get("config_hash", "")),
        )


def _actor_name(state: GameState, move: Move) -> str | None:
    if move.kind is not MoveKind.ATTACK:
        return None
    return state.sides[state.active_side][move.actor_slot].id.value


def simulate_game(
    bot0,
    bot1,
    config: Config,
    seed: int,
    *,
    move_cap: int = DEFAULT_MOVE_CAP,
    game_id: str = "g0",
    usernames: tuple[str, str] = ("p0", "p1"),
    season_id: str = "adhoc",
    started_at: float = 0.0,
) -> GameRecord:
    """Play one game to termination or the move cap.

    The coin flip, every accuracy roll, and the synthetic clock all
    come from streams derived from ``seed``; each bot draws from its
    own spec seed split by game and side.  Hitting the cap is recorded
    as end reason "cap" with a null winner, never raised.
    """
    rng = Rng(seed)
    first_mover = rng.derive("coin").randint(2)
    rolls = rng.derive("rolls")
    clock = rng.derive("clock")

    s0 = bot0.session(seed, 0)
    s1 = bot1.session(seed, 1)
    pair0 = s0.pick_pair()
    pair1 = s1.pick_pair()
    matchup = Matchup.of(pair0, pair1)
    s0.bind(matchup)
    s1.bind(matchup)

    state = initial_state(pair0, pair1, first_mover, config)
    t = started_at
    moves: list[MoveEntry] = []
    while winner(state) is None and len(moves) < move_cap:
        side = state.active_side
        move = (s0 if side == 0 else s1).choose_move(state)
        succ, events = sample_transition(state, move, config, rolls)
        t = round(t + 1.0 + clock.u01() * 29.0, 3)
        moves.append(
            MoveEntry(
                index=len(moves),
                side=side,
                actor=_actor_name(state, move),
                move=move,
                hits=tuple(r.hit for r in events.rolls),
                events=_events_dict(events),
                state_after=succ,
                at=t,
            )
        )
        state = succ

    won_by = winner(state)
    if won_by is None:
        end_reason = END_CAP
    elif state.forfeited is not None:
        end_reason = END_FORFEIT
    else:
        end_reason = END_WIN
    return GameRecord(
        game_id=game_id,
        usernames=usernames,
        season_id=season_id,
        pairs=(pair0, pair1),
        first_mover=first_mover,
        moves=moves,
        winner=won_by,
        end_reason=end_reason,
        created_at=started_at,
        ended_at=t,
        config_hash=config.config_hash(),
    )


@dataclass(frozen=True)
class GameTask:
    """One scheduled simulation, fully determined before it runs."""

    index: int
    game_id: str
    seed: int
    usernames: tuple[str, str]
    specs: tuple  # (BotSpec, BotSpec)
    started_at: float


_WORKER_STATE: dict = {}


def _worker_init(config_json: dict, season_id: str, move_cap: int) -> None:
    from .artifacts import ArtifactStore
    from .config import validate_config

    _WORKER_STATE["config"] = validate_config(config_json)
    _WORKER_STATE["store"] = ArtifactStore()
    _WORKER_STATE["season_id"] = season_id
    _WORKER_STATE["move_cap"] = move_cap


def _worker_run(task: GameTask) -> GameRecord:
    from .bots import make_bot

    config = _WORKER_STATE["config"]
    store = _WORKER_STATE["store"]
    bot0 = make_bot(task.specs[0], config, store)
    bot1 = make_bot(task.specs[1], config, store)
    return simulate_game(
        bot0,
        bot1,
        config,
        task.seed,
        move_cap=_WORKER_STATE["move_cap"],
        game_id=task.game_id,
        usernames=task.usernames,
        season_id=_WORKER_STATE["season_id"],
        started_at=task.started_at,
    )


def run_game_tasks(
    tasks: list[GameTask], config: Config, season_id: str, move_cap: int, jobs: int = 1
) -> list[GameRecord]:
    """Simulate scheduled games, optionally across processes.

    Tasks carry their own seeds, so the records come out identical for
    any job count; results are assembled in task order.
    """
    if jobs <= 1 or len(tasks) < 2:
        _worker_init(config.to_json_dict(), season_id, move_cap)
        try:
            return [_worker_run(t) for t in tasks]
        finally:
            _WORKER_STATE.clear()
    import multiprocessing
    from concurrent.futures import ProcessPoolExecutor

    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(
        max_workers=jobs,
        mp_context=ctx,
        initializer=_worker_init,
        initargs=(config.to_json_dict(), season_id, move_cap),
    ) as pool:
        return list(pool.map(_worker_run, tasks, chunksize=8))


def simulate_batch(
    spec0,
    spec1,
    config: Config,
    n_games: int,
    seed: int,
    *,
    move_cap: int = DEFAULT_MOVE_CAP,
    usernames: tuple[str, str] = ("p0", "p1"),
    season_id: str = "adhoc",
    start_epoch: float = 1_700_000_000.0,
    jobs: int = 1,
) -> list[GameRecord]:
    """A fixed pairing played over independent derived seeds."""
    if n_games < 0:
        raise ValueError("n_games must be non-negative")
    seeds = Rng(seed).derive("batch")
    tasks = []
    when = start_epoch
    for k in range(n_games):
        tasks.append(
            GameTask(
                index=k,
                game_id=f"g{k + 1:06d}",
                seed=seeds.next_u64(),
                usernames=usernames,
                specs=(spec0, spec1),
                started_at=round(when, 3),
            )
        )
        when += 3600.0
    return run_game_tasks(tasks, config, season_id, move_cap, jobs)


def replay_game(record: GameRecord, config: Config) -> list[GameState]:
    """Re-run a record's moves from its initial state, verifying every
    snapshot.  Returns the pre-move state sequence (one per move).

    Raises ReplayMismatchError on any inconsistency with the rules:
    illegal move, wrong mover, roll-count mismatch, or a snapshot that
    the recorded outcomes do not reproduce.
    """
    if record.config_hash and record.config_hash != config.config_hash():
        raise ReplayMismatchError(
            f"game {record.game_id} was recorded under config "
            f"{record.config_hash[:16]}, not the one supplied"
        )
    try:
        state = initial_state(record.pairs[0], record.pairs[1], record.first_mover, config)
    except RulesError as exc:
        raise ReplayMismatchError(f"game {record.game_id}: bad header: {exc}") from exc

    before: list[GameState] = []
    for entry in record.moves:
        if winner(state) is not None:
            raise ReplayMismatchError(
                f"game {record.game_id}: move {entry.index} after the game ended"
            )
        if entry.side != state.active_side:
            # Out-of-turn entries are only ever concessions: a player may
            # resign while the opponent is the mover.
            if entry.move.kind is not MoveKind.FORFEIT:
                raise ReplayMismatchError(
                    f"game {record.game_id}: move {entry.index} recorded for side "
                    f"{entry.side} but side {state.active_side} acts"
                )
            if entry.hits or concede(state, entry.side) != entry.state_after:
                raise ReplayMismatchError(
                    f"game {record.game_id}: move {entry.index} concession "
                    "snapshot diverges"
                )
            before.append(state)
            state = entry.state_after
            continue
        if entry.move.kind is MoveKind.FORFEIT and not entry.hits and (
            concede(state, entry.side) == entry.state_after
        ):
            # The mover may also resign through the concession path (for
            # example mid-chain, where the forfeit move is not legal).
            before.append(state)
            state = entry.state_after
            continue
        try:
            succ, _ = replay_transition(state, entry.move, config, entry.hits)
        except RulesError as exc:
            raise ReplayMismatchError(
                f"game {record.game_id}: move {entry.index} rejected: {exc}"
            ) from exc
        if succ != entry.state_after:
            raise ReplayMismatchError(
                f"game {record.game_id}: move {entry.index} snapshot diverges"
            )
        before.append(state)
        state = succ

    won_by = winner(state)
    if record.end_reason == END_CAP:
        if won_by is not None:
            raise ReplayMismatchError(f"game {record.game_id}: capped but decided")
    elif won_by != record.winner:
        raise ReplayMismatchError(
            f"game {record.game_id}: recorded winner {record.winner}, replay says {won_by}"
        )
    return before
