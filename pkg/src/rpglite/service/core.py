"""Framework-free domain logic for the game service.

The service is event sourced.  Command methods validate a request,
capture every nondeterministic input (timestamps, salts, seeds, roll
outcomes, move costs) in a domain event, append it to the log, and
then mutate state exclusively through the event's ``_apply`` handler.
Recovery replays the log through the same handlers, so a rebuilt
service is bit-identical to the one that crashed and needs no RNG,
clock, or solver to get there.

All mutating entry points take the service lock; per-game mutations
and queue pairing are therefore serialized.
"""

from __future__ import annotations

import hashlib
import json
import re
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..artifacts import ArtifactStore
from ..bots import BotSpec, make_bot
from ..config import CHARACTERS, CharacterId, Config, character_from_name, validate_config
from ..errors import RpgliteError
from ..medals import DEFAULT_MEDALS, MedalBook, earned_medals
from ..rating import DEFAULT_SKILL, elo_update
from ..rng import Rng
from ..rules import (
    BranchEvents,
    concede,
    initial_state,
    legal_moves,
    sample_transition,
    replay_transition,
    winner,
)
from ..simulate import (
    DEFAULT_MOVE_CAP,
    END_CAP,
    END_FORFEIT,
    END_WIN,
    GameRecord,
    MoveEntry,
    _actor_name,
    _events_dict,
)
from ..solver import DEFAULT_TOL, Matchup, q_values, sorted_pair
from ..state import FORFEIT, GameState, Move, decode_move, decode_state, encode_move, encode_state
from .storage import SNAPSHOT_EVERY, AppendLog, EventLog, GAMES_FILE

USERNAME_RE = re.compile(r"^[A-Za-z0-9_\-]{3,20}$")

N_SLOTS = 5
QUEUED = "@queue"  # slot marker while waiting for a match
BOT_NAME = "@bot"  # reserved: real usernames cannot contain "@"

PHASE_SELECTING = "selecting"
PHASE_PLAYING = "playing"
PHASE_FINISHED = "finished"


class ApiError(RpgliteError):
    """Domain failure with an HTTP status and a stable error code."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def credential_digest(salt: str, password: str) -> str:
    return _sha256(salt + password)


def token_digest(token: str) -> str:
    return _sha256("token:" + token)


def _canon(data) -> str:
    return json.dumps(data, separators=(",", ":"), sort_keys=True)


def _pair_values(pair: tuple[CharacterId, CharacterId]) -> list[str]:
    return [c.value for c in pair]


def _pair_from_values(values) -> tuple[CharacterId, CharacterId]:
    a, b = (character_from_name(str(v)) for v in values)
    return (a, b)


@dataclass
class Account:
    username: str  # display form; uniqueness is case-insensitive
    salt: str
    digest: str
    created_at: float
    consent_research: bool
    consent_terms: bool
    skill_by_season: dict[str, float] = field(default_factory=dict)
    games_played: int = 0
    games_won: int = 0
    char_played: dict[CharacterId, int] = field(default_factory=dict)
    char_won: dict[CharacterId, int] = field(default_factory=dict)
    medals: list[str] = field(default_factory=list)
    losses_to: list[str] = field(default_factory=list)
    flawless_wins: int = 0
    slots: list = field(default_factory=lambda: [None] * N_SLOTS)

    def skill(self, season_id: str) -> float:
        return self.skill_by_season.get(season_id, DEFAULT_SKILL)

    def to_json_dict(self) -> dict:
        return {
            "username": self.username,
            "salt": self.salt,
            "digest": self.digest,
            "created_at": self.created_at,
            "consent_research": self.consent_research,
            "consent_terms": self.consent_terms,
            "skill_by_season": dict(self.skill_by_season),
            "games_played": self.games_played,
            "games_won": self.games_won,
            "char_played": {c.value: n for c, n in self.char_played.items()},
            "char_won": {c.value: n for c, n in self.char_won.items()},
            "medals": list(self.medals),
            "losses_to": list(self.losses_to),
            "flawless_wins": self.flawless_wins,
            "slots": list(self.slots),
        }

    @staticmethod
    def from_json_dict(raw: dict) -> "Account":
        return Account(
            username=str(raw["username"]),
            salt=str(raw["salt"]),
            digest=str(raw["digest"]),
            created_at=float(raw["created_at"]),
            consent_research=bool(raw["consent_research"]),
            consent_terms=bool(raw["consent_terms"]),
            skill_by_season={k: float(v) for k, v in raw["skill_by_season"].items()},
            games_played=int(raw["games_played"]),
            games_won=int(raw["games_won"]),
            char_played={character_from_name(k): int(v) for k, v in raw["char_played"].items()},
            char_won={character_from_name(k): int(v) for k, v in raw["char_won"].items()},
            medals=[str(m) for m in raw["medals"]],
            losses_to=[str(u) for u in raw["losses_to"]],
            flawless_wins=int(raw["flawless_wins"]),
            slots=list(raw["slots"]),
        )


@dataclass
class BotSeat:
    side: int
    spec: BotSpec
    coach: bool
    pair: tuple[CharacterId, CharacterId]

    def to_json_dict(self) -> dict:
        return {
            "side": self.side,
            "spec": self.spec.to_json_dict(),
            "coach": self.coach,
            "pair": _pair_values(self.pair),
        }

    @staticmethod
    def from_json_dict(raw: dict) -> "BotSeat":
        return BotSeat(
            side=int(raw["side"]),
            spec=BotSpec.from_json_dict(raw["spec"]),
            coach=bool(raw["coach"]),
            pair=_pair_from_values(raw["pair"]),
        )


@dataclass
class ServiceGame:
    game_id: str
    seats: list  # [[username, slot|None], [username, slot|None]]
    season_id: str
    config_hash: str
    game_seed: int
    origin: str  # queue | challenge | bot
    created_at: float
    bot: BotSeat | None = None
    pairs: list = field(default_factory=lambda: [None, None])
    first_mover: int | None = None
    phase: str = PHASE_SELECTING
    state: GameState | None = None
    moves: list[MoveEntry] = field(default_factory=list)
    costs: dict[int, float] = field(default_factory=dict)
    responses: dict[int, tuple] = field(default_factory=dict)
    winner: int | None = None
    end_reason: str | None = None
    ended_at: float | None = None

    @property
    def users(self) -> tuple[str, str]:
        return (self.seats[0][0], self.seats[1][0])

    @property
    def next_seq(self) -> int:
        return len(self.moves)

    def side_of(self, username: str) -> int | None:
        for side in (0, 1):
            if self.seats[side][0] == username:
                return side
        return None

    @property
    def matchup(self) -> Matchup:
        return Matchup.of(self.pairs[0], self.pairs[1])

    def pre_states(self, config: Config) -> list[GameState]:
        """State before each recorded move, from the stored snapshots."""
        first = initial_state(self.pairs[0], self.pairs[1], self.first_mover, config)
        return [first] + [m.state_after for m in self.moves[:-1]]

    def record(self) -> GameRecord:
        return GameRecord(
            game_id=self.game_id,
            usernames=self.users,
            season_id=self.season_id,
            pairs=(self.pairs[0], self.pairs[1]),
            first_mover=self.first_mover,
            moves=list(self.moves),
            winner=self.winner,
            end_reason=self.end_reason,
            created_at=self.created_at,
            ended_at=self.ended_at,
            config_hash=self.config_hash,
        )

    def to_json_dict(self) -> dict:
        return {
            "game_id": self.game_id,
            "seats": [list(seat) for seat in self.seats],
            "season_id": self.season_id,
            "config_hash": self.config_hash,
            "game_seed": self.game_seed,
            "origin": self.origin,
            "created_at": self.created_at,
            "bot": None if self.bot is None else self.bot.to_json_dict(),
            "pairs": [None if p is None else _pair_values(p) for p in self.pairs],
            "first_mover": self.first_mover,
            "phase": self.phase,
            "state": None if self.state is None else encode_state(self.state),
            "moves": [m.to_json_dict() for m in self.moves],
            "costs": {str(k): v for k, v in sorted(self.costs.items())},
            "responses": {str(k): list(v) for k, v in sorted(self.responses.items())},
            "winner": self.winner,
            "end_reason": self.end_reason,
            "ended_at": self.ended_at,
        }

    @staticmethod
    def from_json_dict(raw: dict) -> "ServiceGame":
        game = ServiceGame(
            game_id=str(raw["game_id"]),
            seats=[list(seat) for seat in raw["seats"]],
            season_id=str(raw["season_id"]),
            config_hash=str(raw["config_hash"]),
            game_seed=int(raw["game_seed"]),
            origin=str(raw["origin"]),
            created_at=float(raw["created_at"]),
            bot=None if raw["bot"] is None else BotSeat.from_json_dict(raw["bot"]),
        )
        game.pairs = [None if p is None else _pair_from_values(p) for p in raw["pairs"]]
        game.first_mover = raw["first_mover"]
        game.phase = str(raw["phase"])
        game.state = None if raw["state"] is None else decode_state(raw["state"])
        game.moves = [MoveEntry.from_json_dict(m) for m in raw["moves"]]
        game.costs = {int(k): float(v) for k, v in raw["costs"].items()}
        game.responses = {int(k): tuple(v) for k, v in raw["responses"].items()}
        game.winner = raw["winner"]
        game.end_reason = raw["end_reason"]
        game.ended_at = raw["ended_at"]
        return game


class Service:
    """The playable service: accounts, matchmaking, live games, ratings.

    ``seed`` fixes all generated randomness (salts, tokens, game seeds)
    for reproducible deployments; ``None`` draws from the OS entropy
    pool.  ``data_dir`` enables persistence; without it the service is
    purely in-memory (tests, demos).
    """

    def __init__(
        self,
        config: Config,
        *,
        data_dir: str | Path | None = None,
        seed: int | None = None,
        medal_book: MedalBook | None = None,
        artifact_root: str | Path | None = None,
        tol: float = DEFAULT_TOL,
        move_cap: int = DEFAULT_MOVE_CAP,
        clock=time.time,
    ):
        self._lock = threading.RLock()
        self._seed = seed
        self._clock = clock
        self.move_cap = move_cap
        self.medal_book = medal_book if medal_book is not None else DEFAULT_MEDALS
        self.store = ArtifactStore(root=artifact_root, tol=tol)

        initial = validate_config(config.to_json_dict())
        self.configs: dict[str, Config] = {}
        self.config_order: list[str] = []
        self.active_hash = ""
        self._register_config(initial)
        self.active_hash = initial.config_hash()

        self.accounts: dict[str, Account] = {}  # keyed by username.lower()
        self.tokens: dict[str, str] = {}  # token digest -> username.lower()
        self.queue: list[tuple[str, int]] = []  # (display username, slot), FIFO
        self.games: dict[str, ServiceGame] = {}
        self.games_created = 0
        self.tokens_issued = 0
        self.event_seq = 0

        self._bots: dict[str, object] = {}  # game_id -> warm BotSession
        self._rolls: dict[str, Rng] = {}  # game_id -> live roll stream
        self._replaying = False
        self._last_snapshot_seq = 0

        self.log: EventLog | None = None
        self._games_sink: AppendLog | None = None
        if data_dir is not None:
            self.log = EventLog(data_dir)
            self._games_sink = AppendLog(Path(data_dir) / GAMES_FILE)
            self._recover()

    # -- config registry ------------------------------------------------

    def _register_config(self, config: Config) -> None:
        h = config.config_hash()
        if h not in self.configs:
            self.configs[h] = config
            self.config_order.append(h)

    @property
    def config(self) -> Config:
        return self.configs[self.active_hash]

    def _config_of(self, game: ServiceGame) -> Config:
        return self.configs[game.config_hash]

    # -- persistence -----------------------------------------------------

    def _recover(self) -> None:
        snap = self.log.read_snapshot()
        if snap is not None:
            self._load_state(snap["state"])
            self.event_seq = int(snap["event_seq"])
            self._last_snapshot_seq = self.event_seq
        self._replaying = True
        try:
            for row in self.log.read_since(self.event_seq):
                if row["seq"] != self.event_seq + 1:
                    raise RpgliteError(
                        f"event log gap: expected seq {self.event_seq + 1}, got {row['seq']}"
                    )
                self.event_seq = row["seq"]
                self._apply(row["kind"], row["data"])
        finally:
            self._replaying = False

    def _record(self, kind: str, data: dict) -> None:
        """Append one domain event and apply it to state."""
        self.event_seq += 1
        if self.log is not None:
            self.log.append(self.event_seq, data["at"], kind, data)
        self._apply(kind, data)
        if (
            self.log is not None
            and self.event_seq - self._last_snapshot_seq >= SNAPSHOT_EVERY
        ):
            self.write_snapshot()

    def write_snapshot(self) -> None:
        if self.log is None:
            return
        self.log.write_snapshot(self.event_seq, self._now(), self.snapshot_state())
        self._last_snapshot_seq = self.event_seq

    def snapshot_state(self) -> dict:
        """The complete durable state as one JSON-safe dict."""
        return {
            "accounts": [
                self.accounts[k].to_json_dict() for k in sorted(self.accounts)
            ],
            "tokens": dict(sorted(self.tokens.items())),
            "queue": [[u, s] for u, s in self.queue],
            "games": [self.games[k].to_json_dict() for k in sorted(self.games)],
            "configs": [self.configs[h].to_json_dict() for h in self.config_order],
            "active_config_hash": self.active_hash,
            "games_created": self.games_created,
            "tokens_issued": self.tokens_issued,
        }

    def _load_state(self, raw: dict) -> None:
        self.accounts = {}
        for a in raw["accounts"]:
            acct = Account.from_json_dict(a)
            self.accounts[acct.username.lower()] = acct
        self.tokens = {str(k): str(v) for k, v in raw["tokens"].items()}
        self.queue = [(str(u), int(s)) for u, s in raw["queue"]]
        self.games = {}
        for g in raw["games"]:
            game = ServiceGame.from_json_dict(g)
            self.games[game.game_id] = game
        self.configs = {}
        self.config_order = []
        for c in raw["configs"]:
            self._register_config(validate_config(c))
        self.active_hash = str(raw["active_config_hash"])
        self.games_created = int(raw["games_created"])
        self.tokens_issued = int(raw["tokens_issued"])
        self._bots = {}
        self._rolls = {}

    # -- generated values ------------------------------------------------

    def _now(self) -> float:
        return float(self._clock())

    def _new_salt(self) -> str:
        if self._seed is None:
            return secrets.token_hex(8)
        r = Rng(self._seed).derive_indexed("salt", len(self.accounts))
        return f"{r.next_u64():016x}"

    def _new_token(self) -> str:
        if self._seed is None:
            return secrets.token_hex(16)
        r = Rng(self._seed).derive_indexed("token", self.tokens_issued)
        return f"{r.next_u64():016x}{r.next_u64():016x}"

    def _new_game_seed(self) -> int:
        if self._seed is None:
            return secrets.randbits(63)
        r = Rng(self._seed).derive_indexed("game-seed", self.games_created)
        return r.next_u64() & ((1 << 63) - 1)

    def _new_game_id(self) -> str:
        return f"g{self.games_created + 1:06d}"

    # -- lookups ----------------------------------------------------------

    def account_for_token(self, token: str) -> Account | None:
        with self._lock:
            key = self.tokens.get(token_digest(token))
            return self.accounts.get(key) if key else None

    def _account(self, username: str) -> Account:
        acct = self.accounts.get(username.lower())
        if acct is None:
            raise ApiError(404, "NoSuchUser", f"no account named {username!r}")
        return acct

    def _game_for(self, username: str, game_id: str) -> ServiceGame:
        game = self.games.get(game_id)
        if game is None:
            raise ApiError(404, "NoSuchGame", f"no game {game_id!r}")
        if game.side_of(username) is None:
            raise ApiError(403, "NotInGame", "you are not a player in this game")
        return game

    # -- commands ----------------------------------------------------------

    def register(
        self,
        username: str,
        password: str,
        consent_research: bool = False,
        consent_terms: bool = False,
    ) -> dict:
        with self._lock:
            if not isinstance(username, str) or not USERNAME_RE.match(username):
                raise ApiError(
                    400,
                    "InvalidUsername",
                    "username must be 3-20 characters from [A-Za-z0-9_-]",
                )
            if not (consent_research and consent_terms):
                raise ApiError(
                    400,
                    "ConsentRequired",
                    "research-use and terms consents must both be given",
                )
            if username.lower() in self.accounts:
                raise ApiError(409, "UsernameTaken", f"{username!r} is already registered")
            if not isinstance(password, str) or not password:
                raise ApiError(400, "InvalidPassword", "password must not be empty")
            salt = self._new_salt()
            self._record(
                "account_registered",
                {
                    "username": username,
                    "salt": salt,
                    "digest": credential_digest(salt, password),
                    "consent_research": True,
                    "consent_terms": True,
                    "at": self._now(),
                },
            )
            token = self._issue_token(username)
            return {"username": username, "token": token, "skill": DEFAULT_SKILL}

    def login(self, username: str, password: str) -> dict:
        with self._lock:
            acct = self.accounts.get(str(username).lower())
            if acct is None or credential_digest(acct.salt, str(password)) != acct.digest:
                raise ApiError(401, "BadCredentials", "unknown username or wrong password")
            token = self._issue_token(acct.username)
            return {"username": acct.username, "token": token}

    def _issue_token(self, username: str) -> str:
        token = self._new_token()
        self._record(
            "token_issued",
            {"username": username, "token_digest": token_digest(token), "at": self._now()},
        )
        return token

    def queue_for_match(self, username: str, slot: int) -> dict:
        with self._lock:
            acct = self._account(username)
            self._check_slot_free(acct, slot)
            self._record("user_queued", {"username": acct.username, "slot": slot, "at": self._now()})
            game_id = self._try_pair()
            return {
                "queued": True,
                "slot": slot,
                "game_id": game_id,
                "queue_length": len(self.queue),
            }

    def _check_slot_free(self, acct: Account, slot) -> None:
        if not isinstance(slot, int) or not 0 <= slot < N_SLOTS:
            raise ApiError(400, "InvalidSlot", f"slot must be an integer in 0..{N_SLOTS - 1}")
        if acct.slots[slot] is not None:
            raise ApiError(409, "SlotBusy", f"slot {slot} already holds a game")

    def _try_pair(self) -> str | None:
        """Match the two oldest queue entries from distinct users."""
        if not self.queue:
            return None
        first_user, first_slot = self.queue[0]
        for other_user, other_slot in self.queue[1:]:
            if other_user.lower() != first_user.lower():
                return self._create_game(
                    seats=[[first_user, first_slot], [other_user, other_slot]],
                    origin="queue",
                    bot=None,
                )
        return None

    def _create_game(self, seats: list, origin: str, bot: dict | None) -> str:
        game_id = self._new_game_id()
        self._record(
            "game_created",
            {
                "game_id": game_id,
                "seats": seats,
                "season_id": self.config.season_id,
                "config_hash": self.active_hash,
                "game_seed": self._new_game_seed(),
                "origin": origin,
                "bot": bot,
                "at": self._now(),
            },
        )
        return game_id

    def challenge(self, username: str, target: str, slot: int) -> dict:
        with self._lock:
            acct = self._account(username)
            target_acct = self._account(target)
            if target_acct.username.lower() == acct.username.lower():
                raise ApiError(400, "SelfChallenge", "you cannot challenge yourself")
            self._check_slot_free(acct, slot)
            free = [i for i in range(N_SLOTS) if target_acct.slots[i] is None]
            if not free:
                raise ApiError(
                    409, "NoFreeSlots", f"{target_acct.username} has no open game slot"
                )
            game_id = self._create_game(
                seats=[[acct.username, slot], [target_acct.username, free[0]]],
                origin="challenge",
                bot=None,
            )
            return {"game_id": game_id, "opponent": target_acct.username}

    def create_bot_game(
        self, username: str, slot: int, bot_spec: dict | None = None, coach: bool = False
    ) -> dict:
        """Start a practice game against a server bot.

        Practice games never touch skill, medals, or tallies; they are
        the only games where coach annotations (move costs, hints) are
        available.
        """
        with self._lock:
            acct = self._account(username)
            self._check_slot_free(acct, slot)
            raw = dict(bot_spec) if bot_spec else {"kind": "optimal"}
            try:
                spec = BotSpec.from_json_dict(raw)
            except (ValueError, KeyError, TypeError) as exc:
                raise ApiError(400, "InvalidBot", f"bad bot spec: {exc}") from exc
            game_seed = self._new_game_seed()
            bot = make_bot(spec, self.config, self.store)
            session = bot.session(game_seed, 1)
            pair = session.pick_pair()
            game_id = self._new_game_id()
            self._record(
                "game_created",
                {
                    "game_id": game_id,
                    "seats": [[acct.username, slot], [BOT_NAME, None]],
                    "season_id": self.config.season_id,
                    "config_hash": self.active_hash,
                    "game_seed": game_seed,
                    "origin": "bot",
                    "bot": {
                        "side": 1,
                        "spec": spec.to_json_dict(),
                        "coach": bool(coach),
                        "pair": _pair_values(pair),
                    },
                    "at": self._now(),
                },
            )
            self._bots[game_id] = session
            return self.get_game(username, game_id)

    def select_pair(self, username: str, game_id: str, characters: list) -> dict:
        with self._lock:
            acct = self._account(username)
            game = self._game_for(acct.username, game_id)
            if game.phase == PHASE_FINISHED:
                raise ApiError(409, "GameOver", "the game is already over")
            side = game.side_of(acct.username)
            if game.pairs[side] is not None:
                raise ApiError(409, "AlreadyChosen", "your pair is already locked in")
            if not isinstance(characters, (list, tuple)) or len(characters) != 2:
                raise ApiError(400, "InvalidCharacter", "exactly two character names required")
            try:
                picked = tuple(character_from_name(str(c)) for c in characters)
            except Exception as exc:
                raise ApiError(400, "InvalidCharacter", str(exc)) from exc
            try:
                pair = sorted_pair(*picked)
            except ValueError as exc:
                raise ApiError(400, "DuplicateCharacter", str(exc)) from exc
            other = game.pairs[1 - side]
            first_mover = None
            if other is not None:
                first_mover = Rng(game.game_seed).derive("coin").randint(2)
            self._record(
                "pair_selected",
                {
                    "game_id": game_id,
                    "username": acct.username,
                    "side": side,
                    "pair": _pair_values(pair),
                    "first_mover": first_mover,
                    "at": self._now(),
                },
            )
            self._advance_bot(game)
            return self.get_game(acct.username, game_id)

    def submit_move(self, username: str, game_id: str, seq, move_raw: dict) -> dict:
        with self._lock:
            acct = self._account(username)
            game = self._game_for(acct.username, game_id)
            if not isinstance(seq, int) or seq < 0:
                raise ApiError(400, "InvalidSequence", "seq must be a non-negative integer")
            if seq < game.next_seq:
                stored = game.responses.get(seq)
                try:
                    normalized = _canon(encode_move(decode_move(move_raw)))
                except Exception:
                    normalized = None
                if stored is not None and stored[0] == normalized:
                    return stored[1]
                raise ApiError(
                    409,
                    "StaleSequence",
                    f"sequence {seq} was already played; next is {game.next_seq}",
                )
            if game.phase == PHASE_FINISHED:
                raise ApiError(409, "GameOver", "the game is already over")
            if game.phase == PHASE_SELECTING:
                raise ApiError(409, "NotStarted", "both pairs must be chosen first")
            if seq > game.next_seq:
                raise ApiError(
                    409,
                    "StaleSequence",
                    f"sequence {seq} is ahead; next is {game.next_seq}",
                )
            side = game.side_of(acct.username)
            if game.state.active_side != side:
                raise ApiError(403, "NotYourTurn", "it is the other player's turn")
            config = self._config_of(game)
            try:
                move = decode_move(move_raw)
            except Exception as exc:
                raise ApiError(400, "IllegalMove", f"unreadable move: {exc}") from exc
            if move not in legal_moves(game.state, config):
                raise ApiError(400, "IllegalMove", "that move is not legal here")
            cost = None
            if game.bot is not None and game.bot.coach:
                cost = self._move_cost(game, move)
            _, events = sample_transition(game.state, move, config, self._rolls_rng(game))
            self._record(
                "move_applied",
                {
                    "game_id": game_id,
                    "seq": seq,
                    "side": side,
                    "username": acct.username,
                    "move": encode_move(move),
                    "hits": [bool(r.hit) for r in events.rolls],
                    "cost": cost,
                    "at": self._now(),
                },
            )
            response = game.responses[seq][1]
            self._advance_bot(game)
            return response

    def forfeit(self, username: str, game_id: str) -> dict:
        """Resign a running game.  Allowed out of turn; the opponent wins."""
        with self._lock:
            acct = self._account(username)
            game = self._game_for(acct.username, game_id)
            if game.phase == PHASE_FINISHED:
                raise ApiError(409, "GameOver", "the game is already over")
            if game.phase == PHASE_SELECTING:
                raise ApiError(409, "NotStarted", "nothing to forfeit before pairs are chosen")
            side = game.side_of(acct.username)
            self._record(
                "game_conceded",
                {"game_id": game_id, "side": side, "username": acct.username, "at": self._now()},
            )
            return self.get_game(acct.username, game_id)

    def change_season(self, config_raw: dict) -> dict:
        with self._lock:
            try:
                config = validate_config(config_raw)
            except RpgliteError as exc:
                raise ApiError(400, "InvalidConfig", str(exc)) from exc
            if config.config_hash() != self.active_hash:
                self._record(
                    "season_changed",
                    {"config": config.to_json_dict(), "at": self._now()},
                )
            return {"season_id": self.config.season_id, "config_hash": self.active_hash}

    # -- coach helpers ----------------------------------------------------

    def _move_cost(self, game: ServiceGame, move: Move) -> float:
        """Win-probability given up by the mover's choice, against the
        mover's own optimal value function."""
        config = self._config_of(game)
        space = self.store.space(config, game.matchup)
        side = game.state.active_side
        sol = self.store.solution(config, game.matchup, side)
        qs = q_values(space, sol.values, space.index_of(game.state), include_forfeit=True)
        return max(qs.values()) - qs[move]

    def hint(self, username: str, game_id: str) -> dict:
        with self._lock:
            acct = self._account(username)
            game = self._game_for(acct.username, game_id)
            if game.bot is None or not game.bot.coach:
                raise ApiError(403, "CoachDisabled", "hints are only available in coach games")
            if game.phase == PHASE_FINISHED:
                raise ApiError(409, "GameOver", "the game is already over")
            if game.phase == PHASE_SELECTING:
                raise ApiError(409, "NotStarted", "both pairs must be chosen first")
            side = game.side_of(acct.username)
            if game.state.active_side != side:
                raise ApiError(403, "NotYourTurn", "hints apply to your own turn")
            config = self._config_of(game)
            space = self.store.space(config, game.matchup)
            sol = self.store.solution(config, game.matchup, side)
            qs = q_values(space, sol.values, space.index_of(game.state))
            best_move, best_q = None, -1.0
            for mv, q in qs.items():
                if q > best_q:
                    best_move, best_q = mv, q
            return {
                "move": encode_move(best_move),
                "value": best_q,
                "q_values": [{"move": encode_move(m), "q": q} for m, q in qs.items()],
            }

    # -- bot play -----------------------------------------------------------

    def _rolls_rng(self, game: ServiceGame) -> Rng:
        rng = self._rolls.get(game.game_id)
        if rng is None:
            rng = Rng(game.game_seed).derive("rolls")
            for _ in range(sum(len(m.hits) for m in game.moves)):
                rng.u01()
            self._rolls[game.game_id] = rng
        return rng

    def _bot_session(self, game: ServiceGame):
        session = self._bots.get(game.game_id)
        if session is None:
            bot = make_bot(game.bot.spec, self._config_of(game), self.store)
            session = bot.session(game.game_seed, game.bot.side)
            if session.pick_pair() != game.bot.pair:
                raise RpgliteError(f"game {game.game_id}: bot pair diverged on rebuild")
            if game.phase != PHASE_SELECTING:
                session.bind(game.matchup)
                config = self._config_of(game)
                for entry, state in zip(game.moves, game.pre_states(config)):
                    if entry.side != game.bot.side or state.active_side != entry.side:
                        continue
                    if session.choose_move(state) != entry.move:
                        raise RpgliteError(
                            f"game {game.game_id}: bot move diverged on rebuild"
                        )
            self._bots[game.game_id] = session
        return session

    def _advance_bot(self, game: ServiceGame) -> None:
        if game.bot is None:
            return
        while game.phase == PHASE_PLAYING and game.state.active_side == game.bot.side:
            session = self._bot_session(game)
            if getattr(session, "_space", None) is None:
                session.bind(game.matchup)
            move = session.choose_move(game.state)
            config = self._config_of(game)
            _, events = sample_transition(game.state, move, config, self._rolls_rng(game))
            self._record(
                "move_applied",
                {
                    "game_id": game.game_id,
                    "seq": game.next_seq,
                    "side": game.bot.side,
                    "username": BOT_NAME,
                    "move": encode_move(move),
                    "hits": [bool(r.hit) for r in events.rolls],
                    "cost": None,
                    "at": self._now(),
                },
            )

    # -- event application ---------------------------------------------------

    def _apply(self, kind: str, data: dict) -> None:
        handler = getattr(self, f"_apply_{kind}", None)
        if handler is None:
            raise RpgliteError(f"unknown event kind: {kind}")
        handler(data)

    def _apply_account_registered(self, data: dict) -> None:
        acct = Account(
            username=str(data["username"]),
            salt=str(data["salt"]),
            digest=str(data["digest"]),
            created_at=float(data["at"]),
            consent_research=bool(data["consent_research"]),
            consent_terms=bool(data["consent_terms"]),
        )
        self.accounts[acct.username.lower()] = acct

    def _apply_token_issued(self, data: dict) -> None:
        self.tokens[str(data["token_digest"])] = str(data["username"]).lower()
        self.tokens_issued += 1

    def _apply_user_queued(self, data: dict) -> None:
        username, slot = str(data["username"]), int(data["slot"])
        self.queue.append((username, slot))
        self.accounts[username.lower()].slots[slot] = QUEUED

    def _apply_game_created(self, data: dict) -> None:
        seats = [[str(u), None if s is None else int(s)] for u, s in data["seats"]]
        game = ServiceGame(
            game_id=str(data["game_id"]),
            seats=seats,
            season_id=str(data["season_id"]),
            config_hash=str(data["config_hash"]),
            game_seed=int(data["game_seed"]),
            origin=str(data["origin"]),
            created_at=float(data["at"]),
            bot=None if data["bot"] is None else BotSeat.from_json_dict(data["bot"]),
        )
        if game.bot is not None:
            game.pairs[game.bot.side] = game.bot.pair
        self.games[game.game_id] = game
        self.games_created += 1
        taken = {(u.lower(), s) for u, s in ((seat[0], seat[1]) for seat in seats)}
        self.queue = [
            (u, s) for u, s in self.queue if (u.lower(), s) not in taken
        ]
        for seat_user, seat_slot in seats:
            if seat_user != BOT_NAME:
                self.accounts[seat_user.lower()].slots[seat_slot] = game.game_id

    def _apply_pair_selected(self, data: dict) -> None:
        game = self.games[str(data["game_id"])]
        side = int(data["side"])
        game.pairs[side] = _pair_from_values(data["pair"])
        if data["first_mover"] is not None:
            game.first_mover = int(data["first_mover"])
            config = self._config_of(game)
            game.state = initial_state(
                game.pairs[0], game.pairs[1], game.first_mover, config
            )
            game.phase = PHASE_PLAYING

    def _apply_move_applied(self, data: dict) -> None:
        game = self.games[str(data["game_id"])]
        config = self._config_of(game)
        seq = int(data["seq"])
        move = decode_move(data["move"])
        hits = tuple(bool(h) for h in data["hits"])
        succ, events = replay_transition(game.state, move, config, hits)
        entry = MoveEntry(
            index=seq,
            side=int(data["side"]),
            actor=_actor_name(game.state, move),
            move=move,
            hits=hits,
            events=_events_dict(events),
            state_after=succ,
            at=float(data["at"]),
        )
        game.moves.append(entry)
        game.state = succ
        if data["cost"] is not None:
            game.costs[seq] = float(data["cost"])
        won_by = winner(succ)
        if won_by is not None:
            reason = END_FORFEIT if succ.forfeited is not None else END_WIN
            self._finish_game(game, won_by, reason, float(data["at"]))
        elif len(game.moves) >= self.move_cap:
            self._finish_game(game, None, END_CAP, float(data["at"]))
        username = str(data["username"])
        if username != BOT_NAME:
            # the stored response is what idempotent retries get back
            response = {
                "seq": seq,
                "hits": list(hits),
                "cost": data["cost"],
                "game": self._view(game, username),
            }
            game.responses[seq] = (_canon(data["move"]), response, 200)

    def _apply_game_conceded(self, data: dict) -> None:
        game = self.games[str(data["game_id"])]
        side = int(data["side"])
        at = float(data["at"])
        succ = concede(game.state, side)
        entry = MoveEntry(
            index=game.next_seq,
            side=side,
            actor=None,
            move=FORFEIT,
            hits=(),
            events=_events_dict(BranchEvents()),
            state_after=succ,
            at=at,
        )
        game.moves.append(entry)
        game.state = succ
        self._finish_game(game, 1 - side, END_FORFEIT, at)

    def _apply_season_changed(self, data: dict) -> None:
        config = validate_config(data["config"])
        self._register_config(config)
        self.active_hash = config.config_hash()

    def _finish_game(
        self, game: ServiceGame, won_by: int | None, reason: str, at: float
    ) -> None:
        game.phase = PHASE_FINISHED
        game.winner = won_by
        game.end_reason = reason
        game.ended_at = at
        for seat_user, seat_slot in game.seats:
            if seat_user != BOT_NAME:
                self.accounts[seat_user.lower()].slots[seat_slot] = None
        self._bots.pop(game.game_id, None)
        self._rolls.pop(game.game_id, None)
        # practice and capped games never move ratings, tallies, or medals
        if game.bot is None and won_by is not None:
            self._settle(game, won_by)
        if not self._replaying and self._games_sink is not None:
            self._games_sink.append(game.record().to_json_dict())

    def _settle(self, game: ServiceGame, won_by: int) -> None:
        config = self._config_of(game)
        win_acct = self.accounts[game.users[won_by].lower()]
        lose_acct = self.accounts[game.users[1 - won_by].lower()]
        for side in (0, 1):
            acct = self.accounts[game.users[side].lower()]
            acct.games_played += 1
            for c in game.pairs[side]:
                acct.char_played[c] = acct.char_played.get(c, 0) + 1
        win_acct.games_won += 1
        for c in game.pairs[won_by]:
            win_acct.char_won[c] = win_acct.char_won.get(c, 0) + 1
        final = game.state.sides[won_by]
        if all(ch.hp == config.health(ch.id) for ch in final):
            win_acct.flawless_wins += 1
        if win_acct.username not in lose_acct.losses_to:
            lose_acct.losses_to.append(win_acct.username)
        season = game.season_id
        new_w, new_l = elo_update(win_acct.skill(season), lose_acct.skill(season))
        win_acct.skill_by_season[season] = new_w
        lose_acct.skill_by_season[season] = new_l
        for acct in (win_acct, lose_acct):
            acct.medals = earned_medals(
                acct.games_played,
                acct.games_won,
                {c for c, n in acct.char_won.items() if n > 0},
                acct.flawless_wins,
                self.medal_book,
            )

    # -- queries ----------------------------------------------------------

    def _view(self, game: ServiceGame, username: str) -> dict:
        side = game.side_of(username)
        selecting = game.phase == PHASE_SELECTING
        pairs_out = []
        for i in (0, 1):
            pair = game.pairs[i]
            if pair is None or (selecting and i != side):
                pairs_out.append(None)
            else:
                pairs_out.append(_pair_values(pair))
        your_turn = (
            game.phase == PHASE_PLAYING and game.state.active_side == side
        )
        legal = []
        if your_turn:
            config = self._config_of(game)
            legal = [encode_move(m) for m in legal_moves(game.state, config)]
        return {
            "game_id": game.game_id,
            "phase": game.phase,
            "season_id": game.season_id,
            "config_hash": game.config_hash,
            "origin": game.origin,
            "users": list(game.users),
            "your_side": side,
            "bot": None
            if game.bot is None
            else {"side": game.bot.side, "kind": game.bot.spec.kind, "coach": game.bot.coach},
            "pairs": pairs_out,
            "opponent_chosen": game.pairs[1 - side] is not None,
            "first_mover": game.first_mover,
            "state": None if game.state is None else encode_state(game.state),
            "next_seq": game.next_seq,
            "your_turn": your_turn,
            "legal_moves": legal,
            "moves": [
                {
                    "index": m.index,
                    "side": m.side,
                    "actor": m.actor,
                    "move": encode_move(m.move),
                    "hits": list(m.hits),
                    "events": m.events,
                    "at": m.at,
                    "cost": game.costs.get(m.index),
                }
                for m in game.moves
            ],
            "winner": game.winner,
            "end_reason": game.end_reason,
            "created_at": game.created_at,
            "ended_at": game.ended_at,
        }

    def get_game(self, username: str, game_id: str) -> dict:
        with self._lock:
            acct = self._account(username)
            game = self._game_for(acct.username, game_id)
            return self._view(game, acct.username)

    def get_record(self, username: str, game_id: str) -> dict:
        with self._lock:
            acct = self._account(username)
            game = self._game_for(acct.username, game_id)
            if game.phase != PHASE_FINISHED:
                raise ApiError(409, "NotFinished", "the game is still running")
            return game.record().to_json_dict()

    def get_home(self, username: str) -> dict:
        with self._lock:
            acct = self._account(username)
            season = self.config.season_id
            slots = []
            for i in range(N_SLOTS):
                held = acct.slots[i]
                if held is None:
                    slots.append({"slot": i, "empty": True})
                elif held == QUEUED:
                    slots.append({"slot": i, "empty": False, "queued": True})
                else:
                    game = self.games[held]
                    side = game.side_of(acct.username)
                    slots.append(
                        {
                            "slot": i,
                            "empty": False,
                            "game_id": held,
                            "phase": game.phase,
                            "opponent": game.users[1 - side],
                            "your_turn": game.phase == PHASE_PLAYING
                            and game.state.active_side == side,
                            "needs_pair": game.phase == PHASE_SELECTING
                            and game.pairs[side] is None,
                        }
                    )
            return {
                "username": acct.username,
                "season_id": season,
                "skill": acct.skill(season),
                "games_played": acct.games_played,
                "games_won": acct.games_won,
                "medals": list(acct.medals),
                "slots": slots,
            }

    def leaderboard(self) -> dict:
        with self._lock:
            season = self.config.season_id
            ordered = sorted(
                self.accounts.values(),
                key=lambda a: (-a.skill(season), a.created_at, a.username.lower()),
            )
            return {
                "season_id": season,
                "rows": [
                    {
                        "rank": n + 1,
                        "username": a.username,
                        "skill": a.skill(season),
                        "games_played": a.games_played,
                        "games_won": a.games_won,
                        "medals": len(a.medals),
                    }
                    for n, a in enumerate(ordered)
                ],
            }

    def profile(self, username: str) -> dict:
        with self._lock:
            acct = self._account(username)
            season = self.config.season_id
            return {
                "username": acct.username,
                "created_at": acct.created_at,
                "season_id": season,
                "skill": acct.skill(season),
                "skill_by_season": dict(acct.skill_by_season),
                "games_played": acct.games_played,
                "games_won": acct.games_won,
                "characters": {
                    c.value: {
                        "played": acct.char_played.get(c, 0),
                        "won": acct.char_won.get(c, 0),
                    }
                    for c in CHARACTERS
                },
                "medals": list(acct.medals),
                "losses_to": list(acct.losses_to),
                "flawless_wins": acct.flawless_wins,
            }

    def get_config_info(self) -> dict:
        with self._lock:
            return {
                "season_id": self.config.season_id,
                "config_hash": self.active_hash,
                "config": self.config.to_json_dict(),
                "move_cap": self.move_cap,
                "characters": [c.value for c in CHARACTERS],
            }

    def stats(self) -> dict:
        with self._lock:
            return {
                "accounts": len(self.accounts),
                "games": len(self.games),
                "queue_length": len(self.queue),
                "events": self.event_seq,
                "season_id": self.config.season_id,
            }

    def close(self) -> None:
        with self._lock:
            if self.log is not None:
                self.write_snapshot()
                self.log.close()
            if self._games_sink is not None:
                self._games_sink.close()
