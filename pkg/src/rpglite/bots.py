"""Bot policies for simulated play.

Four kinds: the minimax-optimal policy, epsilon-greedy exploration
around it, softmax over state-action values, and uniform random.  Bots
never forfeit; their action set is every other legal move.  Each bot
draws from its own seed stream, split per game and per side, so a
game's outcome is a pure function of (specs, config, game seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .artifacts import ArtifactStore
from .balance import matchup_matrix
from .config import Config, CharacterId
from .csg import PAIRS
from .rng import Rng
from .rules import legal_moves
from .solver import Matchup, q_values, sorted_pair
from .state import FORFEIT, GameState, Move

BOT_KINDS = ("optimal", "epsilon_greedy", "softmax", "uniform_random")
PAIR_POLICIES = ("fixed", "argmax", "uniform")


@dataclass(frozen=True)
class BotSpec:
    """Recipe for a bot: move policy, pair policy, and seed."""

    kind: str
    epsilon: float = 0.0
    tau: float = 1.0
    pair_policy: str = "uniform"
    pair: tuple[CharacterId, CharacterId] | None = None
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in BOT_KINDS:
            raise ValueError(f"unknown bot kind: {self.kind!r}")
        if self.kind == "epsilon_greedy" and not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.kind == "softmax" and not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.pair_policy not in PAIR_POLICIES:
            raise ValueError(f"unknown pair policy: {self.pair_policy!r}")
        if self.pair_policy == "fixed":
            if self.pair is None:
                raise ValueError("fixed pair policy needs a pair")
            sorted_pair(*self.pair)  # rejects duplicates

    def with_epsilon(self, epsilon: float) -> "BotSpec":
        return replace(self, epsilon=epsilon)

    def to_json_dict(self) -> dict:
        out: dict = {"kind": self.kind, "pair_policy": self.pair_policy, "seed": self.seed}
        if self.kind == "epsilon_greedy":
            out["epsilon"] = self.epsilon
        if self.kind == "softmax":
            out["tau"] = self.tau
        if self.pair is not None:
            out["pair"] = [c.value for c in self.pair]
        return out

    @staticmethod
    def from_json_dict(raw: dict) -> "BotSpec":
        from .config import character_from_name

        pair = raw.get("pair")
        spec = BotSpec(
            kind=str(raw["kind"]),
            epsilon=float(raw.get("epsilon", 0.0)),
            tau=float(raw.get("tau", 1.0)),
            pair_policy=str(raw.get("pair_policy", "uniform")),
            pair=None if pair is None else sorted_pair(
                character_from_name(pair[0]), character_from_name(pair[1])
            ),
            seed=int(raw.get("seed", 0)),
        )
        spec.validate()
        return spec


def _needs_values(kind: str) -> bool:
    return kind in ("optimal", "epsilon_greedy", "softmax")


class BotSession:
    """One bot's view of one game: pair choice plus a move chooser."""

    def __init__(self, bot: "Bot", side: int, rng: Rng):
        self.bot = bot
        self.side = side
        self._pair_rng = rng.derive("pair")
        self._move_rng = rng.derive("moves")
        self._space = None
        self._solution = None

    def pick_pair(self) -> tuple[CharacterId, CharacterId]:
        spec = self.bot.spec
        if spec.pair_policy == "fixed":
            return sorted_pair(*spec.pair)
        if spec.pair_policy == "argmax":
            return PAIRS[self.bot.best_pair_index()]
        return PAIRS[self._pair_rng.randint(len(PAIRS))]

    def bind(self, matchup: Matchup) -> None:
        """Resolve artifacts for the matchup; raises MissingArtifactError
        when the store cannot supply them."""
        if not _needs_values(self.bot.spec.kind):
            return
        store = self.bot.store
        self._space = store.space(self.bot.config, matchup)
        self._solution = store.solution(self.bot.config, matchup, self.side)

    def _candidates(self, state: GameState) -> list[Move]:
        return [m for m in legal_moves(state, self.bot.config) if m != FORFEIT]

    def _optimal_move(self, state: GameState) -> Move:
        idx = self._space.index_of(state)
        return self._solution.policies[self.side].move_at(self._space, idx)

    def choose_move(self, state: GameState) -> Move:
        if state.active_side != self.side:
            raise ValueError("bot asked to move out of turn")
        kind = self.bot.spec.kind
        if kind == "uniform_random":
            return self._move_rng.choice(self._candidates(state))
        if self._solution is None:
            raise ValueError("session not bound to a matchup")
        if kind == "optimal":
            return self._optimal_move(state)
        if kind == "epsilon_greedy":
            if self._move_rng.u01() < self.bot.spec.epsilon:
                return self._move_rng.choice(self._candidates(state))
            return self._optimal_move(state)
        # softmax over Q-values, numerically stable at small tau
        idx = self._space.index_of(state)
        qs = q_values(self._space, self._solution.values, idx)
        moves = list(qs.keys())
        top = max(qs.values())
        weights = [math.exp((qs[m] - top) / self.bot.spec.tau) for m in moves]
        total = sum(weights)
        r = self._move_rng.u01() * total
        acc = 0.0
        for move, w in zip(moves, weights):
            acc += w
            if r < acc:
                return move
        return moves[-1]


class Bot:
    """Playable policy object produced by ``make_bot``."""

    def __init__(self, spec: BotSpec, config: Config, store: ArtifactStore):
        spec.validate()
        self.spec = spec
        self.config = config
        self.store = store

    def best_pair_index(self) -> int:
        """Pair with the best mean minimax value over all opposing pairs
        (the argmax pair policy's target)."""
        key = ("pair-scores", self.config.config_hash(), self.store.tol)
        scores = self.store.context.memo.get(key)
        if scores is None:
            m = matchup_matrix(self.config, tol=self.store.tol, context=self.store.context)
            scores = m.mean(axis=1)
            self.store.context.memo[key] = scores
        return int(np.argmax(scores))

    def session(self, game_seed: int, side: int) -> BotSession:
        rng = Rng(self.spec.seed).derive_indexed("game", game_seed).derive_indexed(
            "side", side
        )
        return BotSession(self, side, rng)


class ScriptedBot:
    """Test and diagnostic bot driven by a move-choosing callable.

    ``chooser(state, rng)`` returns the move; the pair is fixed.
    """

    def __init__(self, chooser, pair: tuple[CharacterId, CharacterId], seed: int = 0):
        self.chooser = chooser
        self.pair = sorted_pair(*pair)
        self.seed = seed
        self.spec = BotSpec(kind="uniform_random", pair_policy="fixed", pair=self.pair, seed=seed)

    def session(self, game_seed: int, side: int) -> "ScriptedSession":
        rng = Rng(self.seed).derive_indexed("game", game_seed).derive_indexed("side", side)
        return ScriptedSession(self, side, rng)


class ScriptedSession:
    def __init__(self, bot: ScriptedBot, side: int, rng: Rng):
        self.bot = bot
        self.side = side
        self._rng = rng

    def pick_pair(self):
        return self.bot.pair

    def bind(self, matchup: Matchup) -> None:
        pass

    def choose_move(self, state: GameState) -> Move:
        return self.bot.chooser(state, self._rng)


def make_bot(spec: BotSpec, config: Config, store: ArtifactStore | None = None) -> Bot:
    """Build a playable bot; value-guided kinds pull artifacts from the
    store (solving on demand unless autosolve is off)."""
    if store is None:
        store = ArtifactStore()
    return Bot(spec, config, store)
