"""Exact solving of a matchup: reachable state space, minimax values,
best responses, policy evaluation and Q-values.

State identity here ignores turn counters: two snapshots that differ
only in how many turns have elapsed behave identically, so the space
stays finite.  Forfeit is excluded from solver action sets (it is a
dominated, immediately losing move); the rest of the package injects
it back where analytics need it.

The first-mover coin flip lives outside the state space: reported
matchup values average the two initial states.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .config import CHAR_INDEX, CHARACTERS, CharacterId, Config
from .errors import (
    IncompletePolicyError,
    StateBudgetExceeded,
    TerminalStateError,
)
from .state import FORFEIT, SKIP, CharacterState, GameState, Move

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_BUDGET = 10**7
ITERATION_CAP = 10**6
MONOTONE_SLACK = -1e-12


def sorted_pair(a: CharacterId, b: CharacterId) -> tuple[CharacterId, CharacterId]:
    if a == b:
        raise ValueError("a pair needs two distinct characters")
    return (a, b) if CHAR_INDEX[a] < CHAR_INDEX[b] else (b, a)


def all_pairs() -> list[tuple[CharacterId, CharacterId]]:
    """The 28 unordered character pairs in canonical order."""
    out = []
    for i, a in enumerate(CHARACTERS):
        for b in CHARACTERS[i + 1 :]:
            out.append((a, b))
    return out


def pair_label(pair: tuple[CharacterId, CharacterId]) -> str:
    return "+".join(c.value.lower() for c in pair)


def pair_from_label(label: str) -> tuple[CharacterId, CharacterId]:
    names = label.split("+")
    if len(names) != 2:
        raise ValueError(f"bad pair label: {label!r}")
    from .config import character_from_name

    return sorted_pair(character_from_name(names[0]), character_from_name(names[1]))


@dataclass(frozen=True)
class Matchup:
    pair0: tuple[CharacterId, CharacterId]
    pair1: tuple[CharacterId, CharacterId]

    @staticmethod
    def of(pair0, pair1) -> "Matchup":
        return Matchup(sorted_pair(*pair0), sorted_pair(*pair1))

    def key(self) -> str:
        return f"{pair_label(self.pair0)}-vs-{pair_label(self.pair1)}"

    def swapped(self) -> "Matchup":
        return Matchup(self.pair1, self.pair0)


def _kernel_params(matchup: Matchup, config: Config):
    chars = list(matchup.pair0) + list(matchup.pair1)
    kindv = np.array([CHAR_INDEX[c] for c in chars], np.int64)
    accv = np.array([config.accuracy(c) for c in chars], np.float64)
    mhpv = np.array([config.health(c) for c in chars], np.int64)
    dmgv = np.array([config.damage(c) for c in chars], np.int64)
    return kindv, accv, mhpv, dmgv


class StateSpace:
    """Dense-indexed reachable states of one matchup plus transition
    tables in flat array form (moves per state, branches per move)."""

    def __init__(
        self,
        matchup: Matchup,
        config: Config,
        codes: np.ndarray,
        pair_start: np.ndarray,
        pair_move: np.ndarray,
        branch_start: np.ndarray,
        branch_succ: np.ndarray,
        branch_prob: np.ndarray,
        terminal: np.ndarray,
        active: np.ndarray,
    ):
        self.matchup = matchup
        self.config = config
        self.codes = codes
        self.pair_start = pair_start
        self.pair_move = pair_move
        self.branch_start = branch_start
        self.branch_succ = branch_succ
        self.branch_prob = branch_prob
        self.terminal = terminal
        self.active = active
        self._index: dict[int, int] | None = None
        kindv, accv, mhpv, dmgv = _kernel_params(matchup, config)
        self._kindv, self._accv, self._mhpv, self._dmgv = kindv, accv, mhpv, dmgv

    @property
    def n_states(self) -> int:
        return int(self.codes.shape[0])

    @property
    def n_pairs(self) -> int:
        return int(self.pair_move.shape[0])

    def initial_index(self, first_mover: int) -> int:
        cfg, m = self.config, self.matchup
        code = _kernel.encode_initial(
            cfg.health(m.pair0[0]),
            cfg.health(m.pair0[1]),
            cfg.health(m.pair1[0]),
            cfg.health(m.pair1[1]),
            first_mover,
        )
        return self.index_of_code(int(code))

    def index_of_code(self, code: int) -> int:
        if self._index is None:
            self._index = {int(c): i for i, c in enumerate(self.codes)}
        return self._index[code]

    def index_of(self, state: GameState) -> int:
        return self.index_of_code(self.encode_state(state))

    def encode_state(self, state: GameState) -> int:
        if state.forfeited is not None:
            raise ValueError("forfeited states are outside solver spaces")
        chars = list(self.matchup.pair0) + list(self.matchup.pair1)
        flat = [state.sides[0][0], state.sides[0][1], state.sides[1][0], state.sides[1][1]]
        for want, have in zip(chars, flat):
            if want != have.id:
                raise ValueError("state characters do not match this matchup")
        code = 0
        for i, c in enumerate(flat):
            code |= (c.hp & 0x3F) << (6 * i)
        for side in (0, 1):
            pair = state.sides[side]
            stun = 0
            if pair[0].stunned:
                stun = 1
            elif pair[1].stunned:
                stun = 2
            code |= stun << (24 + 2 * side)
        code |= state.active_side << 28
        chain = 0 if state.chain is None else state.chain + 1
        code |= chain << 29
        return code

    def state_at(self, idx: int) -> GameState:
        code = int(self.codes[idx])
        chars = list(self.matchup.pair0) + list(self.matchup.pair1)
        sides = []
        for side in (0, 1):
            stun = (code >> (24 + 2 * side)) & 0x3
            pair = tuple(
                CharacterState(
                    chars[2 * side + slot],
                    (code >> (6 * (2 * side + slot))) & 0x3F,
                    stun == slot + 1,
                )
                for slot in (0, 1)
            )
            sides.append(pair)
        chain = (code >> 29) & 0x3
        return GameState(
            sides=tuple(sides),  # type: ignore[arg-type]
            active_side=(code >> 28) & 0x1,
            chain=None if chain == 0 else chain - 1,
            turn_count=0,
        )

    def decode_move(self, move_code: int) -> Move:
        if move_code == _kernel.SKIP_CODE:
            return SKIP
        actor = move_code & 0x1
        nt = (move_code >> 1) & 0x3
        t0 = (move_code >> 3) & 0x1
        t1 = (move_code >> 4) & 0x1
        heal = ((move_code >> 5) & 0x3) - 1
        targets = (t0,) if nt == 1 else (t0, t1)
        return Move.attack(actor, targets, None if heal < 0 else heal)

    def moves_at(self, idx: int) -> list[Move]:
        lo, hi = int(self.pair_start[idx]), int(self.pair_start[idx + 1])
        return [self.decode_move(int(self.pair_move[p])) for p in range(lo, hi)]

    def move_offset(self, idx: int, move: Move) -> int:
        for off, m in enumerate(self.moves_at(idx)):
            if m == move:
                return off
        raise ValueError(f"move {move} not available at state {idx}")

    def pair_counts(self) -> np.ndarray:
        return np.diff(self.pair_start)

    def branch_counts_per_pair(self) -> np.ndarray:
        return np.diff(self.branch_start)


def enumerate_states(
    matchup: Matchup, config: Config, budget: int = DEFAULT_BUDGET
) -> StateSpace:
    """Breadth-first closure from both initial states, indexed in
    ascending canonical code order."""
    kindv, accv, mhpv, dmgv = _kernel_params(matchup, config)
    cfg = config
    init0 = _kernel.encode_initial(
        cfg.health(matchup.pair0[0]),
        cfg.health(matchup.pair0[1]),
        cfg.health(matchup.pair1[0]),
        cfg.health(matchup.pair1[1]),
        0,
    )
    init1 = _kernel.encode_initial(
        cfg.health(matchup.pair0[0]),
        cfg.health(matchup.pair0[1]),
        cfg.health(matchup.pair1[0]),
        cfg.health(matchup.pair1[1]),
        1,
    )
    codes, ok = _kernel.enumerate_space(
        init0, init1, kindv, accv, mhpv, dmgv,
        cfg.heal, cfg.execute_range, cfg.rage_threshold, cfg.rage_damage, cfg.graze,
        budget,
    )
    if not ok:
        raise StateBudgetExceeded(budget)
    tables = _kernel.build_tables(
        codes, kindv, accv, mhpv, dmgv,
        cfg.heal, cfg.execute_range, cfg.rage_threshold, cfg.rage_damage, cfg.graze,
    )
    return StateSpace(matchup, config, codes, *tables)


@dataclass
class ValueVector:
    """Per-state win probability for the designated side."""

    side: int
    values: np.ndarray
    tol: float
    iterations: int
    residual: float
    converged: bool = True


@dataclass
class Policy:
    """Per-state move choice for one side.

    Deterministic policies store a move offset into each decision
    state's canonical move list; behavioral policies store weights per
    (state, move) pair aligned with the space's flat pair array.
    """

    side: int
    det_moves: np.ndarray | None = None
    mix: np.ndarray | None = None

    @property
    def deterministic(self) -> bool:
        return self.det_moves is not None

    def move_at(self, space: StateSpace, idx: int) -> Move:
        if not self.deterministic:
            raise ValueError("behavioral policy has no single move")
        off = int(self.det_moves[idx])
        if off < 0:
            raise IncompletePolicyError(idx)
        return space.decode_move(int(self.pair_move_code(space, idx, off)))

    def pair_move_code(self, space: StateSpace, idx: int, off: int) -> int:
        return int(space.pair_move[int(space.pair_start[idx]) + off])

    def distribution_at(self, space: StateSpace, idx: int) -> list[tuple[Move, float]]:
        lo, hi = int(space.pair_start[idx]), int(space.pair_start[idx + 1])
        if self.deterministic:
            off = int(self.det_moves[idx])
            if off < 0:
                raise IncompletePolicyError(idx)
            return [(space.decode_move(int(space.pair_move[lo + off])), 1.0)]
        out = []
        for p in range(lo, hi):
            w = float(self.mix[p])
            if w > 0.0:
                out.append((space.decode_move(int(space.pair_move[p])), w))
        return out

    def as_mix(self, space: StateSpace) -> np.ndarray:
        """Flat per-pair weights (one-hot for deterministic policies)."""
        if self.mix is not None:
            return self.mix
        mix = np.zeros(space.n_pairs, np.float64)
        own = np.nonzero((self.det_moves >= 0))[0]
        starts = space.pair_start[own] + self.det_moves[own]
        mix[starts] = 1.0
        return mix


def decision_states(space: StateSpace, side: int) -> np.ndarray:
    return np.nonzero((space.terminal < 0) & (space.active == side))[0]


def _check_complete(space: StateSpace, policy: Policy) -> None:
    states = decision_states(space, policy.side)
    if policy.deterministic:
        bad = states[policy.det_moves[states] < 0]
        if bad.size:
            raise IncompletePolicyError(int(bad[0]))
        return
    state_of_pair = np.repeat(np.arange(space.n_states), space.pair_counts())
    sums = np.bincount(state_of_pair, weights=policy.mix, minlength=space.n_states)
    ok = np.abs(sums[states] - 1.0) <= 1e-9
    if not np.all(ok):
        raise IncompletePolicyError(int(states[np.nonzero(~ok)[0][0]]))


def _terminal_values(space: StateSpace, side: int) -> np.ndarray:
    v = np.zeros(space.n_states, np.float64)
    v[space.terminal == side] = 1.0
    return v


def _iterate(space: StateSpace, side: int, tol: float, sweep) -> ValueVector:
    v = _terminal_values(space, side)
    vn = v.copy()
    iterations = 0
    residual = np.inf
    converged = False
    while iterations < ITERATION_CAP:
        residual = float(sweep(v, vn))
        iterations += 1
        drop = float((vn - v).min()) if v.size else 0.0
        if drop < MONOTONE_SLACK:
            raise RuntimeError(
                f"value iteration lost monotonicity (drop {drop:.3e})"
            )
        v, vn = vn, v
        if residual < tol:
            converged = True
            break
    if not converged:
        log.warning(
            "value iteration hit the %d-sweep cap (residual %.3e)",
            ITERATION_CAP,
            residual,
        )
    return ValueVector(side, v, tol, iterations, residual, converged)


@dataclass
class MinimaxSolution:
    values: ValueVector
    policies: tuple[Policy, Policy]
    space: StateSpace = field(repr=False)

    @property
    def coin_flip_value(self) -> float:
        i0 = self.space.initial_index(0)
        i1 = self.space.initial_index(1)
        return 0.5 * (float(self.values.values[i0]) + float(self.values.values[i1]))


def solve_minimax(
    space: StateSpace, tol: float = DEFAULT_TOL, side: int = 0
) -> MinimaxSolution:
    """Game value for ``side`` (win probability under optimal play by
    both) plus the optimal policy pair.

    Value iteration from all zeros (least fixed point); ``side``'s
    decision states take the max over moves, the opponent's take the
    min; deterministic policies break ties by canonical move order.
    """

    def sweep(v, vn):
        return _kernel.minimax_sweep(
            v, vn, space.pair_start, space.branch_start, space.branch_succ,
            space.branch_prob, space.terminal, space.active, side,
        )

    values = _iterate(space, side, tol, sweep)
    pol = []
    for d in (0, 1):
        det = _kernel.extract_policy(
            values.values, space.pair_start, space.branch_start,
            space.branch_succ, space.branch_prob, space.terminal,
            space.active, d, d == side,
        )
        pol.append(Policy(side=d, det_moves=det))
    return MinimaxSolution(values=values, policies=(pol[0], pol[1]), space=space)


def _scaled_probs(space: StateSpace, mix: np.ndarray) -> np.ndarray:
    per_pair = np.repeat(mix, space.branch_counts_per_pair())
    return space.branch_prob * per_pair


def best_response(
    space: StateSpace, opponent: Policy, tol: float = DEFAULT_TOL
) -> tuple[Policy, ValueVector]:
    """Best response against a fixed opponent policy.

    The opponent's states collapse into plain expectations under its
    move distribution; the responder maximizes its own win probability.
    """
    _check_complete(space, opponent)
    responder = 1 - opponent.side
    scaled = _scaled_probs(space, opponent.as_mix(space))

    def sweep(v, vn):
        return _kernel.mdp_sweep(
            v, vn, space.pair_start, space.branch_start, space.branch_succ,
            space.branch_prob, scaled, space.terminal, space.active, responder,
        )

    values = _iterate(space, responder, tol, sweep)
    det = _kernel.extract_policy(
        values.values, space.pair_start, space.branch_start, space.branch_succ,
        space.branch_prob, space.terminal, space.active, responder, True,
    )
    return Policy(side=responder, det_moves=det), values


@dataclass
class Evaluation:
    p0: float
    p1: float
    per_first_mover: tuple[tuple[float, float], tuple[float, float]]
    iterations: int


def evaluate(
    space: StateSpace, policy0: Policy, policy1: Policy, tol: float = DEFAULT_TOL
) -> Evaluation:
    """Win probabilities (p0, p1) with both policies fixed.

    Probabilities average the two first movers (the pre-game coin
    flip); p0 + p1 can fall below 1 when play can stall forever.
    """
    if policy0.side != 0 or policy1.side != 1:
        raise ValueError("evaluate expects side-0 and side-1 policies in order")
    _check_complete(space, policy0)
    _check_complete(space, policy1)

    mix0 = policy0.as_mix(space)
    mix1 = policy1.as_mix(space)
    active_per_pair = np.repeat(space.active, space.pair_counts())
    mix = np.where(active_per_pair == 0, mix0, mix1)
    scaled = _scaled_probs(space, mix)

    results = []
    total_iters = 0
    for side in (0, 1):
        def sweep(v, vn):
            return _kernel.dtmc_sweep(
                v, vn, space.pair_start, space.branch_start, space.branch_succ,
                scaled, space.terminal,
            )

        vv = _iterate(space, side, tol, sweep)
        total_iters += vv.iterations
        i0, i1 = space.initial_index(0), space.initial_index(1)
        results.append(
            (float(vv.values[i0]), float(vv.values[i1]))
        )

    p0 = 0.5 * (results[0][0] + results[0][1])
    p1 = 0.5 * (results[1][0] + results[1][1])
    return Evaluation(
        p0=p0,
        p1=p1,
        per_first_mover=((results[0][0], results[1][0]), (results[0][1], results[1][1])),
        iterations=total_iters,
    )


def q_values(
    space: StateSpace,
    values: ValueVector,
    state_idx: int,
    include_forfeit: bool = False,
) -> dict[Move, float]:
    """Q(s, a) = expected value over the move's branches, in canonical
    move order.  Optionally injects Forfeit (an immediate loss for the
    mover) for analytics."""
    if space.terminal[state_idx] >= 0:
        raise TerminalStateError(f"state {state_idx} is terminal")
    qs = _kernel.q_values_for_state(
        values.values, state_idx, space.pair_start, space.branch_start,
        space.branch_succ, space.branch_prob,
    )
    moves = space.moves_at(state_idx)
    out = {move: float(q) for move, q in zip(moves, qs)}
    if include_forfeit:
        mover = int(space.active[state_idx])
        out[FORFEIT] = 0.0 if mover == values.side else 1.0
    return out
