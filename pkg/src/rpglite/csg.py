"""Chained strategy generation: iterated best responses against an
evolving metagame.

The loop models how a player population shifts once optimal play
spreads: start from a population of uniform-random players, repeatedly
synthesize the best response to the current (aggregated) population,
and fold it back in.  Pair picks are simultaneous and hidden, so the
responder faces a mixture over opponent pairs; in-game opponent play is
a prior-weighted behavioral average of the members (no within-game
belief updating about which member is across the table).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import CHARACTERS, Config
from .context import WorkContext
from .errors import EmptyMetagameError
from .solver import (
    DEFAULT_TOL,
    Matchup,
    Policy,
    StateSpace,
    all_pairs,
    best_response,
    decision_states,
    evaluate,
    pair_label,
    solve_minimax,
    sorted_pair,
)

PAIRS = all_pairs()
PAIR_INDEX = {p: i for i, p in enumerate(PAIRS)}
N_PAIRS = len(PAIRS)
ARGMAX_TOL = 1e-9

# pair index -> per-character membership weight (each pick is half a pair)
_PAIR_CHARS = np.zeros((N_PAIRS, len(CHARACTERS)), np.float64)
for _pi, _pair in enumerate(PAIRS):
    for _c in _pair:
        _PAIR_CHARS[_pi, CHARACTERS.index(_c)] = 0.5


def canonical_matchup(own, other) -> tuple[Matchup, int]:
    """Canonical space for an unordered matchup plus own's side in it."""
    own = sorted_pair(*own)
    other = sorted_pair(*other)
    if PAIR_INDEX[own] <= PAIR_INDEX[other]:
        return Matchup.of(own, other), 0
    return Matchup.of(other, own), 1


def uniform_play_mix(space: StateSpace, side: int) -> np.ndarray:
    """Uniform weight over attack moves, Skip only when forced.

    Chain states offer continuation targets only, so the rule reduces
    to a uniform choice there.
    """
    mix = np.zeros(space.n_pairs, np.float64)
    starts = space.pair_start
    chained = ((space.codes >> 29) & 0x3) != 0
    for idx in decision_states(space, side):
        lo, hi = int(starts[idx]), int(starts[idx + 1])
        if hi - lo > 1 and not chained[idx]:
            mix[lo : hi - 1] = 1.0 / (hi - lo - 1)
        else:
            mix[lo:hi] = 1.0 / (hi - lo)
    return mix


def _swap_codes(codes: np.ndarray) -> np.ndarray:
    hp0 = codes & 0xFFF
    hp1 = (codes >> 12) & 0xFFF
    stun0 = (codes >> 24) & 0x3
    stun1 = (codes >> 26) & 0x3
    active = (codes >> 28) & 0x1
    chain = (codes >> 29) & 0x3
    return (
        hp1 | (hp0 << 12) | (stun1 << 24) | (stun0 << 26)
        | ((1 - active) << 28) | (chain << 29)
    )


def _mirror_permutation(space: StateSpace) -> np.ndarray:
    """Index permutation pairing each state with its side-swapped twin.

    Valid on mirror matchups (both sides play the same pair), where the
    reachable set is closed under the swap and twin states expose
    identical move lists.
    """
    swapped = _swap_codes(space.codes)
    perm = np.searchsorted(space.codes, swapped)
    if not np.array_equal(space.codes[perm], swapped):
        raise RuntimeError("state space is not closed under side swap")
    return perm


def flip_policy_side(space: StateSpace, policy: Policy, side: int) -> Policy:
    """Re-express a mirror-matchup policy for the other side."""
    if space.matchup.pair0 != space.matchup.pair1:
        raise ValueError("side flip is only defined on mirror matchups")
    if policy.side == side:
        return policy
    perm = _mirror_permutation(space)
    if policy.deterministic:
        return Policy(side=side, det_moves=policy.det_moves[perm])
    counts = space.pair_counts()
    state_of_pair = np.repeat(np.arange(space.n_states), counts)
    intra = np.arange(space.n_pairs) - space.pair_start[state_of_pair]
    src = space.pair_start[perm[state_of_pair]] + intra
    return Policy(side=side, mix=policy.mix[src])


@dataclass(frozen=True)
class Strategy:
    """One metagame member: a pair-selection distribution plus play.

    ``plays`` maps (own pair label, opponent pair label) to a Policy on
    the canonical space for that matchup; ``None`` marks the
    uniform-random strategy, whose play is materialized on demand.
    """

    label: str
    pair_choice: np.ndarray
    plays: dict[tuple[str, str], Policy] | None = None

    def play(self, space: StateSpace, own, other, side: int) -> Policy:
        """This strategy's policy for playing ``own`` against ``other``,
        expressed on ``space`` for the given side."""
        if self.plays is None:
            return Policy(side=side, mix=uniform_play_mix(space, side))
        pol = self.plays[(pair_label(sorted_pair(*own)), pair_label(sorted_pair(*other)))]
        if pol.side == side:
            return pol
        return flip_policy_side(space, pol, side)

    def char_frequencies(self) -> np.ndarray:
        return self.pair_choice @ _PAIR_CHARS


def uniform_strategy() -> Strategy:
    return Strategy("seed", np.full(N_PAIRS, 1.0 / N_PAIRS), None)


def minimax_strategy(
    config: Config, tol: float = DEFAULT_TOL, context: WorkContext | None = None
) -> Strategy:
    """Uniform pair choice with per-matchup minimax-optimal play."""
    context = context or WorkContext()
    plays: dict[tuple[str, str], Policy] = {}
    for p in PAIRS:
        for q in PAIRS:
            matchup, own_side = canonical_matchup(p, q)
            space = context.space(matchup, config)
            key = ("minimax-pol", config.config_hash(), matchup.key(), own_side, tol)
            pol = context.memo.get(key)
            if pol is None:
                pol = solve_minimax(space, tol, side=own_side).policies[own_side]
                context.memo[key] = pol
            plays[(pair_label(p), pair_label(q))] = pol
    return Strategy("minimax", np.full(N_PAIRS, 1.0 / N_PAIRS), plays)


@dataclass
class Metagame:
    """Weighted strategy population (weights positive, normalized)."""

    members: list[tuple[float, Strategy]]
    generation: int = 0


@dataclass
class Aggregate:
    """Metagame folded into one opponent: a pair distribution plus a
    prior-weighted behavioral mixture per matchup."""

    pair_choice: np.ndarray
    members: tuple[tuple[float, Strategy], ...]

    def play(self, space: StateSpace, own, other, side: int) -> Policy:
        """Mixture policy for the population playing ``own`` vs ``other``.

        Members that never pick ``own`` contribute nothing and the
        remaining prior weights are renormalized; when no member picks
        it the mixture falls back to uniform-random play.
        """
        oi = PAIR_INDEX[sorted_pair(*own)]
        defined = [(w, s) for w, s in self.members if s.pair_choice[oi] > 0.0]
        if not defined:
            return Policy(side=side, mix=uniform_play_mix(space, side))
        total = sum(w for w, _ in defined)
        mix = np.zeros(space.n_pairs, np.float64)
        for w, strat in defined:
            mix += (w / total) * strat.play(space, own, other, side).as_mix(space)
        return Policy(side=side, mix=mix)


def aggregate(metagame: Metagame) -> Aggregate:
    if not metagame.members:
        raise EmptyMetagameError("metagame has no members")
    weights = np.array([w for w, _ in metagame.members], np.float64)
    if np.any(weights <= 0.0):
        raise ValueError("metagame weights must be positive")
    weights = weights / weights.sum()
    pair_choice = np.zeros(N_PAIRS, np.float64)
    for w, (_, strat) in zip(weights, metagame.members):
        pair_choice += w * strat.pair_choice
    members = tuple((float(w), s) for w, (_, s) in zip(weights, metagame.members))
    return Aggregate(pair_choice=pair_choice, members=members)


def _respond(
    context: WorkContext,
    config: Config,
    agg: Aggregate,
    own,
    other,
    tol: float,
) -> tuple[Policy, float]:
    """Best response playing ``own`` against the aggregate on ``other``,
    memoized on the exact opponent mixture."""
    matchup, own_side = canonical_matchup(own, other)
    space = context.space(matchup, config)
    opp = agg.play(space, other, own, 1 - own_side)
    mix = opp.as_mix(space)
    digest = hashlib.sha1(mix.tobytes()).hexdigest()
    key = ("br", config.config_hash(), matchup.key(), opp.side, digest, tol)
    hit = context.memo.get(key)
    if hit is not None:
        return hit
    pol, vv = best_response(space, opp, tol)
    value = 0.5 * (
        float(vv.values[space.initial_index(0)])
        + float(vv.values[space.initial_index(1)])
    )
    context.memo[key] = (pol, value)
    return pol, value


def argmax_set(values: np.ndarray, tol: float = ARGMAX_TOL) -> np.ndarray:
    """Indices whose value ties the maximum within tol."""
    vmax = float(np.max(values))
    return np.nonzero(values >= vmax - tol)[0]


_STEP_STATE: dict = {}


def _step_cell(cell: tuple[int, int]) -> float:
    pi, qi = cell
    _, val = _respond(
        _STEP_STATE["context"],
        _STEP_STATE["config"],
        _STEP_STATE["agg"],
        PAIRS[pi],
        PAIRS[qi],
        _STEP_STATE["tol"],
    )
    return val


def csg_step(
    metagame: Metagame,
    config: Config,
    tol: float = DEFAULT_TOL,
    context: WorkContext | None = None,
    jobs: int = 1,
) -> tuple[Strategy, float]:
    """Synthesize the best response to the metagame.

    For each own pair, the response value is the pair-weighted average
    over opponent pairs of the best-response value against the
    aggregated opponent play; the new strategy picks uniformly among
    the argmax pairs and carries complete policies for every opponent
    pair.  Returns the strategy and its value against the metagame.

    ``jobs`` spreads the response solves over forked workers; workers
    ship values back and the parent re-derives the argmax-row policies,
    so the result does not depend on the job count.
    """
    context = context or WorkContext()
    agg = aggregate(metagame)
    values = np.zeros(N_PAIRS, np.float64)
    plays: dict[tuple[int, int], Policy] = {}
    if jobs <= 1:
        for pi, p in enumerate(PAIRS):
            total = 0.0
            for qi, q in enumerate(PAIRS):
                pol, val = _respond(context, config, agg, p, q, tol)
                plays[pi, qi] = pol
                total += float(agg.pair_choice[qi]) * val
            values[pi] = total
        winners = argmax_set(values)
    else:
        import multiprocessing
        from concurrent.futures import ProcessPoolExecutor

        cells = [(pi, qi) for pi in range(N_PAIRS) for qi in range(N_PAIRS)]
        # forked workers read the aggregate out of inherited memory
        _STEP_STATE.update(config=config, agg=agg, tol=tol, context=context)
        try:
            mp = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(max_workers=jobs, mp_context=mp) as pool:
                flat = list(pool.map(_step_cell, cells, chunksize=16))
        finally:
            _STEP_STATE.clear()
        vals = np.array(flat, np.float64).reshape(N_PAIRS, N_PAIRS)
        for pi in range(N_PAIRS):
            total = 0.0
            for qi in range(N_PAIRS):
                total += float(agg.pair_choice[qi]) * float(vals[pi, qi])
            values[pi] = total
        winners = argmax_set(values)
        for pi in winners:
            for qi, q in enumerate(PAIRS):
                pol, _ = _respond(context, config, agg, PAIRS[int(pi)], q, tol)
                plays[int(pi), qi] = pol
    pair_choice = np.zeros(N_PAIRS, np.float64)
    pair_choice[winners] = 1.0 / winners.size
    kept = {
        (pair_label(PAIRS[pi]), pair_label(PAIRS[qi])): plays[pi, qi]
        for pi in winners
        for qi in range(N_PAIRS)
    }
    label = f"step-{metagame.generation + 1}"
    return Strategy(label, pair_choice, kept), float(values.max())


def evaluate_strategy(
    strategy: Strategy,
    metagame: Metagame,
    config: Config,
    tol: float = DEFAULT_TOL,
    context: WorkContext | None = None,
) -> float:
    """Win probability of a strategy against the aggregated metagame."""
    context = context or WorkContext()
    agg = aggregate(metagame)
    total = 0.0
    for pi, p in enumerate(PAIRS):
        pw = float(strategy.pair_choice[pi])
        if pw == 0.0:
            continue
        inner = 0.0
        for qi, q in enumerate(PAIRS):
            qw = float(agg.pair_choice[qi])
            if qw == 0.0:
                continue
            matchup, own_side = canonical_matchup(p, q)
            space = context.space(matchup, config)
            mine = strategy.play(space, p, q, own_side)
            theirs = agg.play(space, q, p, 1 - own_side)
            if own_side == 0:
                ev = evaluate(space, mine, theirs, tol)
                inner += qw * ev.p0
            else:
                ev = evaluate(space, theirs, mine, tol)
                inner += qw * ev.p1
        total += pw * inner
    return total


@dataclass
class CsgIteration:
    index: int
    value: float
    argmax_pairs: list[str]
    pair_choice: np.ndarray
    char_frequencies: np.ndarray


@dataclass
class CSGTrace:
    """Record of one chained-strategy-generation run."""

    config_hash: str
    params: dict
    strategies: list[Strategy]
    iterations: list[CsgIteration]
    stopped_early: bool = False

    def usage_frequencies(self) -> np.ndarray:
        """Per-character pick frequency, argmax sets weighted uniformly
        across iterations; with no iterations the seed's uniform choice
        is reported."""
        if not self.iterations:
            return self.strategies[0].char_frequencies()
        freqs = np.stack([it.char_frequencies for it in self.iterations])
        return freqs.mean(axis=0)

    def to_json_dict(self) -> dict:
        usage = self.usage_frequencies()
        return {
            "kind": "csg-trace",
            "tool": {"name": "rpglite", "version": __version__},
            "config_hash": self.config_hash,
            "params": dict(self.params),
            "stopped_early": self.stopped_early,
            "iterations": [
                {
                    "index": it.index,
                    "value": _round9(it.value),
                    "argmax_pairs": list(it.argmax_pairs),
                    "pair_choice": {
                        pair_label(PAIRS[i]): _round9(float(it.pair_choice[i]))
                        for i in range(N_PAIRS)
                        if it.pair_choice[i] > 0.0
                    },
                    "char_frequencies": {
                        c.value: _round9(float(it.char_frequencies[ci]))
                        for ci, c in enumerate(CHARACTERS)
                    },
                }
                for it in self.iterations
            ],
            "usage_frequencies": {
                c.value: _round9(float(usage[ci]))
                for ci, c in enumerate(CHARACTERS)
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def _round9(x: float) -> float:
    return float(f"{x:.9g}")


def _window_members(members: list[Strategy], window: int | None) -> list[Strategy]:
    if window is None or window >= len(members):
        return list(members)
    if window < 1:
        raise ValueError("window must be at least 1")
    return list(members[-window:])


def run_csg(
    config: Config,
    iterations: int = 10,
    stop_epsilon: float = 0.01,
    window: int | None = None,
    tol: float = DEFAULT_TOL,
    context: WorkContext | None = None,
    jobs: int = 1,
) -> CSGTrace:
    """Iterate csg_step from a uniform-random seed population.

    After each step the new strategy joins the metagame, weighted
    uniformly over the most recent ``window`` members (all members when
    ``window`` is None).  Stops early once a step's value drops to
    0.5 + ``stop_epsilon``, the point where the population is no longer
    exploitable by more than the slack.
    """
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    context = context or WorkContext()
    seed = uniform_strategy()
    strategies = [seed]
    trace_iterations: list[CsgIteration] = []
    stopped = False
    metagame = Metagame([(1.0, seed)], generation=0)
    for index in range(1, iterations + 1):
        strat, value = csg_step(metagame, config, tol, context, jobs=jobs)
        strategies.append(strat)
        trace_iterations.append(
            CsgIteration(
                index=index,
                value=value,
                argmax_pairs=[
                    pair_label(PAIRS[i]) for i in np.nonzero(strat.pair_choice)[0]
                ],
                pair_choice=strat.pair_choice,
                char_frequencies=strat.char_frequencies(),
            )
        )
        recent = _window_members(strategies, window)
        metagame = Metagame(
            [(1.0 / len(recent), s) for s in recent], generation=index
        )
        if value <= 0.5 + stop_epsilon:
            stopped = True
            break
    return CSGTrace(
        config_hash=config.config_hash(),
        params={
            "iterations": iterations,
            "stop_epsilon": stop_epsilon,
            "window": window,
            "tol": tol,
        },
        strategies=strategies,
        iterations=trace_iterations,
        stopped_early=stopped,
    )
