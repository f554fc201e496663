"""Independent oracles used to validate the solver.

Everything here goes through the pure-Python rules API with dict-based
bookkeeping: no shared code with the solver's array kernel beyond the
rules contract itself.
"""

from __future__ import annotations

from rpglite import rules
from rpglite.config import Config
from rpglite.state import FORFEIT, GameState, MoveKind


def strip_clock(state: GameState) -> GameState:
    """Solver state identity ignores the turn counter."""
    if state.turn_count == 0:
        return state
    return GameState(
        sides=state.sides,
        active_side=state.active_side,
        chain=state.chain,
        turn_count=0,
        forfeited=state.forfeited,
    )


def reachable_states(
    pair0, pair1, config: Config, include_forfeit: bool = False
) -> set[GameState]:
    """Brute-force closure from both initial states."""
    frontier = [
        strip_clock(rules.initial_state(pair0, pair1, fm, config)) for fm in (0, 1)
    ]
    seen = set(frontier)
    while frontier:
        state = frontier.pop()
        if rules.winner(state) is not None:
            continue
        for move in rules.legal_moves(state, config):
            if move.kind is MoveKind.FORFEIT and not include_forfeit:
                continue
            for branch in rules.transition_distribution(state, move, config).branches:
                succ = strip_clock(branch.successor)
                if succ not in seen:
                    seen.add(succ)
                    frontier.append(succ)
    return seen


def game_tree_values(
    pair0, pair1, config: Config, side: int = 0, tol: float = 1e-10
) -> dict[GameState, float]:
    """Exhaustive minimax values by iterated evaluation over the full
    reachable set (memoized expansion; cycles handled by sweeping to a
    fixed point from zero)."""
    states = sorted(
        reachable_states(pair0, pair1, config),
        key=lambda s: (s.active_side, s.chain if s.chain is not None else -1,
                       tuple((c.hp, c.stunned) for p in s.sides for c in p)),
    )
    transitions: dict[GameState, tuple[bool, list[list[tuple[float, GameState]]]]] = {}
    for state in states:
        win = rules.winner(state)
        if win is not None:
            continue
        options = []
        for move in rules.legal_moves(state, config):
            if move.kind is MoveKind.FORFEIT:
                continue
            dist = rules.transition_distribution(state, move, config)
            options.append(
                [(b.probability, strip_clock(b.successor)) for b in dist.branches]
            )
        transitions[state] = (state.active_side == side, options)

    values: dict[GameState, float] = {}
    for state in states:
        win = rules.winner(state)
        values[state] = 0.0 if win is None else (1.0 if win == side else 0.0)

    for _ in range(10**6):
        delta = 0.0
        new_values = dict(values)
        for state, (maximize, options) in transitions.items():
            best = None
            for branches in options:
                q = sum(p * values[succ] for p, succ in branches)
                if best is None or (q > best if maximize else q < best):
                    best = q
            new_values[state] = best
            delta = max(delta, abs(best - values[state]))
        values = new_values
        if delta < tol:
            break
    return values
