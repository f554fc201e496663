"""Solver validation against independent brute-force oracles.

The oracles in tests/oracle.py rebuild reachability and values through
the pure-Python rules API with dict bookkeeping, sharing nothing with
the array kernel, so agreement here checks the whole pipeline.
"""

import numpy as np
import pytest

from conftest import (
    HEALER_ROGUE_VS_BARBARIAN_GUNNER,
    KNIGHT_WIZARD_VS_ARCHER_MONK,
    HEALER_MONK_MIRROR,
    toy_config_a,
    toy_config_b,
    toy_config_c,
)
from oracle import game_tree_values, reachable_states, strip_clock

from rpglite import rules
from rpglite.config import CharacterId, uniform_config
from rpglite.errors import (
    IncompletePolicyError,
    StateBudgetExceeded,
    TerminalStateError,
)
from rpglite.rng import Rng
from rpglite.solver import (
    Matchup,
    Policy,
    all_pairs,
    best_response,
    decision_states,
    enumerate_states,
    evaluate,
    pair_from_label,
    pair_label,
    q_values,
    solve_minimax,
)
from rpglite.state import FORFEIT, SKIP, MoveKind


ORACLE_CASES = [
    (KNIGHT_WIZARD_VS_ARCHER_MONK, toy_config_a()),
    (KNIGHT_WIZARD_VS_ARCHER_MONK, toy_config_c()),
    (HEALER_ROGUE_VS_BARBARIAN_GUNNER, toy_config_a()),
    (HEALER_ROGUE_VS_BARBARIAN_GUNNER, toy_config_c()),
    (KNIGHT_WIZARD_VS_ARCHER_MONK, toy_config_b()),
]


def _space(matchup, config):
    return enumerate_states(Matchup.of(*matchup), config)


def det_policy(space, side, pick):
    """Deterministic policy choosing pick(idx, n_moves) at each decision
    state of the given side."""
    det = np.full(space.n_states, -1, np.int32)
    counts = space.pair_counts()
    for idx in decision_states(space, side):
        det[idx] = pick(int(idx), int(counts[idx]))
    return Policy(side=side, det_moves=det)


def always_skip(space, side):
    # Skip sorts last in the kernel move list; chain states offer only
    # continuation targets, where the last entry is as good as any
    return det_policy(space, side, lambda idx, n: n - 1)


def first_attack(space, side):
    return det_policy(space, side, lambda idx, n: 0)


def test_pair_helpers_round_trip():
    pairs = all_pairs()
    assert len(pairs) == 28
    assert len({pair_label(p) for p in pairs}) == 28
    for p in pairs:
        assert pair_from_label(pair_label(p)) == p


@pytest.mark.parametrize("matchup,config", ORACLE_CASES[:4])
def test_state_space_matches_brute_force_closure(matchup, config):
    space = _space(matchup, config)
    oracle = reachable_states(matchup[0], matchup[1], config)
    assert space.n_states == len(oracle)
    for state in oracle:
        idx = space.index_of(state)
        assert strip_clock(space.state_at(idx)) == strip_clock(state)


@pytest.mark.parametrize("matchup,config", ORACLE_CASES)
def test_minimax_values_match_game_tree_oracle(matchup, config):
    space = _space(matchup, config)
    sol = solve_minimax(space)
    oracle = game_tree_values(matchup[0], matchup[1], config, side=0)
    assert len(oracle) == space.n_states
    worst = max(
        abs(sol.values.values[space.index_of(s)] - v) for s, v in oracle.items()
    )
    assert worst < 1e-6


def test_minimax_side1_matches_oracle():
    matchup, config = KNIGHT_WIZARD_VS_ARCHER_MONK, toy_config_a()
    space = _space(matchup, config)
    sol = solve_minimax(space, side=1)
    oracle = game_tree_values(matchup[0], matchup[1], config, side=1)
    worst = max(
        abs(sol.values.values[space.index_of(s)] - v) for s, v in oracle.items()
    )
    assert worst < 1e-6


def test_mirror_matchup_is_fair(cfg_season1):
    space = _space(HEALER_MONK_MIRROR, cfg_season1)
    sol = solve_minimax(space)
    assert abs(sol.coin_flip_value - 0.5) < 1e-7


def test_lethal_uniform_config_first_mover_wins():
    # health 2, damage 2, accuracy 1: every attack kills, and with no
    # multi-target characters each turn removes exactly one enemy, so
    # whoever moves first trades down to a win with certainty
    config = uniform_config(health=2, accuracy=1.0, damage=2)
    for matchup in (
        ((CharacterId.KNIGHT, CharacterId.WIZARD), (CharacterId.ROGUE, CharacterId.BARBARIAN)),
        HEALER_ROGUE_VS_BARBARIAN_GUNNER,
    ):
        space = _space(matchup, config)
        sol = solve_minimax(space)
        assert sol.values.values[space.initial_index(0)] == 1.0
        assert sol.values.values[space.initial_index(1)] == 0.0
        assert sol.coin_flip_value == 0.5


def test_lethal_uniform_config_sweeper_always_wins():
    # same config, but the Archer (both targets at once) and the Monk
    # (kill chains into a fresh target) can each clear a full pair in
    # one turn; the single-kill side loses even when it moves first
    config = uniform_config(health=2, accuracy=1.0, damage=2)
    space = _space(KNIGHT_WIZARD_VS_ARCHER_MONK, config)
    sol = solve_minimax(space)
    assert sol.values.values[space.initial_index(0)] == 0.0
    assert sol.values.values[space.initial_index(1)] == 0.0
    assert sol.coin_flip_value == 0.0


def test_best_response_to_always_skip_wins(toy_a):
    space = _space(KNIGHT_WIZARD_VS_ARCHER_MONK, toy_a)
    br, vv = best_response(space, always_skip(space, 1))
    assert br.side == 0 and vv.side == 0
    assert vv.values[space.initial_index(0)] > 1.0 - 1e-6
    assert vv.values[space.initial_index(1)] > 1.0 - 1e-6


def test_best_response_to_minimax_recovers_value(toy_c):
    space = _space(HEALER_ROGUE_VS_BARBARIAN_GUNNER, toy_c)
    sol = solve_minimax(space)
    _, vv = best_response(space, sol.policies[1])
    for fm in (0, 1):
        idx = space.initial_index(fm)
        assert abs(vv.values[idx] - sol.values.values[idx]) < 1e-6


def test_best_response_to_uniform_beats_minimax_value(toy_a):
    space = _space(HEALER_ROGUE_VS_BARBARIAN_GUNNER, toy_a)
    sol = solve_minimax(space)
    mix = np.zeros(space.n_pairs, np.float64)
    starts = space.pair_start
    for idx in decision_states(space, 1):
        lo, hi = int(starts[idx]), int(starts[idx + 1])
        mix[lo:hi] = 1.0 / (hi - lo)
    _, vv = best_response(space, Policy(side=1, mix=mix))
    for fm in (0, 1):
        idx = space.initial_index(fm)
        assert vv.values[idx] >= sol.values.values[idx] - 1e-7


def test_evaluate_both_skip_never_ends(toy_a):
    space = _space(KNIGHT_WIZARD_VS_ARCHER_MONK, toy_a)
    ev = evaluate(space, always_skip(space, 0), always_skip(space, 1))
    assert ev.p0 == 0.0 and ev.p1 == 0.0


def test_evaluate_optimal_policies_recover_value(toy_c):
    space = _space(KNIGHT_WIZARD_VS_ARCHER_MONK, toy_c)
    sol = solve_minimax(space)
    ev = evaluate(space, sol.policies[0], sol.policies[1])
    assert abs(ev.p0 - sol.coin_flip_value) < 1e-6
    assert abs(ev.p0 + ev.p1 - 1.0) < 1e-6
    for fm in (0, 1):
        idx = space.initial_index(fm)
        assert abs(ev.per_first_mover[fm][0] - sol.values.values[idx]) < 1e-6


def test_evaluate_matches_monte_carlo(toy_a):
    space = _space(KNIGHT_WIZARD_VS_ARCHER_MONK, toy_a)
    pol0 = first_attack(space, 0)
    pol1 = det_policy(space, 1, lambda idx, n: max(0, n - 2))
    ev = evaluate(space, pol0, pol1)

    rng = Rng(20260816)
    games = 10000
    wins0 = 0
    for g in range(games):
        idx = space.initial_index(g % 2)
        for _ in range(500):
            term = int(space.terminal[idx])
            if term >= 0:
                wins0 += term == 0
                break
            pol = pol0 if space.active[idx] == 0 else pol1
            move = pol.move_at(space, idx)
            succ, _ = rules.sample_transition(space.state_at(idx), move, toy_a, rng)
            idx = space.index_of(succ)
        else:
            pytest.fail("game failed to terminate under attacking policies")
    p_hat = wins0 / games
    sigma = (ev.p0 * (1.0 - ev.p0) / games) ** 0.5
    assert abs(p_hat - ev.p0) < 3.0 * sigma + 1e-9


def test_q_values_bellman_consistency(toy_c):
    space = _space(HEALER_ROGUE_VS_BARBARIAN_GUNNER, toy_c)
    sol = solve_minimax(space)
    v = sol.values.values
    nonterminal = np.nonzero(space.terminal < 0)[0]
    for idx in nonterminal[:: max(1, len(nonterminal) // 200)]:
        qs = q_values(space, sol.values, int(idx))
        assert list(qs.keys()) == space.moves_at(int(idx))
        extremal = max(qs.values()) if space.active[idx] == 0 else min(qs.values())
        assert abs(v[idx] - extremal) < 1e-6


def test_q_values_forfeit_and_terminal(toy_a):
    space = _space(KNIGHT_WIZARD_VS_ARCHER_MONK, toy_a)
    sol = solve_minimax(space)
    i0 = space.initial_index(0)
    qs = q_values(space, sol.values, i0, include_forfeit=True)
    assert qs[FORFEIT] == 0.0
    i1 = space.initial_index(1)
    qs = q_values(space, sol.values, i1, include_forfeit=True)
    assert qs[FORFEIT] == 1.0
    terminal = int(np.nonzero(space.terminal >= 0)[0][0])
    with pytest.raises(TerminalStateError):
        q_values(space, sol.values, terminal)


def test_solver_is_deterministic(toy_b):
    matchup = Matchup.of(*KNIGHT_WIZARD_VS_ARCHER_MONK)
    space1 = enumerate_states(matchup, toy_b)
    space2 = enumerate_states(matchup, toy_b)
    assert space1.codes.tobytes() == space2.codes.tobytes()
    assert space1.branch_prob.tobytes() == space2.branch_prob.tobytes()
    sol1 = solve_minimax(space1)
    sol2 = solve_minimax(space2)
    assert sol1.values.values.tobytes() == sol2.values.values.tobytes()
    assert sol1.policies[0].det_moves.tobytes() == sol2.policies[0].det_moves.tobytes()
    assert sol1.values.iterations == sol2.values.iterations


def test_state_budget_enforced(toy_a):
    with pytest.raises(StateBudgetExceeded) as exc:
        enumerate_states(Matchup.of(*KNIGHT_WIZARD_VS_ARCHER_MONK), toy_a, budget=10)
    assert exc.value.budget == 10


def test_incomplete_policies_rejected(toy_a):
    space = _space(KNIGHT_WIZARD_VS_ARCHER_MONK, toy_a)
    hole = Policy(side=1, det_moves=np.full(space.n_states, -1, np.int32))
    with pytest.raises(IncompletePolicyError):
        best_response(space, hole)
    with pytest.raises(IncompletePolicyError):
        evaluate(space, always_skip(space, 0), hole)
    underweight = Policy(side=1, mix=np.zeros(space.n_pairs, np.float64))
    with pytest.raises(IncompletePolicyError):
        best_response(space, underweight)


def test_index_ignores_turn_count(toy_a):
    space = _space(KNIGHT_WIZARD_VS_ARCHER_MONK, toy_a)
    state = space.state_at(space.initial_index(0))
    aged = type(state)(
        sides=state.sides,
        active_side=state.active_side,
        chain=state.chain,
        turn_count=17,
    )
    assert space.index_of(aged) == space.initial_index(0)


def test_foreign_states_rejected(toy_a):
    space = _space(KNIGHT_WIZARD_VS_ARCHER_MONK, toy_a)
    other = rules.initial_state(
        (CharacterId.HEALER, CharacterId.ROGUE),
        (CharacterId.BARBARIAN, CharacterId.GUNNER),
        0,
        toy_a,
    )
    with pytest.raises(ValueError):
        space.encode_state(other)
    skipped = rules.initial_state(*KNIGHT_WIZARD_VS_ARCHER_MONK, 0, toy_a)
    gone = type(skipped)(
        sides=skipped.sides,
        active_side=skipped.active_side,
        forfeited=1,
    )
    with pytest.raises(ValueError):
        space.encode_state(gone)
