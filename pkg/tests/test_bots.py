from __future__ import annotations

import json

import pytest

from conftest import KNIGHT_WIZARD_VS_ARCHER_MONK, toy_config_a, toy_config_c
from rpglite.artifacts import ArtifactStore
from rpglite.bots import PAIRS, BotSpec, Bot, ScriptedBot, make_bot
from rpglite.errors import MissingArtifactError
from rpglite.rules import initial_state, legal_moves
from rpglite.simulate import simulate_game
from rpglite.solver import Matchup, decision_states, q_values
from rpglite.state import FORFEIT, SKIP, MoveKind


@pytest.fixture(scope="module")
def toy():
    return toy_config_a()


@pytest.fixture(scope="module")
def store():
    return ArtifactStore()


P0, P1 = KNIGHT_WIZARD_VS_ARCHER_MONK


def test_spec_validation_rejects_bad_parameters():
    with pytest.raises(ValueError):
        BotSpec(kind="psychic").validate()
    with pytest.raises(ValueError):
        BotSpec(kind="epsilon_greedy", epsilon=1.5).validate()
    with pytest.raises(ValueError):
        BotSpec(kind="epsilon_greedy", epsilon=-0.1).validate()
    with pytest.raises(ValueError):
        BotSpec(kind="softmax", tau=0.0).validate()
    with pytest.raises(ValueError):
        BotSpec(kind="optimal", pair_policy="best").validate()
    with pytest.raises(ValueError):
        BotSpec(kind="optimal", pair_policy="fixed").validate()
    with pytest.raises(ValueError):
        BotSpec(kind="optimal", pair_policy="fixed", pair=(P0[0], P0[0])).validate()
    BotSpec(kind="epsilon_greedy", epsilon=1.0, pair_policy="fixed", pair=P0).validate()


def test_epsilon_zero_matches_optimal_everywhere(toy, store):
    opt = make_bot(BotSpec(kind="optimal", pair_policy="fixed", pair=P0, seed=3), toy, store)
    eps = make_bot(
        BotSpec(kind="epsilon_greedy", epsilon=0.0, pair_policy="fixed", pair=P0, seed=3),
        toy, store,
    )
    rival = make_bot(
        BotSpec(kind="uniform_random", pair_policy="fixed", pair=P1, seed=4), toy, store
    )
    for seed in (11, 12, 13):
        a = simulate_game(opt, rival, toy, seed).to_json_dict()
        b = simulate_game(eps, rival, toy, seed).to_json_dict()
        assert json.dumps(a) == json.dumps(b)


def test_uniform_random_never_forfeits(toy, store):
    bot = make_bot(
        BotSpec(kind="uniform_random", pair_policy="fixed", pair=P0, seed=5), toy, store
    )
    rival = make_bot(
        BotSpec(kind="uniform_random", pair_policy="fixed", pair=P1, seed=6), toy, store
    )
    for seed in range(30):
        rec = simulate_game(bot, rival, toy, seed)
        assert all(m.move.kind is not MoveKind.FORFEIT for m in rec.moves)
    # the candidate set itself excludes Forfeit
    state = initial_state(P0, P1, 0, toy)
    session = bot.session(0, 0)
    candidates = session._candidates(state)
    assert FORFEIT not in candidates
    assert set(candidates) == set(legal_moves(state, toy)) - {FORFEIT}


def test_exploring_bot_still_plays_legal_moves(toy, store):
    wild = make_bot(
        BotSpec(kind="epsilon_greedy", epsilon=1.0, pair_policy="fixed", pair=P0, seed=7),
        toy, store,
    )
    rival = make_bot(
        BotSpec(kind="uniform_random", pair_policy="fixed", pair=P1, seed=8), toy, store
    )
    rec = simulate_game(wild, rival, toy, 99)
    assert all(m.move.kind is not MoveKind.FORFEIT for m in rec.moves)


def test_softmax_small_tau_picks_unique_argmax():
    cfg = toy_config_c()
    store = ArtifactStore()
    matchup = Matchup.of(P0, P1)
    space = store.space(cfg, matchup)
    sol = store.solution(cfg, matchup, 0)
    bot = make_bot(
        BotSpec(kind="softmax", tau=1e-9, pair_policy="fixed", pair=P0, seed=9), cfg, store
    )
    session = bot.session(1, 0)
    session.bind(matchup)
    checked = 0
    for idx in decision_states(space, 0):
        qs = q_values(space, sol.values, int(idx))
        ranked = sorted(qs.values(), reverse=True)
        if len(ranked) < 2 or ranked[0] - ranked[1] <= 1e-6:
            continue
        move = session.choose_move(space.state_at(int(idx)))
        assert qs[move] == pytest.approx(ranked[0], abs=1e-12)
        checked += 1
        if checked >= 200:
            break
    assert checked > 20


def test_softmax_large_tau_spreads_choices(toy, store):
    bot = make_bot(
        BotSpec(kind="softmax", tau=50.0, pair_policy="fixed", pair=P0, seed=10), toy, store
    )
    matchup = Matchup.of(P0, P1)
    state = initial_state(P0, P1, 0, toy)
    seen = set()
    for game_seed in range(40):
        session = bot.session(game_seed, 0)
        session.bind(matchup)
        seen.add(session.choose_move(state))
    assert len(seen) >= 3


def test_missing_artifact_raised_when_autosolve_off(toy):
    cold = ArtifactStore(autosolve=False)
    bot = make_bot(BotSpec(kind="optimal", pair_policy="fixed", pair=P0, seed=1), toy, cold)
    session = bot.session(0, 0)
    with pytest.raises(MissingArtifactError):
        session.bind(Matchup.of(P0, P1))


def test_uniform_random_needs_no_artifacts(toy):
    cold = ArtifactStore(autosolve=False)
    bot = make_bot(
        BotSpec(kind="uniform_random", pair_policy="fixed", pair=P0, seed=1), toy, cold
    )
    session = bot.session(0, 0)
    session.bind(Matchup.of(P0, P1))
    state = initial_state(P0, P1, 0, toy)
    assert session.choose_move(state) in legal_moves(state, toy)


def test_artifact_disk_round_trip(toy, tmp_path):
    matchup = Matchup.of(P0, P1)
    warm = ArtifactStore(root=tmp_path, autosolve=True)
    solved = warm.solution(toy, matchup, 0)
    assert warm.path_for(toy, matchup, 0).exists()

    cold = ArtifactStore(root=tmp_path, autosolve=False)
    loaded = cold.solution(toy, matchup, 0)
    assert (loaded.values.values == solved.values.values).all()
    assert loaded.coin_flip_value == pytest.approx(solved.coin_flip_value, abs=0)
    # a matchup never solved stays missing
    other = Matchup.of(P0, (P1[0], P0[0]))
    with pytest.raises(MissingArtifactError):
        cold.solution(toy, other, 0)


def test_pair_policies(toy, store):
    fixed = make_bot(BotSpec(kind="uniform_random", pair_policy="fixed", pair=P1, seed=2), toy, store)
    pick = fixed.session(5, 0).pick_pair()
    assert set(pick) == set(P1)
    assert pick in PAIRS

    uniform = make_bot(BotSpec(kind="uniform_random", pair_policy="uniform", seed=3), toy, store)
    picks = {uniform.session(seed, 0).pick_pair() for seed in range(60)}
    assert len(picks) >= 10
    assert all(p in PAIRS for p in picks)
    # same seed, same game: same pick
    assert uniform.session(17, 0).pick_pair() == uniform.session(17, 0).pick_pair()


def test_argmax_pair_is_deterministic(toy, store):
    bot = make_bot(BotSpec(kind="uniform_random", pair_policy="argmax", seed=4), toy, store)
    first = bot.best_pair_index()
    assert bot.session(0, 0).pick_pair() == PAIRS[first]
    assert bot.session(123, 1).pick_pair() == PAIRS[first]
    again = Bot(bot.spec, toy, store)
    assert again.best_pair_index() == first


def test_scripted_bot_follows_script(toy, store):
    skipper = ScriptedBot(lambda state, rng: SKIP, pair=P0, seed=1)
    rival = ScriptedBot(lambda state, rng: SKIP, pair=P1, seed=2)
    rec = simulate_game(skipper, rival, toy, 42, move_cap=20)
    assert [m.move for m in rec.moves] == [SKIP] * 20
