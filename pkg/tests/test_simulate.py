from __future__ import annotations

import json
import math
from dataclasses import replace

import pytest

from conftest import (
    HEALER_ROGUE_VS_BARBARIAN_GUNNER,
    KNIGHT_WIZARD_VS_ARCHER_MONK,
    toy_config_a,
)
from rpglite.artifacts import ArtifactStore
from rpglite.bots import BotSpec, ScriptedBot, make_bot
from rpglite.errors import ReplayMismatchError
from rpglite.simulate import GameRecord, replay_game, simulate_game
from rpglite.solver import Matchup, evaluate
from rpglite.state import SKIP, CharacterState

P0, P1 = KNIGHT_WIZARD_VS_ARCHER_MONK


@pytest.fixture(scope="module")
def toy():
    return toy_config_a()


@pytest.fixture(scope="module")
def store():
    return ArtifactStore()


@pytest.fixture(scope="module")
def sample_record(toy, store):
    opt = make_bot(BotSpec(kind="optimal", pair_policy="fixed", pair=P0, seed=1), toy, store)
    uni = make_bot(BotSpec(kind="uniform_random", pair_policy="fixed", pair=P1, seed=2), toy, store)
    return simulate_game(opt, uni, toy, 314, game_id="g1", usernames=("ann", "ben"),
                         season_id="toy-a")


def test_fixed_seed_record_is_byte_identical(toy, store, sample_record):
    opt = make_bot(BotSpec(kind="optimal", pair_policy="fixed", pair=P0, seed=1), toy, store)
    uni = make_bot(BotSpec(kind="uniform_random", pair_policy="fixed", pair=P1, seed=2), toy, store)
    again = simulate_game(opt, uni, toy, 314, game_id="g1", usernames=("ann", "ben"),
                          season_id="toy-a")
    assert json.dumps(again.to_json_dict()) == json.dumps(sample_record.to_json_dict())


def test_record_round_trips_through_json(toy, sample_record):
    raw = json.loads(json.dumps(sample_record.to_json_dict()))
    back = GameRecord.from_json_dict(raw)
    assert json.dumps(back.to_json_dict()) == json.dumps(sample_record.to_json_dict())
    replay_game(back, toy)


def test_replay_reproduces_every_snapshot(toy, sample_record):
    before = replay_game(sample_record, toy)
    assert len(before) == len(sample_record.moves)
    # pre-move states chain into the recorded snapshots
    for i in range(1, len(before)):
        assert before[i] == sample_record.moves[i - 1].state_after


def test_replay_rejects_tampered_snapshot(toy, sample_record):
    rec = GameRecord.from_json_dict(sample_record.to_json_dict())
    entry = rec.moves[1]
    state = entry.state_after
    side0 = list(state.sides[0])
    victim = side0[0]
    bogus_hp = victim.hp + 1 if victim.hp == 0 else victim.hp - 1
    side0[0] = CharacterState(victim.id, bogus_hp, victim.stunned)
    tampered = replace(state, sides=(tuple(side0), state.sides[1]))
    rec.moves[1] = replace(entry, state_after=tampered)
    with pytest.raises(ReplayMismatchError):
        replay_game(rec, toy)


def test_replay_rejects_flipped_roll(toy, sample_record):
    rec = GameRecord.from_json_dict(sample_record.to_json_dict())
    target = next(i for i, m in enumerate(rec.moves) if m.hits)
    entry = rec.moves[target]
    flipped = tuple(not h if i == 0 else h for i, h in enumerate(entry.hits))
    rec.moves[target] = replace(entry, hits=flipped)
    with pytest.raises(ReplayMismatchError):
        replay_game(rec, toy)


def test_replay_rejects_move_after_game_end(toy, sample_record):
    rec = GameRecord.from_json_dict(sample_record.to_json_dict())
    rec.moves.append(rec.moves[-1])
    with pytest.raises(ReplayMismatchError):
        replay_game(rec, toy)


def test_replay_rejects_wrong_config(sample_record):
    from conftest import toy_config_b

    with pytest.raises(ReplayMismatchError):
        replay_game(sample_record, toy_config_b())


def test_replay_rejects_truncated_decided_game(toy, sample_record):
    rec = GameRecord.from_json_dict(sample_record.to_json_dict())
    rec.moves = rec.moves[:-1]
    with pytest.raises(ReplayMismatchError):
        replay_game(rec, toy)


def test_skip_only_bots_reach_the_cap(toy):
    a = ScriptedBot(lambda state, rng: SKIP, pair=P0, seed=1)
    b = ScriptedBot(lambda state, rng: SKIP, pair=P1, seed=2)
    rec = simulate_game(a, b, toy, 7, move_cap=40)
    assert rec.end_reason == "cap"
    assert rec.winner is None
    assert rec.winner_username() is None
    assert not rec.decided
    assert len(rec.moves) == 40
    replay_game(rec, toy)  # capped games still replay


def test_forfeit_ends_with_opponent_win(toy):
    from rpglite.state import FORFEIT

    quitter = ScriptedBot(lambda state, rng: FORFEIT, pair=P0, seed=1)
    rival = ScriptedBot(lambda state, rng: SKIP, pair=P1, seed=2)
    rec = simulate_game(quitter, rival, toy, 5, usernames=("q", "r"))
    assert rec.end_reason == "forfeit"
    last = rec.moves[-1]
    assert last.side == 0  # the quitter concedes on its first turn
    assert rec.winner == 1
    assert rec.winner_username() == "r"
    replay_game(rec, toy)


def test_optimal_play_matches_evaluation_frequency(toy, store):
    """Side-0 win frequency over seeded optimal-vs-optimal games lands
    within 3 sigma of the evaluated win probability."""
    matchup = Matchup.of(P0, P1)
    space = store.space(toy, matchup)
    sol0 = store.solution(toy, matchup, 0)
    sol1 = store.solution(toy, matchup, 1)
    ev = evaluate(space, sol0.policies[0], sol1.policies[1])
    assert ev.p0 + ev.p1 == pytest.approx(1.0, abs=1e-7)

    b0 = make_bot(BotSpec(kind="optimal", pair_policy="fixed", pair=P0, seed=1), toy, store)
    b1 = make_bot(BotSpec(kind="optimal", pair_policy="fixed", pair=P1, seed=2), toy, store)
    n = 2500
    wins0 = 0
    for seed in range(n):
        rec = simulate_game(b0, b1, toy, seed)
        assert rec.decided
        if rec.winner == 0:
            wins0 += 1
    sigma = math.sqrt(ev.p0 * (1.0 - ev.p0) / n)
    assert abs(wins0 / n - ev.p0) <= 3.0 * sigma


def test_first_mover_comes_from_the_seed_coin(toy, store):
    uni0 = make_bot(BotSpec(kind="uniform_random", pair_policy="fixed", pair=P0, seed=3), toy, store)
    uni1 = make_bot(BotSpec(kind="uniform_random", pair_policy="fixed", pair=P1, seed=4), toy, store)
    movers = {simulate_game(uni0, uni1, toy, seed).first_mover for seed in range(12)}
    assert movers == {0, 1}


def test_lethal_config_first_mover_always_wins(store):
    from rpglite.config import uniform_config

    lethal = uniform_config(health=2, accuracy=1.0, damage=2, heal=1, execute_range=1,
                            rage_threshold=1, rage_damage=3, graze=0, season_id="lethal")
    q0, q1 = HEALER_ROGUE_VS_BARBARIAN_GUNNER
    b0 = make_bot(BotSpec(kind="optimal", pair_policy="fixed", pair=q0, seed=1), lethal, store)
    b1 = make_bot(BotSpec(kind="optimal", pair_policy="fixed", pair=q1, seed=2), lethal, store)
    for seed in range(10):
        rec = simulate_game(b0, b1, lethal, seed)
        assert rec.end_reason == "win"
        assert rec.winner == rec.first_mover
