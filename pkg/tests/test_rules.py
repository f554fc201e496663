from __future__ import annotations

import pytest

from conftest import (
    HEALER_ROGUE_VS_BARBARIAN_GUNNER,
    KNIGHT_WIZARD_VS_ARCHER_MONK,
)
from rpglite import rules
from rpglite.config import CharacterId as C
from rpglite.errors import IllegalMoveError
from rpglite.rng import Rng
from rpglite.state import (
    FORFEIT,
    SKIP,
    CharacterState,
    GameState,
    Move,
    MoveKind,
    decode_move,
    decode_state,
    encode_move,
    encode_state,
)


def make_state(side0, side1, active=0, chain=None):
    return GameState(sides=(tuple(side0), tuple(side1)), active_side=active, chain=chain)


def ch(cid, hp, stunned=False):
    return CharacterState(cid, hp, stunned)


class TestInitialState:
    def test_full_hp_side0_active(self, cfg_season1):
        st = rules.initial_state(*KNIGHT_WIZARD_VS_ARCHER_MONK, 0, cfg_season1)
        assert [c.hp for c in st.sides[0]] == [12, 9]
        assert [c.hp for c in st.sides[1]] == [9, 9]
        assert st.active_side == 0 and st.chain is None and st.turn_count == 0
        assert not any(c.stunned for pair in st.sides for c in pair)

    def test_duplicate_character_rejected(self, cfg_season1):
        with pytest.raises(rules.DuplicateCharacterError):
            rules.initial_state((C.KNIGHT, C.KNIGHT), (C.ARCHER, C.MONK), 0, cfg_season1)

    def test_first_mover_1(self, cfg_season1):
        st = rules.initial_state(*KNIGHT_WIZARD_VS_ARCHER_MONK, 1, cfg_season1)
        assert st.active_side == 1


class TestLegalMoves:
    def test_six_moves_for_two_single_target_actors(self, cfg_season1):
        st = rules.initial_state(*KNIGHT_WIZARD_VS_ARCHER_MONK, 0, cfg_season1)
        moves = rules.legal_moves(st, cfg_season1)
        assert len(moves) == 6
        assert moves[0] == Move.attack(0, (0,))
        assert moves[1] == Move.attack(0, (1,))
        assert moves[2] == Move.attack(1, (0,))
        assert moves[3] == Move.attack(1, (1,))
        assert moves[4] == SKIP and moves[5] == FORFEIT

    def test_forced_skip_when_only_living_actor_stunned(self, cfg_season1):
        st = make_state(
            [ch(C.KNIGHT, 5, stunned=True), ch(C.WIZARD, 0)],
            [ch(C.ARCHER, 9), ch(C.MONK, 9)],
        )
        assert rules.legal_moves(st, cfg_season1) == [SKIP, FORFEIT]

    def test_archer_single_targets_before_pair(self, cfg_season1):
        st = rules.initial_state((C.ARCHER, C.GUNNER), (C.KNIGHT, C.WIZARD), 0, cfg_season1)
        archer = [m for m in rules.legal_moves(st, cfg_season1) if m.actor_slot == 0]
        assert [m.targets for m in archer] == [(0,), (1,), (0, 1)]

    def test_archer_one_living_opponent(self, cfg_season1):
        st = make_state(
            [ch(C.ARCHER, 9), ch(C.GUNNER, 10)],
            [ch(C.KNIGHT, 0), ch(C.WIZARD, 3)],
        )
        archer = [m for m in rules.legal_moves(st, cfg_season1) if m.actor_slot == 0]
        assert [m.targets for m in archer] == [(1,)]

    def test_healer_recipients_only_damaged_living(self, cfg_season1):
        st = make_state(
            [ch(C.HEALER, 10), ch(C.ROGUE, 5)],
            [ch(C.BARBARIAN, 11), ch(C.GUNNER, 10)],
        )
        healer = [m for m in rules.legal_moves(st, cfg_season1) if m.actor_slot == 0]
        assert all(m.heal_slot == 1 for m in healer)
        assert [m.targets for m in healer] == [(0,), (1,)]

    def test_healer_no_damaged_ally_plain_attack(self, cfg_season1):
        st = rules.initial_state(*HEALER_ROGUE_VS_BARBARIAN_GUNNER, 0, cfg_season1)
        healer = [m for m in rules.legal_moves(st, cfg_season1) if m.actor_slot == 0]
        assert all(m.heal_slot is None for m in healer)

    def test_healer_self_heal_option(self, cfg_season1):
        st = make_state(
            [ch(C.HEALER, 4), ch(C.ROGUE, 5)],
            [ch(C.BARBARIAN, 11), ch(C.GUNNER, 10)],
        )
        healer = [m for m in rules.legal_moves(st, cfg_season1) if m.actor_slot == 0]
        assert [(m.targets[0], m.heal_slot) for m in healer] == [
            (0, 0), (0, 1), (1, 0), (1, 1),
        ]

    def test_chain_state_returns_only_continuations(self, cfg_season1):
        st = make_state(
            [ch(C.KNIGHT, 12), ch(C.MONK, 9)],
            [ch(C.ARCHER, 7), ch(C.GUNNER, 10)],
            chain=1,
        )
        moves = rules.legal_moves(st, cfg_season1)
        assert moves == [Move.attack(1, (0,)), Move.attack(1, (1,))]

    def test_game_over_error(self, cfg_season1):
        st = make_state(
            [ch(C.KNIGHT, 12), ch(C.WIZARD, 9)],
            [ch(C.ARCHER, 0), ch(C.MONK, 0)],
        )
        with pytest.raises(rules.GameOverError):
            rules.legal_moves(st, cfg_season1)


class TestWinner:
    def test_side1_dead_means_side0_wins(self, cfg_season1):
        st = make_state(
            [ch(C.KNIGHT, 1), ch(C.WIZARD, 0)],
            [ch(C.ARCHER, 0), ch(C.MONK, 0)],
        )
        assert rules.winner(st) == 0

    def test_running_game_has_no_winner(self, cfg_season1):
        st = rules.initial_state(*KNIGHT_WIZARD_VS_ARCHER_MONK, 0, cfg_season1)
        assert rules.winner(st) is None

    def test_forfeit_decides(self, cfg_season1):
        st = rules.initial_state(*KNIGHT_WIZARD_VS_ARCHER_MONK, 0, cfg_season1)
        succ, _ = rules.apply_rolls(st, FORFEIT, cfg_season1, ())
        assert succ.forfeited == 0
        assert rules.winner(succ) == 1


class TestTransitions:
    def test_knight_two_branch_split(self, cfg_season1):
        st = rules.initial_state(*KNIGHT_WIZARD_VS_ARCHER_MONK, 0, cfg_season1)
        dist = rules.transition_distribution(st, Move.attack(0, (0,)), cfg_season1)
        assert [b.probability for b in dist.branches] == [0.85, 1.0 - 0.85]
        hit, miss = dist.branches
        assert hit.successor.sides[1][0].hp == 9 - 3
        assert miss.successor.sides[1][0].hp == 9
        for b in dist.branches:
            assert b.successor.active_side == 1
            assert b.successor.turn_count == st.turn_count + 1

    def test_gunner_graze_on_miss(self, cfg_season1):
        st = rules.initial_state((C.GUNNER, C.KNIGHT), (C.ARCHER, C.MONK), 0, cfg_season1)
        dist = rules.transition_distribution(st, Move.attack(0, (0,)), cfg_season1)
        assert [round(b.probability, 10) for b in dist.branches] == [0.65, 0.35]
        hit, miss = dist.branches
        assert hit.successor.sides[1][0].hp == 9 - 3
        assert miss.successor.sides[1][0].hp == 9 - 1
        assert miss.outcomes[0][1].graze

    def test_archer_pair_four_branches(self, cfg_season1):
        st = rules.initial_state((C.ARCHER, C.KNIGHT), (C.HEALER, C.MONK), 0, cfg_season1)
        dist = rules.transition_distribution(st, Move.attack(0, (0, 1)), cfg_season1)
        probs = [b.probability for b in dist.branches]
        assert probs == pytest.approx([0.5625, 0.1875, 0.1875, 0.0625], abs=1e-15)
        hh = dist.branches[0].successor
        assert hh.sides[1][0].hp == 10 - 2 and hh.sides[1][1].hp == 9 - 2

    def test_rogue_execute_sets_hp_zero(self, cfg_season1):
        st = make_state(
            [ch(C.ROGUE, 8), ch(C.HEALER, 10)],
            [ch(C.BARBARIAN, 3), ch(C.GUNNER, 10)],
        )
        dist = rules.transition_distribution(st, Move.attack(0, (0,)), cfg_season1)
        hit = dist.branches[0]
        assert hit.successor.sides[1][0].hp == 0
        assert hit.outcomes[0][1].execute

    def test_rogue_above_execute_range_normal_damage(self, cfg_season1):
        st = make_state(
            [ch(C.ROGUE, 8), ch(C.HEALER, 10)],
            [ch(C.BARBARIAN, 4), ch(C.GUNNER, 10)],
        )
        dist = rules.transition_distribution(st, Move.attack(0, (0,)), cfg_season1)
        hit = dist.branches[0]
        assert hit.successor.sides[1][0].hp == 1
        assert not hit.outcomes[0][1].execute

    def test_wizard_stun_on_survivor(self, cfg_season1):
        st = rules.initial_state((C.WIZARD, C.KNIGHT), (C.ARCHER, C.MONK), 0, cfg_season1)
        dist = rules.transition_distribution(st, Move.attack(0, (0,)), cfg_season1)
        hit = dist.branches[0]
        assert hit.successor.sides[1][0].stunned
        assert hit.outcomes[0][1].stun_slot == 0

    def test_wizard_kill_leaves_no_stun(self, cfg_season1):
        st = make_state(
            [ch(C.WIZARD, 9), ch(C.KNIGHT, 12)],
            [ch(C.ARCHER, 2), ch(C.MONK, 9)],
        )
        dist = rules.transition_distribution(st, Move.attack(0, (0,)), cfg_season1)
        hit = dist.branches[0]
        assert hit.successor.sides[1][0].hp == 0
        assert not hit.successor.sides[1][0].stunned

    def test_stun_clears_when_suppressed_turn_ends(self, cfg_season1):
        st = make_state(
            [ch(C.KNIGHT, 12), ch(C.WIZARD, 9, stunned=True)],
            [ch(C.ARCHER, 9), ch(C.MONK, 9)],
        )
        for move in (Move.attack(0, (0,)), SKIP):
            dist = rules.transition_distribution(st, move, cfg_season1)
            for b in dist.branches:
                assert not any(c.stunned for c in b.successor.sides[0])

    def test_opponent_stun_persists_through_my_turn(self, cfg_season1):
        st = make_state(
            [ch(C.KNIGHT, 12), ch(C.WIZARD, 9)],
            [ch(C.ARCHER, 9, stunned=True), ch(C.MONK, 9)],
        )
        dist = rules.transition_distribution(st, Move.attack(0, (1,)), cfg_season1)
        for b in dist.branches:
            assert b.successor.sides[1][0].stunned

    def test_monk_hit_chains_miss_passes(self, cfg_season1):
        st = rules.initial_state((C.MONK, C.KNIGHT), (C.ARCHER, C.GUNNER), 0, cfg_season1)
        dist = rules.transition_distribution(st, Move.attack(0, (0,)), cfg_season1)
        hit, miss = dist.branches
        assert hit.successor.active_side == 0
        assert hit.successor.chain == 0
        assert hit.successor.turn_count == st.turn_count
        assert miss.successor.active_side == 1
        assert miss.successor.chain is None

    def test_monk_killing_both_ends_turn(self, cfg_season1):
        st = make_state(
            [ch(C.MONK, 9), ch(C.KNIGHT, 12)],
            [ch(C.ARCHER, 1), ch(C.GUNNER, 0)],
        )
        dist = rules.transition_distribution(st, Move.attack(0, (0,)), cfg_season1)
        hit = dist.branches[0]
        assert rules.winner(hit.successor) == 0
        assert hit.successor.chain is None

    def test_healer_heals_on_hit_only(self, cfg_season1):
        st = make_state(
            [ch(C.HEALER, 10), ch(C.ROGUE, 5)],
            [ch(C.BARBARIAN, 11), ch(C.GUNNER, 10)],
        )
        dist = rules.transition_distribution(
            st, Move.attack(0, (0,), heal_slot=1), cfg_season1
        )
        hit, miss = dist.branches
        assert hit.successor.sides[0][1].hp == 7
        assert hit.outcomes[0][1].heal == (1, 2)
        assert miss.successor.sides[0][1].hp == 5
        assert miss.outcomes[0][1].heal is None

    def test_heal_caps_at_max(self, cfg_season1):
        st = make_state(
            [ch(C.HEALER, 10), ch(C.ROGUE, 7)],
            [ch(C.BARBARIAN, 11), ch(C.GUNNER, 10)],
        )
        dist = rules.transition_distribution(
            st, Move.attack(0, (0,), heal_slot=1), cfg_season1
        )
        hit = dist.branches[0]
        assert hit.successor.sides[0][1].hp == 8
        assert hit.outcomes[0][1].heal == (1, 1)

    def test_barbarian_rage_damage_at_threshold(self, cfg_season1):
        st = make_state(
            [ch(C.BARBARIAN, 4), ch(C.KNIGHT, 12)],
            [ch(C.ARCHER, 9), ch(C.MONK, 9)],
        )
        dist = rules.transition_distribution(st, Move.attack(0, (0,)), cfg_season1)
        hit = dist.branches[0]
        assert hit.successor.sides[1][0].hp == 9 - 4
        assert hit.outcomes[0][1].rage

    def test_barbarian_above_threshold_base_damage(self, cfg_season1):
        st = make_state(
            [ch(C.BARBARIAN, 5), ch(C.KNIGHT, 12)],
            [ch(C.ARCHER, 9), ch(C.MONK, 9)],
        )
        dist = rules.transition_distribution(st, Move.attack(0, (0,)), cfg_season1)
        hit = dist.branches[0]
        assert hit.successor.sides[1][0].hp == 9 - 2
        assert not hit.outcomes[0][1].rage

    def test_skip_single_successor(self, cfg_season1):
        st = rules.initial_state(*KNIGHT_WIZARD_VS_ARCHER_MONK, 0, cfg_season1)
        dist = rules.transition_distribution(st, SKIP, cfg_season1)
        assert len(dist.branches) == 1
        succ = dist.branches[0].successor
        assert succ.active_side == 1
        assert succ.sides == st.sides

    def test_equal_successors_merge(self, cfg_season1):
        # Gunner attacking a 1-hp target: hit and graze both floor at 0.
        st = make_state(
            [ch(C.GUNNER, 10), ch(C.KNIGHT, 12)],
            [ch(C.ARCHER, 1), ch(C.MONK, 9)],
        )
        dist = rules.transition_distribution(st, Move.attack(0, (0,)), cfg_season1)
        assert len(dist.branches) == 1
        assert dist.branches[0].probability == pytest.approx(1.0, abs=0)
        assert len(dist.branches[0].outcomes) == 2

    def test_illegal_move_rejected(self, cfg_season1):
        st = rules.initial_state(*KNIGHT_WIZARD_VS_ARCHER_MONK, 0, cfg_season1)
        with pytest.raises(IllegalMoveError):
            rules.transition_distribution(st, Move.attack(0, (0, 1)), cfg_season1)


class TestSampling:
    def test_fixed_seed_reproduces(self, cfg_season1):
        st = rules.initial_state(*KNIGHT_WIZARD_VS_ARCHER_MONK, 0, cfg_season1)
        move = Move.attack(0, (0,))
        a, ea = rules.sample_transition(st, move, cfg_season1, Rng(42))
        b, eb = rules.sample_transition(st, move, cfg_season1, Rng(42))
        assert a == b and ea == eb

    def test_accuracy_one_always_hits(self):
        from rpglite.config import uniform_config

        cfg = uniform_config(health=3, accuracy=1.0, damage=1, season_id="sure")
        st = rules.initial_state((C.KNIGHT, C.WIZARD), (C.ARCHER, C.MONK), 0, cfg)
        for seed in range(50):
            _, events = rules.sample_transition(
                st, Move.attack(0, (0,)), cfg, Rng(seed)
            )
            assert events.rolls[0].hit

    def test_hit_frequency_matches_accuracy(self, cfg_season1):
        st = rules.initial_state(*KNIGHT_WIZARD_VS_ARCHER_MONK, 0, cfg_season1)
        move = Move.attack(0, (0,))
        rng = Rng(2024)
        n = 100_000
        hits = 0
        for _ in range(n):
            _, events = rules.sample_transition(st, move, cfg_season1, rng)
            hits += events.rolls[0].hit
        assert abs(hits / n - 0.85) < 0.01

    def test_replay_transition_applies_recorded_rolls(self, cfg_season1):
        st = rules.initial_state(*KNIGHT_WIZARD_VS_ARCHER_MONK, 0, cfg_season1)
        succ, events = rules.replay_transition(
            st, Move.attack(0, (0,)), cfg_season1, (True,)
        )
        assert succ.sides[1][0].hp == 6 and events.rolls[0].hit


class TestSerialization:
    def test_state_roundtrip(self, cfg_season1):
        st = make_state(
            [ch(C.KNIGHT, 7), ch(C.WIZARD, 9, stunned=True)],
            [ch(C.ARCHER, 0), ch(C.MONK, 3)],
            active=1,
        )
        assert decode_state(encode_state(st)) == st

    def test_chain_and_forfeit_fields_roundtrip(self, cfg_season1):
        st = GameState(
            sides=((ch(C.MONK, 5), ch(C.KNIGHT, 3)), (ch(C.ARCHER, 2), ch(C.GUNNER, 1))),
            active_side=0,
            chain=0,
            turn_count=11,
        )
        assert decode_state(encode_state(st)) == st

    def test_move_roundtrips(self):
        for move in (
            Move.attack(0, (1,)),
            Move.attack(1, (0, 1)),
            Move.attack(0, (1,), heal_slot=0),
            SKIP,
            FORFEIT,
        ):
            assert decode_move(encode_move(move)) == move
