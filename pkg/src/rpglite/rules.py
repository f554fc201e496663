"""Game rules: legal moves, exact transition distributions, sampling.

All functions are pure and treat states as immutable values.

Mechanics summary:

* One character acts per turn.  Accuracy decides whether the action
  succeeds; every roll is independent.
* Knight, Rogue, Wizard, Barbarian, Gunner and Healer make one roll at
  one target.  The Archer rolls independently for one or two distinct
  targets.  The Monk keeps acting after each hit (re-choosing a target)
  and stops on its first miss.
* Specials: the Rogue kills outright when the target's current hp is at
  most the execute range.  The Wizard stuns a surviving target, which
  suppresses that character for its side's next turn; the flag clears
  when that turn ends.  The Barbarian deals rage damage instead of base
  damage while its own hp is at or below the rage threshold.  The
  Gunner deals graze damage on a miss.  The Healer, on a hit, also
  restores hp to a chosen living damaged ally (or itself); when nobody
  is damaged the Healer just attacks.
* A stunned or dead character cannot act.  A side with no usable
  character still has Skip.  Forfeit immediately loses the game.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product

from .config import CharacterId, Config
from .errors import IllegalMoveError, RulesError
from .rng import Rng
from .state import (
    FORFEIT,
    SKIP,
    CharacterState,
    GameState,
    Move,
    MoveKind,
    move_sort_key,
)


class GameOverError(RulesError):
    """The game already has a winner."""


class DuplicateCharacterError(RulesError):
    """A pair may not field the same character twice."""


@dataclass(frozen=True)
class RollEvent:
    target_slot: int
    hit: bool
    damage: int


@dataclass(frozen=True)
class BranchEvents:
    """What happened along one resolution branch of a move."""

    rolls: tuple[RollEvent, ...] = ()
    heal: tuple[int, int] | None = None  # (recipient slot, amount applied)
    stun_slot: int | None = None
    execute: bool = False
    rage: bool = False
    graze: bool = False


@dataclass(frozen=True)
class Branch:
    probability: float
    successor: GameState
    # (probability, events) per underlying roll outcome; branches whose
    # outcomes lead to the same state are merged, so this can hold more
    # than one entry.
    outcomes: tuple[tuple[float, BranchEvents], ...]


@dataclass(frozen=True)
class TransitionDistribution:
    branches: tuple[Branch, ...]


def initial_state(
    pair0: tuple[CharacterId, CharacterId],
    pair1: tuple[CharacterId, CharacterId],
    first_mover: int,
    config: Config,
) -> GameState:
    for pair in (pair0, pair1):
        if pair[0] == pair[1]:
            raise DuplicateCharacterError(f"duplicate character in pair: {pair[0].value}")
    if first_mover not in (0, 1):
        raise RulesError("first_mover must be 0 or 1")
    sides = tuple(
        tuple(CharacterState(c, config.health(c), False) for c in pair)
        for pair in (pair0, pair1)
    )
    return GameState(sides=sides, active_side=first_mover)  # type: ignore[arg-type]


def winner(state: GameState) -> int | None:
    if state.forfeited is not None:
        return 1 - state.forfeited
    for s in (0, 1):
        if all(c.hp == 0 for c in state.sides[s]):
            return 1 - s
    return None


def concede(state: GameState, side: int) -> GameState:
    """Mark ``side`` as having given up, out of turn order.

    A player may resign even while the opponent is the mover, so this
    cannot go through the move pipeline; the result is terminal and no
    turn bookkeeping happens.  The mover's own forfeit move instead
    resolves through ``apply_rolls`` and ends the turn normally.
    """
    if winner(state) is not None:
        raise GameOverError("cannot concede a finished game")
    if side not in (0, 1):
        raise RulesError(f"bad side: {side}")
    return replace(state, forfeited=side)


def legal_moves(state: GameState, config: Config) -> list[Move]:
    if winner(state) is not None:
        raise GameOverError("no moves in a finished game")

    s = state.active_side
    own = state.sides[s]
    opp = state.sides[1 - s]
    living_targets = [t for t in (0, 1) if opp[t].alive]

    if state.chain is not None:
        # Mid Monk-chain the only options are continuation targets.
        return [Move.attack(state.chain, (t,)) for t in living_targets]

    moves: list[Move] = []
    for slot in (0, 1):
        actor = own[slot]
        if not actor.alive or actor.stunned:
            continue
        if actor.id is CharacterId.ARCHER:
            for t in living_targets:
                moves.append(Move.attack(slot, (t,)))
            if len(living_targets) == 2:
                moves.append(Move.attack(slot, (living_targets[0], living_targets[1])))
        elif actor.id is CharacterId.HEALER:
            recipients = [
                r
                for r in (0, 1)
                if own[r].alive and own[r].hp < config.health(own[r].id)
            ]
            for t in living_targets:
                if recipients:
                    for r in recipients:
                        moves.append(Move.attack(slot, (t,), heal_slot=r))
                else:
                    moves.append(Move.attack(slot, (t,)))
        else:
            for t in living_targets:
                moves.append(Move.attack(slot, (t,)))

    moves.sort(key=move_sort_key)
    moves.append(SKIP)
    moves.append(FORFEIT)
    return moves


def _end_turn(state: GameState, mover: int) -> GameState:
    pair = state.sides[mover]
    cleared = tuple(
        replace(c, stunned=False) if c.stunned else c for c in pair
    )
    sides = (cleared, state.sides[1]) if mover == 0 else (state.sides[0], cleared)
    return GameState(
        sides=sides,  # type: ignore[arg-type]
        active_side=1 - mover,
        chain=None,
        turn_count=state.turn_count + 1,
        forfeited=state.forfeited,
    )


def _with_char(state: GameState, side: int, slot: int, ch: CharacterState) -> GameState:
    pair = state.sides[side]
    new_pair = (ch, pair[1]) if slot == 0 else (pair[0], ch)
    sides = (new_pair, state.sides[1]) if side == 0 else (state.sides[0], new_pair)
    return replace(state, sides=sides)


def roll_count(state: GameState, move: Move) -> int:
    """Number of accuracy rolls the move makes, in canonical roll order."""
    if move.kind is not MoveKind.ATTACK:
        return 0
    return len(move.targets)


def apply_rolls(
    state: GameState, move: Move, config: Config, hits: tuple[bool, ...]
) -> tuple[GameState, BranchEvents]:
    """Resolve a move given fixed roll outcomes (one per target, in
    target order).  This is the single resolution path shared by exact
    distributions, sampling, and replay."""
    s = state.active_side

    if move.kind is MoveKind.SKIP:
        return _end_turn(state, s), BranchEvents()
    if move.kind is MoveKind.FORFEIT:
        conceded = replace(state, forfeited=s)
        return _end_turn(conceded, s), BranchEvents()

    if len(hits) != len(move.targets):
        raise IllegalMoveError("one roll outcome per target required")

    own = state.sides[s]
    actor = own[move.actor_slot]
    kind = actor.id
    opp_side = 1 - s

    working = state
    rolls: list[RollEvent] = []
    heal_event: tuple[int, int] | None = None
    stun_slot: int | None = None
    execute = False
    graze_applied = False
    raging = (
        kind is CharacterId.BARBARIAN and actor.hp <= config.rage_threshold
    )

    for target_slot, hit in zip(move.targets, hits):
        target = working.sides[opp_side][target_slot]
        dealt = 0
        if hit:
            if kind is CharacterId.ROGUE and target.hp <= config.execute_range:
                dealt = target.hp
                execute = True
            elif raging:
                dealt = min(target.hp, config.rage_damage)
            else:
                dealt = min(target.hp, config.damage(kind))
            new_hp = target.hp - dealt
            stunned = target.stunned
            if kind is CharacterId.WIZARD and new_hp > 0:
                stunned = True
                stun_slot = target_slot
            working = _with_char(
                working, opp_side, target_slot, replace(target, hp=new_hp, stunned=stunned)
            )
        else:
            if kind is CharacterId.GUNNER and config.graze > 0:
                dealt = min(target.hp, config.graze)
                graze_applied = True
                working = _with_char(
                    working, opp_side, target_slot, replace(target, hp=target.hp - dealt)
                )
        rolls.append(RollEvent(target_slot, hit, dealt))

    if kind is CharacterId.HEALER and move.heal_slot is not None and hits[0]:
        recipient = working.sides[s][move.heal_slot]
        amount = min(config.heal, config.health(recipient.id) - recipient.hp)
        if amount > 0:
            working = _with_char(
                working, s, move.heal_slot, replace(recipient, hp=recipient.hp + amount)
            )
        heal_event = (move.heal_slot, amount)

    events = BranchEvents(
        rolls=tuple(rolls),
        heal=heal_event,
        stun_slot=stun_slot,
        execute=execute,
        rage=raging,
        graze=graze_applied,
    )

    opponents_alive = any(c.alive for c in working.sides[opp_side])
    if kind is CharacterId.MONK and hits[0] and opponents_alive:
        chained = replace(working, chain=move.actor_slot)
        return chained, events
    return _end_turn(working, s), events


def _check_legal(state: GameState, move: Move, config: Config) -> None:
    if move not in legal_moves(state, config):
        raise IllegalMoveError(f"move {move} is not legal here")


def transition_distribution(
    state: GameState, move: Move, config: Config
) -> TransitionDistribution:
    """Exact successor distribution, equal successors merged."""
    _check_legal(state, move, config)

    n_rolls = roll_count(state, move)
    if n_rolls == 0:
        succ, events = apply_rolls(state, move, config, ())
        return TransitionDistribution((Branch(1.0, succ, ((1.0, events),)),))

    acc = config.accuracy(state.sides[state.active_side][move.actor_slot].id)
    merged: dict[GameState, tuple[float, list[tuple[float, BranchEvents]]]] = {}
    order: list[GameState] = []
    for hits in product((True, False), repeat=n_rolls):
        p = 1.0
        for h in hits:
            p *= acc if h else (1.0 - acc)
        if p == 0.0:
            continue
        succ, events = apply_rolls(state, move, config, hits)
        if succ in merged:
            total, outcomes = merged[succ]
            outcomes.append((p, events))
            merged[succ] = (total + p, outcomes)
        else:
            merged[succ] = (p, [(p, events)])
            order.append(succ)

    branches = tuple(
        Branch(merged[succ][0], succ, tuple(merged[succ][1])) for succ in order
    )
    return TransitionDistribution(branches)


def sample_transition(
    state: GameState, move: Move, config: Config, rng: Rng
) -> tuple[GameState, BranchEvents]:
    """Draw a successor.  One u01 draw per roll, hit iff u < accuracy."""
    _check_legal(state, move, config)
    n_rolls = roll_count(state, move)
    if n_rolls == 0:
        return apply_rolls(state, move, config, ())
    acc = config.accuracy(state.sides[state.active_side][move.actor_slot].id)
    hits = tuple(rng.u01() < acc for _ in range(n_rolls))
    return apply_rolls(state, move, config, hits)


def replay_transition(
    state: GameState, move: Move, config: Config, hits: tuple[bool, ...]
) -> tuple[GameState, BranchEvents]:
    """Re-apply a recorded move outcome; validates legality first."""
    _check_legal(state, move, config)
    return apply_rolls(state, move, config, hits)
