"""Game state and move types with their canonical JSON encodings."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .config import CharacterId


@dataclass(frozen=True)
class CharacterState:
    id: CharacterId
    hp: int
    stunned: bool = False

    @property
    def alive(self) -> bool:
        return self.hp > 0


Pair = tuple[CharacterState, CharacterState]


@dataclass(frozen=True)
class GameState:
    """Snapshot of a running game.

    chain is the acting side's slot that is mid Monk-chain, or None.
    forfeited records a side that conceded, so the winner can be read
    off the state itself.
    """

    sides: tuple[Pair, Pair]
    active_side: int
    chain: int | None = None
    turn_count: int = 0
    forfeited: int | None = None

    def side(self, s: int) -> Pair:
        return self.sides[s]

    def character(self, s: int, slot: int) -> CharacterState:
        return self.sides[s][slot]


class MoveKind(str, Enum):
    ATTACK = "attack"
    SKIP = "skip"
    FORFEIT = "forfeit"


@dataclass(frozen=True)
class Move:
    """One player decision.

    Attacks name the acting slot on the active side and one or two
    target slots on the opposing side.  A Healer attack may carry a
    heal recipient slot on its own side.  Skip and Forfeit carry no
    payload.
    """

    kind: MoveKind
    actor_slot: int | None = None
    targets: tuple[int, ...] = ()
    heal_slot: int | None = None

    @staticmethod
    def attack(actor_slot: int, targets: tuple[int, ...], heal_slot: int | None = None) -> "Move":
        return Move(MoveKind.ATTACK, actor_slot, tuple(targets), heal_slot)


SKIP = Move(MoveKind.SKIP)
FORFEIT = Move(MoveKind.FORFEIT)


def move_sort_key(move: Move) -> tuple:
    """Canonical move order: attacks by (actor slot, payload slots,
    single targets before pairs), then Skip, then Forfeit."""
    if move.kind is MoveKind.ATTACK:
        heal = -1 if move.heal_slot is None else move.heal_slot
        return (0, move.actor_slot, len(move.targets), *move.targets, heal)
    if move.kind is MoveKind.SKIP:
        return (1,)
    return (2,)


def encode_move(move: Move) -> dict:
    if move.kind is MoveKind.ATTACK:
        out: dict = {"kind": "attack", "actor_slot": move.actor_slot, "targets": list(move.targets)}
        if move.heal_slot is not None:
            out["heal_slot"] = move.heal_slot
        return out
    return {"kind": move.kind.value}


def decode_move(data: dict) -> Move:
    kind = MoveKind(data["kind"])
    if kind is MoveKind.ATTACK:
        return Move(
            kind,
            int(data["actor_slot"]),
            tuple(int(t) for t in data["targets"]),
            None if data.get("heal_slot") is None else int(data["heal_slot"]),
        )
    return Move(kind)


def encode_state(state: GameState) -> dict:
    return {
        "sides": [
            [{"id": c.id.value, "hp": c.hp, "stunned": c.stunned} for c in pair]
            for pair in state.sides
        ],
        "active_side": state.active_side,
        "chain": state.chain,
        "turn_count": state.turn_count,
        "forfeited": state.forfeited,
    }


def decode_state(data: dict) -> GameState:
    sides = tuple(
        tuple(
            CharacterState(CharacterId(c["id"]), int(c["hp"]), bool(c["stunned"]))
            for c in pair
        )
        for pair in data["sides"]
    )
    return GameState(
        sides=sides,  # type: ignore[arg-type]
        active_side=int(data["active_side"]),
        chain=None if data.get("chain") is None else int(data["chain"]),
        turn_count=int(data.get("turn_count", 0)),
        forfeited=None if data.get("forfeited") is None else int(data["forfeited"]),
    )


def swap_sides(state: GameState) -> GameState:
    """Mirror the state: side 0 becomes side 1 and vice versa.

    Slot-based moves are identical in the mirrored state, which lets
    side-1 decision problems reuse side-0 machinery.
    """
    return GameState(
        sides=(state.sides[1], state.sides[0]),
        active_side=1 - state.active_side,
        chain=state.chain,
        turn_count=state.turn_count,
        forfeited=None if state.forfeited is None else 1 - state.forfeited,
    )


