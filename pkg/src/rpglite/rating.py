"""Skill-point arithmetic shared by the simulator and the service.

Plain Elo with K = 32; ratings never drop below zero.  The gain and
loss are equal before flooring, so the system is zero-sum except at
the floor.
"""

from __future__ import annotations

ELO_K = 32.0
SKILL_FLOOR = 0.0
DEFAULT_SKILL = 1000.0


def expected_score(rating: float, opponent: float) -> float:
    return 1.0 / (1.0 + 10.0 ** ((opponent - rating) / 400.0))


def elo_update(winner: float, loser: float, k: float = ELO_K) -> tuple[float, float]:
    """New (winner, loser) ratings after a decided game."""
    delta = k * (1.0 - expected_score(winner, loser))
    return winner + delta, max(SKILL_FLOOR, loser - delta)
