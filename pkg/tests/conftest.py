from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rpglite.config import CharacterId as C
from rpglite.config import season1, uniform_config, validate_config


def toy_config_a():
    return uniform_config(
        health=2, accuracy=0.8, damage=1, heal=1, execute_range=1,
        rage_threshold=1, rage_damage=2, graze=0, season_id="toy-a",
    )


def toy_config_b():
    return uniform_config(
        health=3, accuracy=0.5, damage=2, heal=2, execute_range=2,
        rage_threshold=2, rage_damage=3, graze=1, season_id="toy-b",
    )


def toy_config_c():
    raw = {
        "knight_health": 3, "knight_accuracy": 0.9, "knight_damage": 2,
        "archer_health": 2, "archer_accuracy": 0.75, "archer_damage": 1,
        "healer_health": 3, "healer_accuracy": 0.85, "healer_damage": 1,
        "rogue_health": 1, "rogue_accuracy": 0.8, "rogue_damage": 2,
        "wizard_health": 2, "wizard_accuracy": 0.7, "wizard_damage": 1,
        "barbarian_health": 3, "barbarian_accuracy": 0.6, "barbarian_damage": 1,
        "monk_health": 2, "monk_accuracy": 0.6, "monk_damage": 1,
        "gunner_health": 2, "gunner_accuracy": 0.65, "gunner_damage": 2,
        "healer_heal": 1, "rogue_execute_range": 2,
        "barbarian_rage_threshold": 2, "barbarian_rage_damage": 2,
        "gunner_graze": 1, "season_id": "toy-c",
    }
    return validate_config(raw)


TOY_CONFIGS = {"toy-a": toy_config_a, "toy-b": toy_config_b, "toy-c": toy_config_c}


@pytest.fixture(scope="session")
def cfg_season1():
    return season1()


@pytest.fixture(scope="session")
def toy_a():
    return toy_config_a()


@pytest.fixture(scope="session")
def toy_b():
    return toy_config_b()


@pytest.fixture(scope="session")
def toy_c():
    return toy_config_c()


KNIGHT_WIZARD_VS_ARCHER_MONK = ((C.KNIGHT, C.WIZARD), (C.ARCHER, C.MONK))
HEALER_ROGUE_VS_BARBARIAN_GUNNER = ((C.HEALER, C.ROGUE), (C.BARBARIAN, C.GUNNER))
HEALER_MONK_MIRROR = ((C.HEALER, C.MONK), (C.HEALER, C.MONK))
