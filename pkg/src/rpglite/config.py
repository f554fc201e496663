"""Season configuration: the 29 tunable character attributes.

A season is defined by three stats per character (health, accuracy,
damage) plus five special-ability attributes: the Healer's heal amount,
the Rogue's execute range, the Barbarian's rage threshold and rage
damage, and the Gunner's graze damage.

The flat JSON encoding uses one field per attribute, named
``{character}_{stat}`` in lower case (for example ``knight_health``),
plus the special fields ``healer_heal``, ``rogue_execute_range``,
``barbarian_rage_threshold``, ``barbarian_rage_damage`` and
``gunner_graze``, plus a ``season_id`` string.  Field order in the
canonical encoding follows the character order below, three stats per
character, then the five specials, then ``season_id``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .errors import ConfigError


class CharacterId(str, Enum):
    """The eight playable characters, in canonical order."""

    KNIGHT = "Knight"
    ARCHER = "Archer"
    HEALER = "Healer"
    ROGUE = "Rogue"
    WIZARD = "Wizard"
    BARBARIAN = "Barbarian"
    MONK = "Monk"
    GUNNER = "Gunner"


CHARACTERS: tuple[CharacterId, ...] = tuple(CharacterId)
CHAR_INDEX: dict[CharacterId, int] = {c: i for i, c in enumerate(CHARACTERS)}


def character_from_name(name: str) -> CharacterId:
    """Parse a character name, case-insensitively."""
    for c in CHARACTERS:
        if c.value.lower() == name.strip().lower():
            return c
    raise ValueError(f"unknown character: {name!r}")


@dataclass(frozen=True)
class CharStats:
    health: int
    accuracy: float
    damage: int


@dataclass(frozen=True)
class Config:
    """A validated season configuration. Construct via validate_config."""

    stats: tuple[CharStats, ...]  # indexed by canonical character order
    heal: int
    execute_range: int
    rage_threshold: int
    rage_damage: int
    graze: int
    season_id: str

    def health(self, c: CharacterId) -> int:
        return self.stats[CHAR_INDEX[c]].health

    def accuracy(self, c: CharacterId) -> float:
        return self.stats[CHAR_INDEX[c]].accuracy

    def damage(self, c: CharacterId) -> int:
        return self.stats[CHAR_INDEX[c]].damage

    def to_json_dict(self) -> dict:
        out: dict = {}
        for c in CHARACTERS:
            s = self.stats[CHAR_INDEX[c]]
            key = c.value.lower()
            out[f"{key}_health"] = s.health
            out[f"{key}_accuracy"] = s.accuracy
            out[f"{key}_damage"] = s.damage
        out["healer_heal"] = self.heal
        out["rogue_execute_range"] = self.execute_range
        out["barbarian_rage_threshold"] = self.rage_threshold
        out["barbarian_rage_damage"] = self.rage_damage
        out["gunner_graze"] = self.graze
        out["season_id"] = self.season_id
        return out

    def canonical_json(self) -> str:
        return json.dumps(self.to_json_dict(), separators=(",", ":"))

    def config_hash(self) -> str:
        """sha256 hex digest of the canonical JSON encoding."""
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


# Attribute names in canonical order; validation reports the first
# missing or out-of-range one in this order.
_STAT_FIELDS: tuple[str, ...] = tuple(
    f"{c.value.lower()}_{stat}"
    for c in CHARACTERS
    for stat in ("health", "accuracy", "damage")
)
_SPECIAL_FIELDS: tuple[str, ...] = (
    "healer_heal",
    "rogue_execute_range",
    "barbarian_rage_threshold",
    "barbarian_rage_damage",
    "gunner_graze",
)
ATTRIBUTE_FIELDS: tuple[str, ...] = _STAT_FIELDS + _SPECIAL_FIELDS


def _require_int(raw: dict, field: str, low: int, high: int | None = None) -> int:
    v = raw[field]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError("OutOfRange", field, f"{field} must be an integer")
    if v < low or (high is not None and v > high):
        bound = f">= {low}" if high is None else f"in [{low}, {high}]"
        raise ConfigError("OutOfRange", field, f"{field} must be {bound}, got {v}")
    return v


def validate_config(raw: dict) -> Config:
    """Check an attribute map and build a Config.

    Raises ConfigError with code MissingAttribute or OutOfRange naming
    the first offending attribute in canonical order.
    """
    for field in ATTRIBUTE_FIELDS:
        if field not in raw:
            raise ConfigError("MissingAttribute", field, f"{field} is missing")

    stats: list[CharStats] = []
    for c in CHARACTERS:
        key = c.value.lower()
        health = _require_int(raw, f"{key}_health", 1)
        acc_field = f"{key}_accuracy"
        acc = raw[acc_field]
        if isinstance(acc, bool) or not isinstance(acc, (int, float)):
            raise ConfigError("OutOfRange", acc_field, f"{acc_field} must be a number")
        acc = float(acc)
        if not (0.0 < acc <= 1.0):
            raise ConfigError(
                "OutOfRange", acc_field, f"{acc_field} must be in (0, 1], got {acc}"
            )
        damage = _require_int(raw, f"{key}_damage", 1)
        stats.append(CharStats(health, acc, damage))

    heal = _require_int(raw, "healer_heal", 1)

    max_health = max(s.health for s in stats)
    execute_range = _require_int(raw, "rogue_execute_range", 1)
    if execute_range >= max_health:
        raise ConfigError(
            "OutOfRange",
            "rogue_execute_range",
            f"rogue_execute_range must be below the highest health ({max_health})",
        )

    barb = stats[CHAR_INDEX[CharacterId.BARBARIAN]]
    rage_threshold = _require_int(raw, "barbarian_rage_threshold", 1, barb.health)
    rage_damage = _require_int(raw, "barbarian_rage_damage", 1)
    if rage_damage <= barb.damage:
        raise ConfigError(
            "OutOfRange",
            "barbarian_rage_damage",
            f"barbarian_rage_damage must exceed barbarian_damage ({barb.damage})",
        )

    gunner = stats[CHAR_INDEX[CharacterId.GUNNER]]
    graze = _require_int(raw, "gunner_graze", 0)
    if graze >= gunner.damage:
        raise ConfigError(
            "OutOfRange",
            "gunner_graze",
            f"gunner_graze must be below gunner_damage ({gunner.damage})",
        )

    season_id = raw.get("season_id")
    if not isinstance(season_id, str) or not season_id:
        raise ConfigError("MissingAttribute", "season_id", "season_id is missing")

    return Config(
        stats=tuple(stats),
        heal=heal,
        execute_range=execute_range,
        rage_threshold=rage_threshold,
        rage_damage=rage_damage,
        graze=graze,
        season_id=season_id,
    )


def load_config_file(path: str) -> Config:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("MissingAttribute", "season_id", "config must be a JSON object")
    return validate_config(raw)


def _load_packaged(name: str) -> Config:
    text = resources.files("rpglite.data").joinpath(name).read_text("utf-8")
    return validate_config(json.loads(text))


def season1() -> Config:
    """The shipped season-1 defaults."""
    return _load_packaged("season1.json")


def season2() -> Config:
    """The shipped season-2 defaults."""
    return _load_packaged("season2.json")


def uniform_config(
    health: int = 2,
    accuracy: float = 1.0,
    damage: int = 2,
    heal: int = 1,
    execute_range: int = 1,
    rage_threshold: int = 1,
    rage_damage: int | None = None,
    graze: int = 0,
    season_id: str = "uniform",
) -> Config:
    """Config where all eight characters share one stat line.

    Useful for symmetry studies and exact-value test cases.
    """
    raw: dict = {}
    for c in CHARACTERS:
        key = c.value.lower()
        raw[f"{key}_health"] = health
        raw[f"{key}_accuracy"] = accuracy
        raw[f"{key}_damage"] = damage
    raw["healer_heal"] = heal
    raw["rogue_execute_range"] = execute_range
    raw["barbarian_rage_threshold"] = rage_threshold
    raw["barbarian_rage_damage"] = damage + 1 if rage_damage is None else rage_damage
    raw["gunner_graze"] = graze
    raw["season_id"] = season_id
    return validate_config(raw)
