"""Medal rules shared by dataset generation and the service.

The medal set is fixed; thresholds are tunable so the service can load
them from a config file.  A medal, once earned, is never revoked.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import CHARACTERS, CharacterId


@dataclass(frozen=True)
class MedalBook:
    """Thresholds for the five medals."""

    first_win_wins: int = 1
    veteran_wins: int = 10
    century_games: int = 100

    @staticmethod
    def from_json_dict(raw: dict) -> "MedalBook":
        return MedalBook(
            first_win_wins=int(raw.get("first_win_wins", 1)),
            veteran_wins=int(raw.get("veteran_wins", 10)),
            century_games=int(raw.get("century_games", 100)),
        )

    def to_json_dict(self) -> dict:
        return {
            "first_win_wins": self.first_win_wins,
            "veteran_wins": self.veteran_wins,
            "century_games": self.century_games,
        }


DEFAULT_MEDALS = MedalBook()

MEDAL_IDS = ("first_win", "veteran", "century", "full_roster", "flawless")


def earned_medals(
    games_played: int,
    games_won: int,
    winning_characters: set[CharacterId],
    flawless_wins: int,
    book: MedalBook = DEFAULT_MEDALS,
) -> list[str]:
    """Medal ids for a player's lifetime tallies, in canonical order.

    ``games_played``/``games_won`` count decided games; ``flawless``
    requires a win with both own characters at full health at the end.
    """
    out = []
    if games_won >= book.first_win_wins:
        out.append("first_win")
    if games_won >= book.veteran_wins:
        out.append("veteran")
    if games_played >= book.century_games:
        out.append("century")
    if all(c in winning_characters for c in CHARACTERS):
        out.append("full_roster")
    if flawless_wins >= 1:
        out.append("flawless")
    return out
