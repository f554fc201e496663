"""Shared caches for pipelines that touch many state spaces.

Balance reports and metagame iteration revisit the same matchups over
and over; a context keeps enumerated spaces (bounded by a byte budget)
plus a free-form memo for derived results.  Everything cached is a pure
function of its key, so cache state never changes any output.
"""

from __future__ import annotations

from collections import OrderedDict

from .config import Config
from .solver import DEFAULT_BUDGET, Matchup, StateSpace, enumerate_states


def space_nbytes(space: StateSpace) -> int:
    arrays = (
        space.codes, space.pair_start, space.pair_move, space.branch_start,
        space.branch_succ, space.branch_prob, space.terminal, space.active,
    )
    return int(sum(a.nbytes for a in arrays))


class WorkContext:
    """LRU space cache plus a memo dict for derived results."""

    def __init__(self, space_budget_bytes: int = 2_000_000_000):
        self.space_budget_bytes = space_budget_bytes
        self._spaces: OrderedDict[tuple, StateSpace] = OrderedDict()
        self._space_bytes = 0
        self.memo: dict = {}

    def space(
        self, matchup: Matchup, config: Config, budget: int = DEFAULT_BUDGET
    ) -> StateSpace:
        key = (config.config_hash(), matchup.key())
        hit = self._spaces.get(key)
        if hit is not None:
            self._spaces.move_to_end(key)
            return hit
        space = enumerate_states(matchup, config, budget)
        self._spaces[key] = space
        self._space_bytes += space_nbytes(space)
        while self._space_bytes > self.space_budget_bytes and len(self._spaces) > 1:
            _, evicted = self._spaces.popitem(last=False)
            self._space_bytes -= space_nbytes(evicted)
        return space

    def clear(self) -> None:
        self._spaces.clear()
        self._space_bytes = 0
        self.memo.clear()
