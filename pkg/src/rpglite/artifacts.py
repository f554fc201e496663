"""Solved-matchup artifacts: in-memory cache plus optional disk store.

Bots and move-cost analytics need per-side optimal value functions for
every matchup that appears in play.  A store answers those lookups,
solving on demand when ``autosolve`` is on and otherwise insisting the
artifact already exists (memory or disk).  Disk artifacts are ``.npz``
files carrying the value vector, both extracted policies, and a
self-describing metadata record.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .config import Config
from .context import WorkContext
from .errors import MissingArtifactError
from .solver import (
    DEFAULT_TOL,
    Matchup,
    MinimaxSolution,
    Policy,
    StateSpace,
    ValueVector,
    solve_minimax,
)

ARTIFACT_KIND = "minimax-solution"


class ArtifactStore:
    """Per-side minimax solutions keyed by (config, matchup, side).

    ``root`` enables persistence: solutions are written there when
    computed and read back on later runs.  With ``autosolve`` off a
    lookup that is neither cached nor on disk raises
    ``MissingArtifactError``.
    """

    def __init__(
        self,
        root: str | Path | None = None,
        autosolve: bool = True,
        tol: float = DEFAULT_TOL,
        context: WorkContext | None = None,
    ):
        self.root = Path(root) if root is not None else None
        self.autosolve = autosolve
        self.tol = tol
        self.context = context if context is not None else WorkContext()

    def space(self, config: Config, matchup: Matchup) -> StateSpace:
        return self.context.space(matchup, config)

    def _memo_key(self, config: Config, matchup: Matchup, side: int) -> tuple:
        return ("artifact", config.config_hash(), matchup.key(), side, self.tol)

    def path_for(self, config: Config, matchup: Matchup, side: int) -> Path:
        if self.root is None:
            raise ValueError("store has no disk root")
        return self.root / config.config_hash()[:16] / f"{matchup.key()}.s{side}.npz"

    def solution(self, config: Config, matchup: Matchup, side: int) -> MinimaxSolution:
        key = self._memo_key(config, matchup, side)
        hit = self.context.memo.get(key)
        if hit is not None:
            return hit
        sol = None
        if self.root is not None:
            path = self.path_for(config, matchup, side)
            if path.exists():
                sol = self._load(path, config, matchup, side)
        if sol is None:
            if not self.autosolve:
                raise MissingArtifactError(
                    f"no solution for {matchup.key()} side {side} "
                    f"under config {config.config_hash()[:16]}"
                )
            sol = solve_minimax(self.space(config, matchup), self.tol, side=side)
            if self.root is not None:
                self._save(sol, config, matchup, side)
        self.context.memo[key] = sol
        return sol

    def values(self, config: Config, matchup: Matchup, side: int) -> ValueVector:
        return self.solution(config, matchup, side).values

    def policy(self, config: Config, matchup: Matchup, side: int) -> Policy:
        """The optimal policy for ``side`` (the maximizing extraction)."""
        return self.solution(config, matchup, side).policies[side]

    def precompute(self, config: Config, matchups, sides=(0, 1)) -> int:
        n = 0
        for matchup in matchups:
            for side in sides:
                self.solution(config, matchup, side)
                n += 1
        return n

    def _save(self, sol: MinimaxSolution, config: Config, matchup: Matchup, side: int) -> Path:
        path = self.path_for(config, matchup, side)
        path.parent.mkdir(parents=True, exist_ok=True)
        meta = {
            "kind": ARTIFACT_KIND,
            "tool": "rpglite",
            "version": __version__,
            "config_hash": config.config_hash(),
            "matchup": matchup.key(),
            "side": side,
            "tol": self.tol,
            "n_states": sol.space.n_states,
            "iterations": sol.values.iterations,
            "residual": sol.values.residual,
            "coin_flip_value": sol.coin_flip_value,
        }
        tmp = path.with_suffix(".tmp")
        with open(tmp, "wb") as fh:
            np.savez(
                fh,
                meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), np.uint8),
                values=sol.values.values,
                det0=sol.policies[0].det_moves,
                det1=sol.policies[1].det_moves,
            )
        tmp.replace(path)
        return path

    def _load(self, path: Path, config: Config, matchup: Matchup, side: int) -> MinimaxSolution:
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode())
            values = data["values"].copy()
            det0 = data["det0"].copy()
            det1 = data["det1"].copy()
        if (
            meta.get("kind") != ARTIFACT_KIND
            or meta.get("config_hash") != config.config_hash()
            or meta.get("matchup") != matchup.key()
            or int(meta.get("side", -1)) != side
        ):
            raise MissingArtifactError(f"artifact {path} does not match the request")
        space = self.space(config, matchup)
        if space.n_states != int(meta["n_states"]) or len(values) != space.n_states:
            raise MissingArtifactError(f"artifact {path} has a stale state count")
        vv = ValueVector(
            side=side,
            values=values,
            tol=float(meta["tol"]),
            iterations=int(meta["iterations"]),
            residual=float(meta["residual"]),
        )
        return MinimaxSolution(
            values=vv,
            policies=(Policy(side=0, det_moves=det0), Policy(side=1, det_moves=det1)),
            space=space,
        )
