"""Solver and run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass
class SolverConfig:
    """Knobs for the channel / measurement optimizers.

    Defaults follow the recorded provenance: seed 42, 32 random starts plus
    the structured ones, slope bisection down to ``rate_tol`` feasibility.
    """

    seed: int = 42
    starts: int = 32
    max_iter: int = 20000
    lr: float = 0.1
    rel_tol: float = 1e-9
    patience: int = 50
    s_max: float = 400.0
    bisect_iters: int = 24
    rate_tol: float = 1e-6
    penalty_ramp: tuple = (30.0, 300.0, 3000.0)
    bisect_starts: int = 0  # 0 -> starts // 4, at least 4

    def rng(self, *key) -> np.random.Generator:
        """Private, reproducible stream for a (point, start, ...) key."""
        return np.random.default_rng(
            np.random.SeedSequence(
                entropy=self.seed,
                spawn_key=tuple(int(k) & 0xFFFFFFFF for k in key),
            )
        )

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)

    @property
    def starts_inner(self) -> int:
        return self.bisect_starts or max(4, self.starts // 4)


FAST = SolverConfig(starts=8, max_iter=4000)


@dataclass
class RunConfig:
    """CLI-level settings; identical RunConfig + inputs give identical CSVs."""

    seed: int = 42
    starts: int = 32
    grid: tuple = (0.0, 1.0, 33)
    tol: float = 1e-6
    threads: int = 1
    out: str | None = None
    witness_out: str | None = None

    def solver(self) -> SolverConfig:
        return SolverConfig(seed=self.seed, starts=self.starts, rate_tol=self.tol)

    def grid_values(self) -> np.ndarray:
        lo, hi, n = self.grid
        return np.linspace(float(lo), float(hi), int(n))
