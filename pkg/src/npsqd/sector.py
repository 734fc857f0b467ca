"""Particle-number sectors of the blocked spin-orbital register."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np


@dataclass(frozen=True)
class SectorSpec:
    """Electron counts per spin block. Up orbital i is qubit i, down orbital i is qubit i + n."""

    n_spatial: int
    n_up: int
    n_down: int

    def __post_init__(self):
        if self.n_spatial < 1:
            raise ValueError("n_spatial must be >= 1")
        if not (0 <= self.n_up <= self.n_spatial and 0 <= self.n_down <= self.n_spatial):
            raise ValueError("electron counts must lie in [0, n_spatial]")

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_spatial

    @property
    def dimension(self) -> int:
        return comb(self.n_spatial, self.n_up) * comb(self.n_spatial, self.n_down)

    @property
    def up_mask(self) -> int:
        return (1 << self.n_spatial) - 1

    def block_counts(self, configs) -> tuple[np.ndarray, np.ndarray]:
        configs = np.asarray(configs, dtype=np.int64)
        up = np.bitwise_count(configs & self.up_mask).astype(np.int64)
        down = np.bitwise_count(configs >> self.n_spatial).astype(np.int64)
        return up, down

    def contains(self, configs) -> np.ndarray:
        """Boolean mask of configurations satisfying both block counts."""
        up, down = self.block_counts(configs)
        return (up == self.n_up) & (down == self.n_down)

    def configurations(self, limit: int | None = None) -> np.ndarray:
        """All sector configurations in increasing integer order."""
        if limit is not None and self.dimension > limit:
            raise ValueError(f"sector dimension {self.dimension} exceeds limit {limit}")
        n = self.n_spatial
        ups = [sum(1 << i for i in c) for c in combinations(range(n), self.n_up)]
        downs = [sum(1 << (i + n) for i in c) for c in combinations(range(n), self.n_down)]
        out = np.array([u | d for d in downs for u in ups], dtype=np.int64)
        return np.sort(out)
