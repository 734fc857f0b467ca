"""Deterministic derivation of independent child seeds from one master seed."""

from __future__ import annotations

import numpy as np


def derive_seed(master: int | None, *keys: int) -> int:
    """64-bit seed for the stream identified by ``keys`` under ``master``.

    ``master=None`` draws fresh OS entropy, so results are then not reproducible.
    """
    ss = np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def derive_rng(master: int | None, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *keys))
