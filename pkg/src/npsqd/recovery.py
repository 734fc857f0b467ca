"""Particle-number post-selection and self-consistent configuration recovery."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import kernels
from .encoding import PauliSum
from .sector import SectorSpec
from .simulator import SampleSet, bits_to_config, config_to_bits
from .subspace import solve

__all__ = [
    "RecoveryConfig",
    "RecoveryResult",
    "SectorSpec",
    "analytic_retention",
    "batch_occupations",
    "flip_weight",
    "post_select",
    "recovered_from_text",
    "sccr_once",
    "sccr_recover",
]

log = logging.getLogger(__name__)

MODES = ("until_valid", "single_attempt")


@dataclass(frozen=True)
class RecoveryConfig:
    """Hyperparameters of configuration recovery.

    ``mode="until_valid"`` keeps proposing weighted flips in a string until
    both block counts are right. ``mode="single_attempt"`` gives every
    required flip one uniform proposal accepted with the flip weight, so a
    string may need several passes.
    """

    h: float = 0.8
    delta: float = 0.2
    batches: int = 10
    max_passes: int = 100
    repetitions: int = 200
    mode: str = "until_valid"

    def __post_init__(self):
        if not 0.0 < self.h < 1.0:
            raise ValueError("h must lie in (0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.batches < 1 or self.max_passes < 1 or self.repetitions < 1:
            raise ValueError("batches, max_passes and repetitions must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


def post_select(samples: SampleSet, sector: SectorSpec) -> tuple[SampleSet, SampleSet]:
    """Split into in-sector (S_N) and out-of-sector (S_X) sample sets."""
    if samples.n_qubits != sector.n_qubits:
        raise ValueError(f"samples have {samples.n_qubits} qubits, sector {sector.n_qubits}")
    configs, counts = samples.arrays()
    ok = sector.contains(configs)
    s_n = SampleSet(samples.n_qubits, dict(zip(configs[ok].tolist(), counts[ok].tolist())))
    s_x = SampleSet(samples.n_qubits, dict(zip(configs[~ok].tolist(), counts[~ok].tolist())))
    return s_n, s_x


def flip_weight(y: float, h: float = 0.8, delta: float = 0.2) -> float:
    """Piecewise-linear flip probability: delta*y/h below h, linear up to 1 at y=1."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"discrepancy {y} outside [0, 1]")
    if y <= h:
        return delta * (y / h)
    return delta + (1.0 - delta) * (y - h) / (1.0 - h)


def _block_retention(n: int, k: int, p: float) -> float:
    # equal numbers of 1->0 and 0->1 flips inside one block
    q = 1.0 - p
    return sum(
        comb(k, j) * p**j * q ** (k - j) * comb(n - k, j) * p**j * q ** (n - k - j)
        for j in range(min(k, n - k) + 1)
    )


def analytic_retention(sector: SectorSpec, p: float) -> float:
    """Probability that an in-sector string survives independent readout flips with prob ``p``."""
    n = sector.n_spatial
    return _block_retention(n, sector.n_up, p) * _block_retention(n, sector.n_down, p)


def _occupations(configs: np.ndarray, weights: np.ndarray, n_qubits: int) -> np.ndarray:
    bits = (configs[:, None] >> np.arange(n_qubits, dtype=np.int64)) & 1
    return weights @ bits


def batch_occupations(
    s_n: SampleSet,
    h: PauliSum,
    batches: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Spin-orbital occupations averaged over the ground states of random S_N batches.

    Unique configurations are ordered by count-weighted sampling without
    replacement and split into ``batches`` contiguous chunks; empty chunks are
    skipped and the average runs over the non-empty ones.
    """
    configs, counts = s_n.arrays()
    if len(configs) == 0:
        raise ValueError("S_N is empty")
    order = rng.choice(len(configs), size=len(configs), replace=False, p=counts / counts.sum())
    chunks = [c for c in np.array_split(configs[order], batches) if len(c)]
    occ = np.zeros(s_n.n_qubits)
    for chunk in chunks:
        res = solve(h, chunk)
        occ += _occupations(chunk, res.coefficients**2, s_n.n_qubits)
    return np.clip(occ / len(chunks), 0.0, 1.0)


@dataclass
class RecoveryResult:
    kept: SampleSet
    recovered: SampleSet
    unrecovered: SampleSet
    passes: int
    energy: float = float("nan")
    repetition: int = 0
    occupations: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def combined(self) -> SampleSet:
        return self.kept.merged(self.recovered)

    @property
    def unrecovered_shots(self) -> int:
        return self.unrecovered.shots

    def to_text(self) -> str:
        """Lines ``bits count origin`` with origin ``kept`` or ``recovered``."""
        n = self.kept.n_qubits
        lines = []
        for origin, ss in (("kept", self.kept), ("recovered", self.recovered)):
            for cfg, cnt in sorted(ss.counts.items()):
                lines.append(f"{config_to_bits(cfg, n)} {cnt} {origin}")
        return "\n".join(lines) + "\n"


def recovered_from_text(text: str) -> tuple[SampleSet, SampleSet]:
    """Parse a ``bits count origin`` dump into (kept, recovered)."""
    sets: dict[str, dict[int, int]] = {"kept": {}, "recovered": {}}
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3 or parts[2] not in sets:
            raise ValueError(f"line {lineno}: expected 'bits count origin'")
        width = len(parts[0])
        cfg = bits_to_config(parts[0])
        sets[parts[2]][cfg] = sets[parts[2]].get(cfg, 0) + int(parts[1])
    width = width or 0
    return SampleSet(width, sets["kept"]), SampleSet(width, sets["recovered"])


def sccr_once(
    s_n: SampleSet,
    s_x: SampleSet,
    h: PauliSum,
    sector: SectorSpec,
    cfg: RecoveryConfig,
    rng: np.random.Generator,
) -> RecoveryResult:
    """One self-consistent recovery run; every S_X shot is repaired independently."""
    if not s_n:
        raise ValueError("S_N is empty; nothing to learn occupations from")
    n = sector.n_spatial
    current = s_n
    recovered: dict[int, int] = {}
    pending = s_x.expand()
    passes = 0
    occ = np.zeros(sector.n_qubits)
    while len(pending) and passes < cfg.max_passes:
        passes += 1
        occ = batch_occupations(current, h, cfg.batches, rng)
        uniforms = rng.random(len(pending) * 4 * n)
        fixed = kernels.recover_strings(
            pending, occ, n, sector.n_up, sector.n_down, cfg.h, cfg.delta, uniforms,
            cfg.mode == "single_attempt",
        )
        ok = sector.contains(fixed)
        new = SampleSet.from_configs(sector.n_qubits, fixed[ok].tolist())
        for c, k in new.counts.items():
            recovered[c] = recovered.get(c, 0) + k
        current = current.merged(new)
        pending = fixed[~ok]
    unrecovered = SampleSet.from_configs(sector.n_qubits, pending.tolist())
    if unrecovered:
        log.warning("%d strings left unrecovered after %d passes", unrecovered.shots, passes)
    return RecoveryResult(
        kept=s_n,
        recovered=SampleSet(sector.n_qubits, recovered),
        unrecovered=unrecovered,
        passes=passes,
        occupations=occ,
    )


def sccr_recover(
    s_n: SampleSet,
    s_x: SampleSet,
    h: PauliSum,
    sector: SectorSpec,
    cfg: RecoveryConfig = RecoveryConfig(),
    seed=None,
    workers: int = 1,
) -> RecoveryResult:
    """Run ``cfg.repetitions`` independent recoveries and keep the lowest subspace energy.

    Repetition ``r`` uses the ``r``-th child of ``SeedSequence(seed)``, so the
    outcome does not depend on ``workers``.
    """
    if not s_n:
        raise ValueError("S_N is empty; nothing to learn occupations from")
    if s_n.n_qubits != sector.n_qubits or (s_x and s_x.n_qubits != sector.n_qubits):
        raise ValueError("sample width does not match the sector")
    children = np.random.SeedSequence(seed).spawn(cfg.repetitions)

    def run(r: int) -> RecoveryResult:
        res = sccr_once(s_n, s_x, h, sector, cfg, np.random.default_rng(children[r]))
        res.energy = solve(h, res.combined.arrays()[0]).energy
        res.repetition = r
        return res

    if not s_x:
        res = run(0)
        return res
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, range(cfg.repetitions)))
    else:
        results = [run(r) for r in range(cfg.repetitions)]
    return min(results, key=lambda r: (r.energy, r.repetition))
