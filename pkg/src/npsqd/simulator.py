"""Statevector simulation, computational-basis sampling and the noise model."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels

GATE_KINDS = ("givens", "cz", "r", "rz", "rxx")
TWO_QUBIT_KINDS = ("givens", "cz", "rxx")

_PAULI_1Q = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class Gate:
    """A circuit gate; angles in radians.

    ``givens``: (q_a, q_b), params (2*theta,)
    ``cz``: (q_a, q_b)
    ``r``: (q,), params (theta, phi) for exp(-i theta/2 (X cos phi + Y sin phi))
    ``rz``: (q,), params (lambda,) for diag(1, e^{i lambda})
    ``rxx``: (q_a, q_b), params (alpha,) for exp(-i alpha/2 X X)
    """

    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        nq = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(self.qubits) != nq:
            raise ValueError(f"{self.kind} acts on {nq} qubit(s)")
        if nq == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError("two-qubit gate needs distinct qubits")
        if any(q < 0 for q in self.qubits):
            raise ValueError("negative qubit index")
        n_params = {"givens": 1, "cz": 0, "r": 2, "rz": 1, "rxx": 1}[self.kind]
        if len(self.params) != n_params:
            raise ValueError(f"{self.kind} takes {n_params} parameter(s)")

    @classmethod
    def givens(cls, qa: int, qb: int, angle: float) -> Gate:
        return cls("givens", (qa, qb), (float(angle),))

    @classmethod
    def cz(cls, qa: int, qb: int) -> Gate:
        return cls("cz", (qa, qb))

    @classmethod
    def r(cls, q: int, theta: float, phi: float) -> Gate:
        return cls("r", (q,), (float(theta), float(phi)))

    @classmethod
    def rz(cls, q: int, lam: float) -> Gate:
        return cls("rz", (q,), (float(lam),))

    @classmethod
    def rxx(cls, qa: int, qb: int, angle: float) -> Gate:
        return cls("rxx", (qa, qb), (float(angle),))

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in TWO_QUBIT_KINDS


def r_matrix(theta: float, phi: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [[c, -1j * s * np.exp(-1j * phi)], [-1j * s * np.exp(1j * phi), c]], dtype=complex
    )


def rz_matrix(lam: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(1j * lam)]], dtype=complex)


def gate_matrix(gate: Gate) -> np.ndarray:
    """Local unitary; two-qubit matrices use basis |q_a q_b> with q_a most significant."""
    if gate.kind == "r":
        return r_matrix(*gate.params)
    if gate.kind == "rz":
        return rz_matrix(gate.params[0])
    if gate.kind == "cz":
        return np.diag([1, 1, 1, -1]).astype(complex)
    if gate.kind == "givens":
        theta = gate.params[0] / 2
        c, s = np.cos(theta), np.sin(theta)
        m = np.eye(4, dtype=complex)
        m[1, 1], m[1, 2], m[2, 1], m[2, 2] = c, s, -s, c
        return m
    alpha = gate.params[0]
    xx = np.kron(_PAULI_1Q[1], _PAULI_1Q[1])
    return np.cos(alpha / 2) * np.eye(4) - 1j * np.sin(alpha / 2) * xx


def embed_gate(gate: Gate, n_qubits: int) -> np.ndarray:
    """Dense 2^N x 2^N matrix of a gate (oracle path only)."""
    local = gate_matrix(gate)
    dim = 1 << n_qubits
    idx = np.arange(dim)
    qs = gate.qubits
    k = len(qs)
    # local index: first listed qubit is the most significant local bit
    loc = np.zeros(dim, dtype=np.int64)
    for pos, q in enumerate(qs):
        loc |= ((idx >> q) & 1) << (k - 1 - pos)
    clear = idx.copy()
    for q in qs:
        clear &= ~(1 << q)
    full = np.zeros((dim, dim), dtype=complex)
    for r in range(1 << k):
        rows = clear.copy()
        for pos, q in enumerate(qs):
            rows |= ((r >> (k - 1 - pos)) & 1) << q
        full[rows, idx] += local[r, loc]
    return full


def circuit_unitary(gates: Iterable[Gate], n_qubits: int) -> np.ndarray:
    u = np.eye(1 << n_qubits, dtype=complex)
    for g in gates:
        u = embed_gate(g, n_qubits) @ u
    return u


class StateVector:
    """2^N complex amplitudes; index bit q is the state of qubit q."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, n_qubits: int, amplitudes: np.ndarray | None = None):
        self.n_qubits = n_qubits
        if amplitudes is None:
            amplitudes = np.zeros(1 << n_qubits, dtype=complex)
            amplitudes[0] = 1.0
        amplitudes = np.ascontiguousarray(amplitudes, dtype=complex)
        if amplitudes.shape != (1 << n_qubits,):
            raise ValueError(f"expected {1 << n_qubits} amplitudes")
        self.amplitudes = amplitudes

    @classmethod
    def basis(cls, n_qubits: int, config: int) -> StateVector:
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[config] = 1.0
        return cls(n_qubits, amps)

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def apply_gate(state: StateVector, g: Gate) -> StateVector:
    """Apply ``g`` in place and return ``state``."""
    if max(g.qubits) >= state.n_qubits:
        raise ValueError(f"gate {g} exceeds {state.n_qubits} qubits")
    amps = state.amplitudes
    if g.kind == "givens":
        theta = g.params[0] / 2
        kernels.apply_givens(amps, g.qubits[0], g.qubits[1], np.cos(theta), np.sin(theta))
    elif g.kind == "cz":
        kernels.apply_cz(amps, g.qubits[0], g.qubits[1])
    elif g.kind == "rxx":
        kernels.apply_rxx(amps, g.qubits[0], g.qubits[1], g.params[0])
    elif g.kind == "r":
        kernels.apply_one_qubit(amps, g.qubits[0], r_matrix(*g.params))
    else:
        kernels.apply_one_qubit(amps, g.qubits[0], rz_matrix(g.params[0]))
    return state


def _apply_pauli_error(state: StateVector, qa: int, qb: int, code: int) -> None:
    pa, pb = divmod(code, 4)
    if pa:
        kernels.apply_one_qubit(state.amplitudes, qa, _PAULI_1Q[pa])
    if pb:
        kernels.apply_one_qubit(state.amplitudes, qb, _PAULI_1Q[pb])


def run_circuit(
    state: StateVector, gates: Sequence[Gate], errors: dict[int, int] | None = None
) -> StateVector:
    """Apply gates in order; ``errors`` maps gate position to a two-qubit Pauli code (1..15)."""
    for pos, g in enumerate(gates):
        apply_gate(state, g)
        if errors and pos in errors:
            _apply_pauli_error(state, g.qubits[0], g.qubits[1], errors[pos])
    return state


@dataclass(frozen=True)
class NoiseConfig:
    """Classical readout flips plus optional depolarizing errors after two-qubit gates."""

    readout_flip_p: float = 0.0
    two_qubit_depolarizing_p: float = 0.0

    def __post_init__(self):
        for name in ("readout_flip_p", "two_qubit_depolarizing_p"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @property
    def is_noiseless(self) -> bool:
        return self.readout_flip_p == 0.0 and self.two_qubit_depolarizing_p == 0.0


NOISELESS = NoiseConfig()


def config_to_bits(config: int, n_qubits: int) -> str:
    """Character q is the occupation of qubit q."""
    return "".join("1" if (config >> q) & 1 else "0" for q in range(n_qubits))


def bits_to_config(bits: str) -> int:
    bits = bits.replace(" ", "")
    if set(bits) - {"0", "1"}:
        raise ValueError(f"invalid bitstring {bits!r}")
    return sum(1 << q for q, ch in enumerate(bits) if ch == "1")


@dataclass
class SampleSet:
    """Multiset of measured configurations."""

    n_qubits: int
    counts: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.counts = {int(k): int(v) for k, v in self.counts.items() if v > 0}

    @classmethod
    def from_configs(cls, n_qubits: int, configs: Iterable[int]) -> SampleSet:
        arr = np.asarray(list(configs) if not isinstance(configs, np.ndarray) else configs)
        if arr.size == 0:
            return cls(n_qubits, {})
        uniq, cnt = np.unique(arr.astype(np.int64), return_counts=True)
        return cls(n_qubits, dict(zip(uniq.tolist(), cnt.tolist())))

    @property
    def shots(self) -> int:
        return sum(self.counts.values())

    def __len__(self) -> int:
        return len(self.counts)

    def __bool__(self) -> bool:
        return bool(self.counts)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted unique configurations and their counts."""
        keys = sorted(self.counts)
        return np.array(keys, dtype=np.int64), np.array([self.counts[k] for k in keys], dtype=np.int64)

    def expand(self) -> np.ndarray:
        """One entry per shot, sorted."""
        configs, counts = self.arrays()
        return np.repeat(configs, counts)

    def merged(self, other: SampleSet) -> SampleSet:
        c = Counter(self.counts)
        c.update(other.counts)
        return SampleSet(self.n_qubits, dict(c))

    def to_text(self) -> str:
        return "".join(
            f"{config_to_bits(k, self.n_qubits)} {v}\n" for k, v in sorted(self.counts.items())
        )

    @classmethod
    def from_text(cls, text: str) -> SampleSet:
        counts: Counter[int] = Counter()
        n = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ValueError(f"line {lineno}: expected 'bits count'")
            n = len(parts[0]) if n is None else n
            if len(parts[0]) != n:
                raise ValueError(f"line {lineno}: inconsistent bit width")
            counts[bits_to_config(parts[0])] += int(parts[1])
        if n is None:
            raise ValueError("no samples in input")
        return cls(n, dict(counts))


def exact_distribution(state: StateVector, cutoff: float = 1e-16) -> dict[int, float]:
    probs = state.probabilities()
    nz = np.nonzero(probs >= cutoff)[0]
    return {int(i): float(probs[i]) for i in nz}


def _readout_flips(configs: np.ndarray, n_qubits: int, p: float, rng: np.random.Generator) -> np.ndarray:
    if p == 0.0:
        return configs
    flips = rng.random((len(configs), n_qubits)) < p
    weights = (1 << np.arange(n_qubits, dtype=np.int64))
    return configs ^ (flips.astype(np.int64) @ weights)


def _born_draw(state: StateVector, shots: int, rng: np.random.Generator) -> np.ndarray:
    probs = state.probabilities()
    support = np.nonzero(probs > 0)[0]
    cdf = np.cumsum(probs[support])
    u = rng.random(shots) * cdf[-1]
    pos = np.minimum(np.searchsorted(cdf, u, side="right"), len(support) - 1)
    return support[pos].astype(np.int64)


def sample(state: StateVector, shots: int, noise: NoiseConfig = NOISELESS, seed=None) -> SampleSet:
    """Draw Born-rule samples, then flip each bit independently with ``readout_flip_p``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    configs = _born_draw(state, shots, rng)
    configs = _readout_flips(configs, state.n_qubits, noise.readout_flip_p, rng)
    return SampleSet.from_configs(state.n_qubits, configs)


def sample_circuit(
    initial: StateVector,
    gates: Sequence[Gate],
    shots: int,
    noise: NoiseConfig = NOISELESS,
    seed=None,
) -> SampleSet:
    """Execute ``gates`` shot by shot with depolarizing insertions, then sample.

    Shots sharing the same error pattern are simulated once.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    p = noise.two_qubit_depolarizing_p
    two_q = [i for i, g in enumerate(gates) if g.is_two_qubit]
    if p == 0.0 or not two_q:
        patterns = {(): shots}
    else:
        hit = rng.random((shots, len(two_q))) < p
        codes = rng.integers(1, 16, size=(shots, len(two_q)))
        codes = np.where(hit, codes, 0)
        patterns = Counter(tuple(row) for row in codes.tolist())
        patterns = {k: patterns[k] for k in sorted(patterns)}
    draws = []
    for pattern, count in patterns.items():
        errors = {two_q[i]: c for i, c in enumerate(pattern) if c}
        state = run_circuit(initial.copy(), gates, errors)
        draws.append(_born_draw(state, count, rng))
    configs = _readout_flips(np.concatenate(draws), initial.n_qubits, noise.readout_flip_p, rng)
    return SampleSet.from_configs(initial.n_qubits, configs)
