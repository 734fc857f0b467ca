"""Lowering to the trapped-ion native gate set and single-qubit gate reduction.

Native gates are ``R(q, theta, phi)``, the virtual ``RZ(q, lambda)`` and the
fixed-angle Molmer-Sorensen gate ``RXX(q_a, q_b, -pi/2)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import pi
from typing import Iterable, Sequence

import numpy as np

from .ansatz import circuit_from_text, circuit_to_text
from .simulator import Gate, gate_matrix

MS_ANGLE = -pi / 2
PRUNE_THRESHOLD = 1e-3
_ZERO = 1e-12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _is_ms(angle: float) -> bool:
    return abs(_wrap(angle - MS_ANGLE)) < 1e-12


@dataclass
class NativeCircuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        for g in self.gates:
            if g.kind not in ("r", "rz", "rxx"):
                raise ValueError(f"{g.kind} is not a native gate")
            if g.kind == "rxx" and not _is_ms(g.params[0]):
                raise ValueError(f"RXX angle {g.params[0]} is not -pi/2")
            if max(g.qubits) >= self.n_qubits:
                raise ValueError(f"gate {g} exceeds {self.n_qubits} qubits")

    def __len__(self) -> int:
        return len(self.gates)


def _givens_native(qa: int, qb: int, angle: float) -> list[Gate]:
    # Conjugating by MS turns Z_a - Z_b into Y_a X_b - X_a Y_b (the Givens generator);
    # the leading X flips absorb MS^dagger = MS (X_a X_b) up to phase.
    half = angle / 2
    return [
        Gate.r(qa, pi, 0.0),
        Gate.r(qb, pi, 0.0),
        Gate.rxx(qa, qb, MS_ANGLE),
        Gate.rz(qa, -half),
        Gate.rz(qb, half),
        Gate.rxx(qa, qb, MS_ANGLE),
    ]


def _cz_native(qa: int, qb: int) -> list[Gate]:
    return [
        Gate.r(qa, pi / 2, pi / 2),
        Gate.r(qb, pi / 2, pi / 2),
        Gate.rxx(qa, qb, MS_ANGLE),
        Gate.r(qa, -pi / 2, pi / 2),
        Gate.r(qb, -pi / 2, pi / 2),
        Gate.rz(qa, pi / 2),
        Gate.rz(qb, pi / 2),
    ]


def _rxx_native(qa: int, qb: int, angle: float) -> list[Gate]:
    if _is_ms(angle):
        return [Gate.rxx(qa, qb, MS_ANGLE)]
    # exp(-i a/2 XX) = W MS exp(-i a/2 Z_a) MS^dagger W^dagger with W: Y_a -> X_a.
    return [
        Gate.rz(qa, pi / 2),
        Gate.r(qa, pi, 0.0),
        Gate.r(qb, pi, 0.0),
        Gate.rxx(qa, qb, MS_ANGLE),
        Gate.rz(qa, angle),
        Gate.rxx(qa, qb, MS_ANGLE),
        Gate.rz(qa, -pi / 2),
    ]


def decompose_to_native(circuit: Iterable[Gate], n_qubits: int | None = None) -> NativeCircuit:
    """Replace Givens, CZ and arbitrary-angle RXX gates by native sequences."""
    circuit = list(circuit)
    out: list[Gate] = []
    for g in circuit:
        if g.kind == "givens":
            out.extend(_givens_native(*g.qubits, g.params[0]))
        elif g.kind == "cz":
            out.extend(_cz_native(*g.qubits))
        elif g.kind == "rxx":
            out.extend(_rxx_native(*g.qubits, g.params[0]))
        elif g.kind in ("r", "rz"):
            out.append(g)
        else:
            raise ValueError(f"unknown gate kind {g.kind!r}")
    if n_qubits is None:
        n_qubits = 1 + max((q for g in circuit for q in g.qubits), default=-1)
    return NativeCircuit(n_qubits, out)


def _wrap(angle: float) -> float:
    """Map to (-pi, pi]."""
    a = (angle + pi) % (2 * pi) - pi
    if a <= -pi + 1e-15:
        a = pi
    return 0.0 if abs(a) < _ZERO else a


def _zxz(u: np.ndarray) -> tuple[float, float, float]:
    """Angles with u = RZ(a) RX(b) RZ(c) up to phase, b in [0, pi], c in (-pi/2, pi/2].

    RZ and RX here are the half-angle rotations exp(-i x/2 Z), exp(-i x/2 X).
    """
    v = u / np.sqrt(np.linalg.det(u))
    b = 2.0 * np.arctan2(abs(v[1, 0]), abs(v[0, 0]))
    if abs(np.sin(b / 2)) < 1e-10:
        a, c = 2.0 * np.angle(v[1, 1]), 0.0
    elif abs(np.cos(b / 2)) < 1e-10:
        a, c = 2.0 * np.angle(1j * v[1, 0]), 0.0
    else:
        s = 2.0 * np.angle(v[1, 1])
        d = 2.0 * np.angle(1j * v[1, 0])
        a, c = (s + d) / 2, (s - d) / 2
    c = _wrap(c)
    if c > pi / 2 or c <= -pi / 2:
        # RZ(a) RX(b) RZ(c) = RZ(a + pi) RX(-b) RZ(c - pi) up to phase
        a, b, c = a + pi, -b, c - pi
    return _wrap(a), _wrap(b), _wrap(c)


def _r_gate(q: int, theta: float, phi: float) -> Gate:
    theta, phi = _wrap(theta), _wrap(phi)
    if theta < 0:
        theta, phi = -theta, _wrap(phi + pi)
    if theta == 0.0:
        phi = 0.0
    return Gate.r(q, theta, phi)


def _emit_final(q: int, u: np.ndarray) -> list[Gate]:
    # RZ(a) RX(b) RZ(c) = R(b, a) RZ(a + c)
    a, b, c = _zxz(u)
    gates = []
    lam = _wrap(a + c)
    if lam != 0.0:
        gates.append(Gate.rz(q, lam))
    r = _r_gate(q, b, a)
    if r.params[0] != 0.0:
        gates.append(r)
    return gates


def _split_for_rxx(q: int, u: np.ndarray) -> tuple[list[Gate], np.ndarray]:
    """Emit u = RX(a) RZ(b) RX(c) as R(c, 0), RZ(b); RX(a) is returned to commute onward."""
    a, b, c = _zxz(_H @ u @ _H)
    gates = []
    if c != 0.0:
        gates.append(_r_gate(q, c, 0.0))
    if b != 0.0:
        gates.append(Gate.rz(q, b))
    return gates, gate_matrix(Gate.r(0, a, 0.0))


def _merge_pass(nc: NativeCircuit) -> list[Gate]:
    pending: dict[int, np.ndarray] = {}
    out: list[Gate] = []
    for g in nc.gates:
        if g.kind == "rxx":
            for q in g.qubits:
                u = pending.pop(q, None)
                if u is not None:
                    emitted, carry = _split_for_rxx(q, u)
                    out.extend(emitted)
                    pending[q] = carry
            out.append(g)
        else:
            q = g.qubits[0]
            pending[q] = gate_matrix(g) @ pending.get(q, np.eye(2, dtype=complex))
    for q in sorted(pending):
        out.extend(_emit_final(q, pending[q]))
    return out


def _prune(gates: Sequence[Gate], threshold: float) -> tuple[list[Gate], int]:
    kept = [g for g in gates if not (g.kind == "r" and abs(g.params[0]) < threshold)]
    return kept, len(gates) - len(kept)


def _same(a: Sequence[Gate], b: Sequence[Gate]) -> bool:
    return len(a) == len(b) and all(
        x.kind == y.kind
        and x.qubits == y.qubits
        and all(abs(p - r) < 1e-12 for p, r in zip(x.params, y.params))
        for x, y in zip(a, b)
    )


def optimize_native(
    nc: NativeCircuit,
    prune: bool = True,
    threshold: float = PRUNE_THRESHOLD,
    max_rounds: int = 20,
) -> NativeCircuit:
    """Fuse single-qubit runs, commute X rotations through RXX and prune small R gates.

    Each round is a forward sweep that keeps one pending 2x2 unitary per
    qubit. At an RXX the pending unitary is split as RX(a) RZ(b) RX(c): the
    RX(c), RZ(b) part is emitted before the RXX and RX(a), which commutes
    with X X, is carried past it. Rounds repeat until the gate list is
    stable, so the result is a fixed point of this function.
    """
    return optimize_with_pruned(nc, prune, threshold, max_rounds)[0]


def optimize_with_pruned(
    nc: NativeCircuit,
    prune: bool = True,
    threshold: float = PRUNE_THRESHOLD,
    max_rounds: int = 20,
) -> tuple[NativeCircuit, int]:
    """Like :func:`optimize_native`, also returning how many R gates were dropped."""
    gates = list(nc.gates)
    dropped = 0
    if prune:
        # small input rotations go first, before merging smears them onto other axes
        gates, dropped = _prune(gates, threshold)
    for _ in range(max_rounds):
        new = _merge_pass(NativeCircuit(nc.n_qubits, gates))
        if prune:
            new, k = _prune(new, threshold)
            dropped += k
        if _same(new, gates):
            return NativeCircuit(nc.n_qubits, gates), dropped
        gates = new
    return NativeCircuit(nc.n_qubits, gates), dropped


def count_pruned(nc: NativeCircuit, threshold: float = PRUNE_THRESHOLD) -> int:
    return sum(1 for g in nc.gates if g.kind == "r" and abs(g.params[0]) < threshold)


def gate_counts(nc: NativeCircuit | Sequence[Gate]) -> dict[str, int]:
    gates = nc.gates if isinstance(nc, NativeCircuit) else nc
    counts = {"rxx": 0, "r": 0, "rz": 0}
    for g in gates:
        if g.kind not in counts:
            raise ValueError(f"{g.kind} is not a native gate")
        counts[g.kind] += 1
    return counts


def native_to_text(nc: NativeCircuit) -> str:
    return circuit_to_text(nc.gates, nc.n_qubits)


def native_from_text(text: str) -> NativeCircuit:
    gates, n_qubits = circuit_from_text(text)
    return NativeCircuit(n_qubits, gates)


def counts_to_json(nc: NativeCircuit) -> str:
    return json.dumps(gate_counts(nc), sort_keys=True)
