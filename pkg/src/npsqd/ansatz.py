"""Hartree-Fock initial state and the layered number-preserving circuit."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .simulator import Gate, StateVector


@dataclass(frozen=True)
class AnsatzTemplate:
    n_spatial: int
    n_up: int
    n_down: int
    layers: int = 1

    def __post_init__(self):
        if self.n_spatial < 1:
            raise ValueError("n_spatial must be >= 1")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if not (0 <= self.n_up <= self.n_spatial and 0 <= self.n_down <= self.n_spatial):
            raise ValueError("electron counts must lie in [0, n_spatial]")

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_spatial

    @property
    def rotations_per_block(self) -> int:
        return comb(self.n_spatial, 2)

    @property
    def n_params(self) -> int:
        return self.layers * 2 * self.rotations_per_block


def givens_pairs(n_spatial: int) -> list[tuple[int, int]]:
    """All orbital pairs, nearest-neighbour diagonal first: (0,1),(1,2),...,(0,2),...,(0,n-1)."""
    return [(i, i + d) for d in range(1, n_spatial) for i in range(n_spatial - d)]


def hf_configuration(template: AnsatzTemplate) -> int:
    """Lowest orbitals of each spin block occupied."""
    n = template.n_spatial
    up = (1 << template.n_up) - 1
    down = ((1 << template.n_down) - 1) << n
    return up | down


def build_circuit(template: AnsatzTemplate, params: Sequence[float]) -> list[Gate]:
    """Gates of the layered ansatz.

    ``params`` are the rotation angles theta of G(2 theta), ordered
    layer-major, up block before down block, pairs as in ``givens_pairs``.
    Each layer ends with CZ(i, i + n) for every spatial orbital i.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (template.n_params,):
        raise ValueError(f"expected {template.n_params} parameters, got {params.size}")
    n = template.n_spatial
    pairs = givens_pairs(n)
    per_block = len(pairs)
    gates: list[Gate] = []
    k = 0
    for _ in range(template.layers):
        for off in (0, n):
            for a, b in pairs:
                gates.append(Gate.givens(a + off, b + off, 2.0 * params[k]))
                k += 1
        gates.extend(Gate.cz(i, i + n) for i in range(n))
    assert k == template.layers * 2 * per_block
    return gates


class AnsatzExecutor:
    """Maps a parameter vector to (initial state, gate list) for simulation."""

    def __init__(self, template: AnsatzTemplate):
        self.template = template
        self.n_qubits = template.n_qubits
        self.n_params = template.n_params

    def prepare(self, params: Sequence[float]) -> tuple[StateVector, list[Gate]]:
        initial = StateVector.basis(self.n_qubits, hf_configuration(self.template))
        return initial, build_circuit(self.template, params)


_TEXT_NAMES = {"givens": "GIVENS", "cz": "CZ", "r": "R", "rz": "RZ", "rxx": "RXX"}
_TEXT_KINDS = {v: k for k, v in _TEXT_NAMES.items()}


def circuit_to_text(gates: Sequence[Gate], n_qubits: int | None = None) -> str:
    """Line format: ``GIVENS qa qb angle``, ``CZ qa qb``, ``R q theta phi``, ``RZ q lam``, ``RXX qa qb angle``."""
    lines = []
    if n_qubits is not None:
        lines.append(f"# qubits {n_qubits}")
    for g in gates:
        fields = [_TEXT_NAMES[g.kind], *map(str, g.qubits), *(repr(float(p)) for p in g.params)]
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> tuple[list[Gate], int]:
    """Parse the line format; returns gates and the qubit count (header or inferred)."""
    gates = []
    n_qubits = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            parts = stripped[1:].split()
            if len(parts) == 2 and parts[0] == "qubits":
                n_qubits = int(parts[1])
            continue
        name, *rest = stripped.split()
        kind = _TEXT_KINDS.get(name.upper())
        if kind is None:
            raise ValueError(f"line {lineno}: unknown gate {name!r}")
        nq = 2 if kind in ("givens", "cz", "rxx") else 1
        try:
            qubits = tuple(int(v) for v in rest[:nq])
            params = tuple(float(v) for v in rest[nq:])
            gates.append(Gate(kind, qubits, params))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if n_qubits is None:
        n_qubits = 1 + max((q for g in gates for q in g.qubits), default=0)
    return gates, n_qubits
