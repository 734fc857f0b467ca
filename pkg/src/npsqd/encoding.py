"""Jordan-Wigner encoding and Pauli-sum matrix elements.

A Pauli string is keyed by ``(x_mask, z_mask)``: qubit ``q`` carries X if
only bit ``q`` of ``x_mask`` is set, Z if only ``z_mask`` has it, and Y if
both do. Configurations are integers whose bit ``q`` is the occupation of
spin-orbital/qubit ``q`` (little-endian, blocked spin ordering).
"""

from __future__ import annotations

from functools import cached_property
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from . import kernels
from .fermion import CREATE, FermionOperator

PRUNE_TOL = 1e-14
MAX_DENSE_QUBITS = 14

_LABELS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_FROM_LABEL = {v: k for k, v in _LABELS.items()}


def popcount(v: int) -> int:
    return bin(v).count("1")


class PauliSum:
    """Real-weighted sum of Pauli strings plus an identity offset.

    Coefficients multiply the Hermitian Pauli strings themselves (Y, not
    iXZ), so a Hermitian operator has purely real coefficients.
    """

    def __init__(
        self,
        n_qubits: int,
        terms: Mapping[tuple[int, int], float] | None = None,
        identity_offset: float = 0.0,
        tol: float = PRUNE_TOL,
    ):
        if n_qubits < 1 or n_qubits > 62:
            raise ValueError("n_qubits must be in 1..62")
        self.n_qubits = n_qubits
        full = (1 << n_qubits) - 1
        offset = float(identity_offset)
        clean: dict[tuple[int, int], float] = {}
        for (x, z), c in (terms or {}).items():
            x, z = int(x), int(z)
            if x & ~full or z & ~full or x < 0 or z < 0:
                raise ValueError(f"mask ({x:#x}, {z:#x}) exceeds {n_qubits} qubits")
            if x == 0 and z == 0:
                offset += float(c)
                continue
            clean[(x, z)] = clean.get((x, z), 0.0) + float(c)
        self.terms = {k: c for k, c in clean.items() if abs(c) >= tol}
        self.identity_offset = offset

    @classmethod
    def from_labels(cls, labels: Mapping[str, float], identity_offset: float = 0.0) -> PauliSum:
        """Build from strings like ``"ZIXY"`` where character ``q`` acts on qubit ``q``."""
        terms: dict[tuple[int, int], float] = {}
        n = None
        for label, c in labels.items():
            label = label.replace(" ", "")
            n = len(label) if n is None else n
            if len(label) != n:
                raise ValueError("all labels must have equal length")
            x = z = 0
            for q, ch in enumerate(label.upper()):
                bx, bz = _FROM_LABEL[ch]
                x |= bx << q
                z |= bz << q
            terms[(x, z)] = terms.get((x, z), 0.0) + c
        if n is None:
            raise ValueError("need at least one label")
        return cls(n, terms, identity_offset)

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, {len(self.terms)} terms)"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return (
            self.n_qubits == other.n_qubits
            and self.identity_offset == other.identity_offset
            and self.terms == other.terms
        )

    def __add__(self, other: PauliSum) -> PauliSum:
        if not isinstance(other, PauliSum):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, 0.0) + c
        return PauliSum(self.n_qubits, terms, self.identity_offset + other.identity_offset)

    def __mul__(self, scalar: float) -> PauliSum:
        return PauliSum(
            self.n_qubits,
            {k: c * scalar for k, c in self.terms.items()},
            self.identity_offset * scalar,
        )

    __rmul__ = __mul__

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self + other * -1.0

    @property
    def is_real(self) -> bool:
        """True when every string has an even number of Y factors (real matrix)."""
        return all(popcount(x & z) % 2 == 0 for x, z in self.terms)

    def diagonal_part(self) -> PauliSum:
        return PauliSum(
            self.n_qubits, {k: c for k, c in self.terms.items() if k[0] == 0}, self.identity_offset
        )

    @cached_property
    def _diag_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        zs = [z for (x, z) in self.terms if x == 0]
        cs = [c for (x, z), c in self.terms.items() if x == 0]
        return np.array([0] + zs, dtype=np.int64), np.array([self.identity_offset] + cs)

    @cached_property
    def _grouped(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Terms grouped by x_mask with the Y phase folded into real coefficients."""
        if not self.is_real:
            raise ValueError("operator has complex matrix elements; use the complex path")
        items = sorted(self.terms.items())
        by_x: dict[int, list[tuple[int, float]]] = {}
        if self.identity_offset != 0.0:
            by_x[0] = [(0, self.identity_offset)]
        for (x, z), c in items:
            sign = -1.0 if (popcount(x & z) // 2) % 2 else 1.0
            by_x.setdefault(x, []).append((z, sign * c))
        group_x = np.array(sorted(by_x), dtype=np.int64)
        ptr = [0]
        zs: list[int] = []
        cs: list[float] = []
        for x in group_x:
            for z, c in by_x[int(x)]:
                zs.append(z)
                cs.append(c)
            ptr.append(len(zs))
        return group_x, np.array(ptr, dtype=np.int64), np.array(zs, dtype=np.int64), np.array(cs)

    def diagonal_energies(self, configs) -> np.ndarray:
        """``<z|H|z>`` for an array of configurations."""
        zs, cs = self._diag_arrays
        return kernels.diag_energies(np.asarray(configs, dtype=np.int64), zs, cs)

    def to_text(self, n_spatial: int | None = None) -> str:
        """One line per term: ``coefficient label``; label character q acts on qubit q.

        With ``n_spatial`` set the label is split into spin-up and spin-down blocks.
        """
        lines = [f"{self.identity_offset:.16g} {pauli_label(0, 0, self.n_qubits, n_spatial)}"]
        for (x, z), c in sorted(self.terms.items()):
            lines.append(f"{c:.16g} {pauli_label(x, z, self.n_qubits, n_spatial)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> PauliSum:
        labels: dict[str, float] = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            coef, *label = line.split()
            key = "".join(label)
            labels[key] = labels.get(key, 0.0) + float(coef)
        return cls.from_labels(labels)


def pauli_label(x: int, z: int, n_qubits: int, n_spatial: int | None = None) -> str:
    chars = [_LABELS[((x >> q) & 1, (z >> q) & 1)] for q in range(n_qubits)]
    if n_spatial:
        return "".join(chars[:n_spatial]) + " " + "".join(chars[n_spatial:])
    return "".join(chars)


def _ladder_image(mode: int, action: int) -> tuple[tuple[int, int, float], ...]:
    """c^dag_q = 1/2 X_q (1 + Z_q) Z_{<q};  c_q = 1/2 X_q (1 - Z_q) Z_{<q}  (XZ form)."""
    below = (1 << mode) - 1
    bit = 1 << mode
    sign = 0.5 if action == CREATE else -0.5
    return ((bit, below, 0.5), (bit, below | bit, sign))


def jordan_wigner(op: FermionOperator, n_qubits: int) -> PauliSum:
    """Map a fermion operator to a Pauli sum via Jordan-Wigner.

    Raises ``ValueError`` if a mode index is out of range or the image has
    non-real coefficients (the operator is not Hermitian).
    """
    if op.max_mode >= n_qubits:
        raise ValueError(f"mode {op.max_mode} out of range for {n_qubits} qubits")
    # accumulate in XZ form: coefficient of X^x Z^z (X applied after Z per qubit)
    acc: dict[tuple[int, int], complex] = {}
    prefix_cache: dict[tuple, dict[tuple[int, int], float]] = {(): {(0, 0): 1.0}}

    def product(key: tuple) -> dict[tuple[int, int], float]:
        if key in prefix_cache:
            return prefix_cache[key]
        head = product(key[:-1])
        out: dict[tuple[int, int], float] = {}
        for (a, b), c1 in head.items():
            for cx, dz, c2 in _ladder_image(*key[-1]):
                # (X^a Z^b)(X^c Z^d) = (-1)^{|b & c|} X^{a^c} Z^{b^d}
                s = -1.0 if popcount(b & cx) & 1 else 1.0
                k = (a ^ cx, b ^ dz)
                out[k] = out.get(k, 0.0) + s * c1 * c2
        prefix_cache[key] = out
        return out

    for key, coef in op.terms.items():
        for xz, c in product(key).items():
            acc[xz] = acc.get(xz, 0.0) + coef * c

    terms: dict[tuple[int, int], float] = {}
    for (x, z), c in acc.items():
        if abs(c) < PRUNE_TOL:
            continue
        # X^x Z^z = (-i)^{|x&z|} P(x, z)
        phase = (-1j) ** (popcount(x & z) % 4)
        value = c * phase
        if abs(value.imag) > 1e-10:
            raise ValueError("Jordan-Wigner image has complex coefficients; operator not Hermitian")
        terms[(x, z)] = value.real
    return PauliSum(n_qubits, terms)


def diagonal_expectation(h: PauliSum, z: int) -> float:
    """``<z|H|z>``: identity offset plus signed diagonal coefficients."""
    total = h.identity_offset
    for (x, zm), c in h.terms.items():
        if x == 0:
            total += -c if popcount(z & zm) & 1 else c
    return total


def matrix_element(h: PauliSum, row: int, col: int) -> float | complex:
    """``<row|H|col>``; only strings with ``x_mask == row ^ col`` contribute."""
    x = row ^ col
    total: complex = h.identity_offset if x == 0 else 0.0
    for (tx, z), c in h.terms.items():
        if tx != x:
            continue
        ny = popcount(x & z)
        phase = (1j) ** (ny % 4) * (-1 if popcount(z & col) & 1 else 1)
        total += c * phase
    if isinstance(total, complex):
        return total.real if abs(total.imag) == 0 else total
    return float(total)


def project_entries(h: PauliSum, basis: np.ndarray):
    """COO triples of H restricted to ``basis`` (which must be duplicate-free)."""
    basis = np.asarray(basis, dtype=np.int64)
    order = np.argsort(basis, kind="stable")
    sorted_basis = basis[order]
    if len(sorted_basis) > 1 and np.any(sorted_basis[1:] == sorted_basis[:-1]):
        raise ValueError("basis contains duplicate configurations")
    gx, gp, tz, tc = h._grouped
    return kernels.project_coo(basis, sorted_basis, order.astype(np.int64), gx, gp, tz, tc)


def dense_matrix(h: PauliSum) -> np.ndarray:
    """Full 2^N x 2^N matrix; refuses more than 14 qubits."""
    if h.n_qubits > MAX_DENSE_QUBITS:
        raise ValueError(f"dense_matrix refuses {h.n_qubits} > {MAX_DENSE_QUBITS} qubits")
    dim = 1 << h.n_qubits
    if not h.is_real:
        mat = np.zeros((dim, dim), dtype=complex)
        for col in range(dim):
            mat[col, col] += h.identity_offset
            for (x, z), c in h.terms.items():
                ny = popcount(x & z)
                mat[col ^ x, col] += c * (1j) ** (ny % 4) * (-1 if popcount(z & col) & 1 else 1)
        return mat
    rows, cols, vals = project_entries(h, np.arange(dim, dtype=np.int64))
    mat = np.zeros((dim, dim))
    mat[rows, cols] = vals
    return mat


def sparse_matrix(h: PauliSum, basis: np.ndarray | None = None) -> sp.csr_matrix:
    """Sparse matrix over ``basis`` (default: all 2^N configurations)."""
    if basis is None:
        basis = np.arange(1 << h.n_qubits, dtype=np.int64)
    rows, cols, vals = project_entries(h, basis)
    d = len(basis)
    return sp.csr_matrix((vals, (rows, cols)), shape=(d, d))
