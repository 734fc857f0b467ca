"""Second-quantized operators, FCIDUMP ingestion and model Hamiltonians.

Spin-orbitals use blocked ordering: spatial orbital ``i`` with spin up is mode
``i`` and with spin down is mode ``i + n_spatial``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

# A ladder operator is (mode, action) with action 1 = create, 0 = annihilate.
LadderOp = tuple[int, int]
LadderString = tuple[LadderOp, ...]

CREATE = 1
ANNIHILATE = 0


class FCIDUMPError(ValueError):
    """Raised for malformed FCIDUMP input; the message names the line."""


class FermionOperator:
    """Weighted sum of products of fermionic ladder operators.

    Terms are stored as ``{ladder_string: coefficient}`` where the string is
    applied right to left, i.e. ``((2, 1), (0, 0))`` is ``c_2^dag c_0``.
    The empty string is the identity.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[LadderString, float] | None = None):
        self.terms: dict[LadderString, float] = {}
        if terms:
            for key, coef in terms.items():
                key = tuple((int(m), int(a)) for m, a in key)
                for mode, _ in key:
                    if mode < 0:
                        raise ValueError(f"negative mode index {mode}")
                if not math.isfinite(coef):
                    raise ValueError(f"non-finite coefficient for term {key}")
                self.terms[key] = self.terms.get(key, 0.0) + float(coef)

    @classmethod
    def identity(cls, coef: float = 1.0) -> FermionOperator:
        return cls({(): coef})

    @classmethod
    def term(cls, ops: Iterable[LadderOp], coef: float = 1.0) -> FermionOperator:
        return cls({tuple(ops): coef})

    @classmethod
    def number(cls, mode: int, coef: float = 1.0) -> FermionOperator:
        return cls({((mode, CREATE), (mode, ANNIHILATE)): coef})

    def __repr__(self) -> str:
        return f"FermionOperator({len(self.terms)} terms)"

    def __str__(self) -> str:
        lines = []
        for key, coef in sorted(self.terms.items()):
            label = " ".join(f"{m}^" if a else f"{m}" for m, a in key) or "I"
            lines.append(f"{coef:+.12g} [{label}]")
        return "\n".join(lines)

    def __iter__(self) -> Iterator[tuple[LadderString, float]]:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FermionOperator):
            return NotImplemented
        return self.terms == other.terms

    def copy(self) -> FermionOperator:
        out = FermionOperator()
        out.terms = dict(self.terms)
        return out

    @property
    def max_mode(self) -> int:
        """Largest mode index appearing in the operator, or -1."""
        return max((m for key in self.terms for m, _ in key), default=-1)

    def __add__(self, other: FermionOperator | float) -> FermionOperator:
        if isinstance(other, (int, float)):
            other = FermionOperator.identity(float(other))
        if not isinstance(other, FermionOperator):
            return NotImplemented
        out = self.copy()
        for key, coef in other.terms.items():
            out.terms[key] = out.terms.get(key, 0.0) + coef
        return out

    __radd__ = __add__

    def __neg__(self) -> FermionOperator:
        return self * -1.0

    def __sub__(self, other: FermionOperator | float) -> FermionOperator:
        return self + (-other)

    def __rsub__(self, other: float) -> FermionOperator:
        return (-self) + other

    def __mul__(self, other: FermionOperator | float) -> FermionOperator:
        if isinstance(other, (int, float)):
            out = FermionOperator()
            out.terms = {k: c * float(other) for k, c in self.terms.items()}
            return out
        if not isinstance(other, FermionOperator):
            return NotImplemented
        out: dict[LadderString, float] = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                key = k1 + k2
                out[key] = out.get(key, 0.0) + c1 * c2
        result = FermionOperator()
        result.terms = out
        return result

    def __rmul__(self, other: float) -> FermionOperator:
        return self * other

    def hermitian_conjugate(self) -> FermionOperator:
        out = FermionOperator()
        out.terms = {
            tuple((m, 1 - a) for m, a in reversed(key)): coef
            for key, coef in self.terms.items()
        }
        return out

    def normal_ordered(self, tol: float = 1e-14) -> FermionOperator:
        """Canonical form: creators left of annihilators, each group by descending mode.

        Identical normal-ordered strings are combined and coefficients with
        magnitude below ``tol`` are dropped, so two operators are equal iff
        their normal-ordered forms compare equal.
        """
        out: dict[LadderString, float] = {}
        for key, coef in self.terms.items():
            for nkey, ncoef in _normal_order_string(key):
                out[nkey] = out.get(nkey, 0.0) + coef * ncoef
        result = FermionOperator()
        result.terms = {k: c for k, c in out.items() if abs(c) >= tol}
        return result

    def simplify(self, tol: float = 1e-14) -> FermionOperator:
        return self.normal_ordered(tol)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        diff = (self - self.hermitian_conjugate()).normal_ordered()
        return all(abs(c) <= tol for c in diff.terms.values())


def _normal_order_string(ops: LadderString) -> list[tuple[LadderString, float]]:
    """Expand one ladder string into normal-ordered strings with signs."""
    results: dict[LadderString, float] = {}
    stack: list[tuple[list[LadderOp], float]] = [(list(ops), 1.0)]
    while stack:
        seq, sign = stack.pop()
        # Insertion sort; each transposition of distinct operators flips sign.
        for i in range(1, len(seq)):
            j = i
            while j > 0:
                left, right = seq[j - 1], seq[j]
                if _in_order(left, right):
                    if left == right:
                        # c^dag_p c^dag_p = c_p c_p = 0
                        seq = None
                    break
                if left[0] == right[0] and left[1] == ANNIHILATE and right[1] == CREATE:
                    # c_p c^dag_p = 1 - c^dag_p c_p
                    contracted = seq[: j - 1] + seq[j + 1 :]
                    stack.append((contracted, sign))
                seq[j - 1], seq[j] = right, left
                sign = -sign
                j -= 1
            if seq is None:
                break
        if seq is None:
            continue
        key = tuple(seq)
        results[key] = results.get(key, 0.0) + sign
    return list(results.items())


def _in_order(left: LadderOp, right: LadderOp) -> bool:
    # creators before annihilators; within a kind, higher mode first
    if left[1] != right[1]:
        return left[1] == CREATE
    return left[0] >= right[0]


@dataclass(frozen=True)
class FermionHamiltonian:
    """Active-space Hamiltonian in spatial-orbital integrals.

    ``two_body[p, q, r, s]`` holds the chemists'-notation integral (pq|rs).
    The operator is

        core + sum_{pq,s} h_pq c^dag_{ps} c_{qs}
             + 1/2 sum_{pqrs,st} (pq|rs) c^dag_{ps} c^dag_{rt} c_{st} c_{qs}

    which is the two-body sum ``t_ijkl c^dag_i c^dag_j c_k c_l`` (i, k sharing
    one spin and j, l the other) with ``t_ijkl = -1/2 (ik|jl)``; the sign comes
    from ordering the annihilators as ``c_k c_l`` instead of ``c_l c_k``.
    """

    n_spatial: int
    n_up: int
    n_down: int
    core_energy: float
    one_body: np.ndarray = field(repr=False)
    two_body: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.n_spatial
        if n < 1:
            raise ValueError("n_spatial must be >= 1")
        if self.one_body.shape != (n, n):
            raise ValueError(f"one_body must have shape {(n, n)}")
        if self.two_body.shape != (n, n, n, n):
            raise ValueError(f"two_body must have shape {(n,) * 4}")
        if not np.allclose(self.one_body, self.one_body.T, atol=1e-12, rtol=0):
            raise ValueError("one_body integrals are not symmetric")
        if not _has_eightfold_symmetry(self.two_body):
            raise ValueError("two_body integrals lack 8-fold permutational symmetry")
        if self.n_up < 0 or self.n_down < 0 or self.n_up > n or self.n_down > n:
            raise ValueError("electron counts must lie in [0, n_spatial] per spin")

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_spatial

    def to_operator(self, tol: float = 1e-14) -> FermionOperator:
        n = self.n_spatial
        terms: dict[LadderString, float] = {}
        if self.core_energy != 0.0:
            terms[()] = float(self.core_energy)
        for spin in (0, 1):
            off = spin * n
            for p in range(n):
                for q in range(n):
                    v = self.one_body[p, q]
                    if abs(v) > tol:
                        key = ((p + off, CREATE), (q + off, ANNIHILATE))
                        terms[key] = terms.get(key, 0.0) + v
        nz = np.argwhere(np.abs(self.two_body) > tol)
        for p, q, r, s in nz:
            v = 0.5 * self.two_body[p, q, r, s]
            for s1 in (0, 1):
                for s2 in (0, 1):
                    a, b = p + s1 * n, r + s2 * n
                    c, d = s + s2 * n, q + s1 * n
                    if a == b or c == d:
                        continue
                    key = ((a, CREATE), (b, CREATE), (c, ANNIHILATE), (d, ANNIHILATE))
                    terms[key] = terms.get(key, 0.0) + v
        return FermionOperator(terms).normal_ordered(tol)


def _has_eightfold_symmetry(eri: np.ndarray, tol: float = 1e-10) -> bool:
    perms = [
        (1, 0, 2, 3),
        (0, 1, 3, 2),
        (2, 3, 0, 1),
    ]
    return all(np.allclose(eri, eri.transpose(p), atol=tol, rtol=0) for p in perms)


@dataclass(frozen=True)
class SpinPenalty:
    """Penalty ``strength * (s0_squared - S^2)^2`` added to the Hamiltonian."""

    strength: float = 0.01
    s0_squared: float = 0.75

    def __post_init__(self):
        if not self.strength >= 0:
            raise ValueError("penalty strength must be non-negative")
        # s(s+1) with 2s integer >= 0  <=>  4*s0^2 + 1 is an odd perfect square
        twice_s = (math.sqrt(4 * self.s0_squared + 1) - 1)
        if twice_s < -1e-12 or abs(twice_s - round(twice_s)) > 1e-9:
            raise ValueError(f"s0_squared={self.s0_squared} is not of the form s(s+1)")

    @classmethod
    def for_spin(cls, spin: float | Fraction, strength: float = 0.01) -> SpinPenalty:
        s = float(spin)
        return cls(strength=strength, s0_squared=s * (s + 1))


def spin_squared_target(n_up: int, n_down: int) -> float:
    """Lowest total-spin value s(s+1) compatible with the spin projection."""
    s = abs(n_up - n_down) / 2
    return s * (s + 1)


def number_operator(n_spatial: int, spin: int) -> FermionOperator:
    """Total particle number of one spin sector (0 = up, 1 = down)."""
    off = spin * n_spatial
    return FermionOperator(
        {((i + off, CREATE), (i + off, ANNIHILATE)): 1.0 for i in range(n_spatial)}
    )


def build_spin_squared(n_spatial: int) -> FermionOperator:
    """Total spin squared as a sum of ladder strings.

    S^2 = sum_ij c_{i,up} c^dag_{j,up} c^dag_{i,dn} c_{j,dn}
          + (n_up - n_dn)/2 + (n_up - n_dn)^2/4
    """
    if n_spatial < 1:
        raise ValueError("n_spatial must be >= 1")
    n = n_spatial
    flip = FermionOperator()
    for i in range(n):
        for j in range(n):
            key = ((i, ANNIHILATE), (j, CREATE), (i + n, CREATE), (j + n, ANNIHILATE))
            flip.terms[key] = flip.terms.get(key, 0.0) + 1.0
    sz2 = number_operator(n, 0) - number_operator(n, 1)  # 2 S_z
    s2 = flip + sz2 * 0.5 + (sz2 * sz2) * 0.25
    return s2.normal_ordered()


def penalize(
    h_el: FermionOperator, s2: FermionOperator, penalty: SpinPenalty
) -> FermionOperator:
    """Return ``h_el + M (s0^2 - S^2)^2`` with the square expanded exactly."""
    if penalty.strength == 0:
        return h_el.normal_ordered()
    if h_el.max_mode > s2.max_mode:
        raise ValueError("H_el acts on modes beyond the S^2 operator")
    diff = FermionOperator.identity(penalty.s0_squared) - s2
    sq = (diff * diff).normal_ordered()
    return (h_el + sq * penalty.strength).normal_ordered()


def make_hubbard_chain(
    L: int, t: float, U: float, n_up: int | None = None, n_down: int | None = None
) -> FermionHamiltonian:
    """Open-boundary Hubbard chain with hopping ``-t`` and on-site repulsion ``U``.

    The on-site term U n_up n_dn is stored as the integral (ii|ii) = U.
    Filling defaults to half filling split as evenly as possible, up first.
    """
    if L < 2:
        raise ValueError("Hubbard chain needs at least 2 sites")
    if n_up is None:
        n_up = (L + 1) // 2
    if n_down is None:
        n_down = L // 2
    one = np.zeros((L, L))
    for i in range(L - 1):
        one[i, i + 1] = one[i + 1, i] = -t
    two = np.zeros((L, L, L, L))
    for i in range(L):
        two[i, i, i, i] = U
    return FermionHamiltonian(L, n_up, n_down, 0.0, one, two)


_HEADER_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def parse_fcidump(text: str) -> FermionHamiltonian:
    """Parse FCIDUMP text (1-based indices, chemists' notation).

    Lines ``v i j k l`` with all indices zero set the core energy, with
    ``k = l = 0`` set one-body integrals and otherwise two-body integrals;
    every symmetry-equivalent slot is filled from each line.
    """
    lines = text.splitlines()
    header_parts: list[str] = []
    body_start = None
    in_header = False
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        upper = stripped.upper()
        if not in_header and upper.startswith("&FCI"):
            in_header = True
            stripped = stripped[4:]
            upper = stripped.upper()
        if in_header:
            end = None
            for token in ("&END", "/"):
                pos = upper.find(token)
                if pos >= 0:
                    end = pos
                    break
            if end is not None:
                header_parts.append(stripped[:end])
                body_start = lineno
                break
            header_parts.append(stripped)
        else:
            raise FCIDUMPError(f"line {lineno}: expected '&FCI' header, got {stripped!r}")
    if body_start is None:
        raise FCIDUMPError("missing FCIDUMP header terminator ('&END' or '/')")

    header = _parse_header(" ".join(header_parts), body_start)
    for key in ("NORB", "NELEC"):
        if key not in header:
            raise FCIDUMPError(f"line {body_start}: header lacks {key}")
    norb = _header_int(header, "NORB", body_start)
    nelec = _header_int(header, "NELEC", body_start)
    ms2 = _header_int(header, "MS2", body_start) if "MS2" in header else 0
    if norb < 1:
        raise FCIDUMPError(f"line {body_start}: NORB must be positive")
    if (nelec + ms2) % 2 or nelec - ms2 < 0 or nelec + ms2 < 0:
        raise FCIDUMPError(
            f"line {body_start}: NELEC={nelec}, MS2={ms2} give non-integer spin counts"
        )
    n_up, n_down = (nelec + ms2) // 2, (nelec - ms2) // 2
    if n_up > norb or n_down > norb:
        raise FCIDUMPError(f"line {body_start}: more electrons than orbitals per spin")

    one = np.zeros((norb, norb))
    two = np.zeros((norb, norb, norb, norb))
    core = 0.0
    for lineno in range(body_start + 1, len(lines) + 1):
        stripped = lines[lineno - 1].strip()
        if not stripped:
            continue
        fields = stripped.split()
        if len(fields) != 5:
            raise FCIDUMPError(f"line {lineno}: expected 'value i j k l', got {stripped!r}")
        try:
            value = float(fields[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(f) for f in fields[1:])
        except ValueError:
            raise FCIDUMPError(f"line {lineno}: non-numeric field in {stripped!r}") from None
        if any(x < 0 or x > norb for x in (i, j, k, l)):
            raise FCIDUMPError(f"line {lineno}: index out of range 0..{norb}")
        if i == j == k == l == 0:
            core += value
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise FCIDUMPError(f"line {lineno}: one-body entry with zero index")
            one[i - 1, j - 1] = one[j - 1, i - 1] = value
        elif i == 0 and j == 0 and l == 0:
            # orbital energies; not part of the Hamiltonian
            continue
        else:
            if 0 in (i, j, k, l):
                raise FCIDUMPError(f"line {lineno}: two-body entry with zero index")
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in (
                (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
            ):
                two[a, b, c, d] = value
    return FermionHamiltonian(norb, n_up, n_down, core, one, two)


def _parse_header(text: str, lineno: int) -> dict[str, str]:
    out = {}
    matches = list(_HEADER_KEY.finditer(text))
    for m, nxt in zip(matches, matches[1:] + [None]):
        value = text[m.end() : nxt.start() if nxt else len(text)]
        out[m.group(1).upper()] = value.strip().strip(",").strip()
    return out


def _header_int(header: dict[str, str], key: str, lineno: int) -> int:
    try:
        return int(header[key].split(",")[0])
    except ValueError:
        raise FCIDUMPError(f"line {lineno}: {key}={header[key]!r} is not an integer") from None


def read_fcidump(path) -> FermionHamiltonian:
    with open(path) as fh:
        return parse_fcidump(fh.read())


def write_fcidump(ham: FermionHamiltonian, tol: float = 1e-15) -> str:
    """Serialize unique integrals back to FCIDUMP text."""
    n = ham.n_spatial
    out = [
        f" &FCI NORB={n},NELEC={ham.n_up + ham.n_down},MS2={ham.n_up - ham.n_down},",
        " &END",
    ]
    for p in range(n):
        for q in range(p + 1):
            for r in range(n):
                for s in range(r + 1):
                    if p * (p + 1) // 2 + q < r * (r + 1) // 2 + s:
                        continue
                    v = ham.two_body[p, q, r, s]
                    if abs(v) > tol:
                        out.append(f"{float(v)!r} {p + 1} {q + 1} {r + 1} {s + 1}")
    for p in range(n):
        for q in range(p + 1):
            v = ham.one_body[p, q]
            if abs(v) > tol:
                out.append(f"{float(v)!r} {p + 1} {q + 1} 0 0")
    out.append(f"{float(ham.core_energy)!r} 0 0 0 0")
    return "\n".join(out) + "\n"


def fock_matrix(op: FermionOperator, n_modes: int) -> np.ndarray:
    """Dense Fock-space matrix from direct ladder-operator action.

    Basis state ``b`` has mode ``q`` occupied iff bit ``q`` of ``b`` is set;
    the fermionic sign counts occupied modes with lower index. This path
    shares no code with the Pauli encoding and serves as its oracle.
    """
    dim = 1 << n_modes
    if op.max_mode >= n_modes:
        raise ValueError("operator acts on modes beyond n_modes")
    mat = np.zeros((dim, dim))
    terms = list(op.terms.items())
    for col in range(dim):
        for key, coef in terms:
            state = col
            sign = 1
            for mode, action in reversed(key):
                bit = 1 << mode
                occupied = bool(state & bit)
                if occupied == bool(action):
                    state = -1
                    break
                if bin(state & (bit - 1)).count("1") & 1:
                    sign = -sign
                state ^= bit
            if state >= 0:
                mat[state, col] += sign * coef
    return mat
