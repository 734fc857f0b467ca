from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from npsqd.encoding import jordan_wigner
from npsqd.fermion import (
    FermionHamiltonian,
    SpinPenalty,
    build_spin_squared,
    make_hubbard_chain,
    penalize,
    read_fcidump,
    spin_squared_target,
)
from npsqd.sector import SectorSpec

DATA = Path(__file__).parent / "data"
H2_FCIDUMP = DATA / "h2_sto3g_0735.fcidump"


def penalized_pauli(ham: FermionHamiltonian, strength: float = 0.01):
    s0 = spin_squared_target(ham.n_up, ham.n_down)
    op = penalize(ham.to_operator(), build_spin_squared(ham.n_spatial), SpinPenalty(strength, s0))
    return jordan_wigner(op, ham.n_qubits)


def random_hamiltonian(n: int, n_up: int, n_down: int, rng: np.random.Generator) -> FermionHamiltonian:
    """Random real integrals with the full 8-fold symmetry."""
    one = rng.normal(size=(n, n))
    one = (one + one.T) / 2
    eri = rng.normal(size=(n, n, n, n)) * 0.3
    perms = [(0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
             (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0)]
    eri = sum(eri.transpose(p) for p in perms) / 8
    return FermionHamiltonian(n, n_up, n_down, float(rng.normal()), one, eri)


@pytest.fixture(scope="session")
def h2_manifest():
    return json.loads((DATA / "MANIFEST.json").read_text())


@pytest.fixture(scope="session")
def h2_ham():
    return read_fcidump(H2_FCIDUMP)


@pytest.fixture(scope="session")
def h2_pauli(h2_ham):
    return penalized_pauli(h2_ham)


@pytest.fixture(scope="session")
def hubbard_ham():
    return make_hubbard_chain(5, 1.0, 4.0, 3, 2)


@pytest.fixture(scope="session")
def hubbard_pauli(hubbard_ham):
    return penalized_pauli(hubbard_ham)


@pytest.fixture(scope="session")
def sector532():
    return SectorSpec(5, 3, 2)


@pytest.fixture(scope="session")
def sector211():
    return SectorSpec(2, 1, 1)
