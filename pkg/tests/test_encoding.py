from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npsqd.encoding import (
    PauliSum,
    dense_matrix,
    diagonal_expectation,
    jordan_wigner,
    matrix_element,
    pauli_label,
    project_entries,
    sparse_matrix,
)
from npsqd.fermion import CREATE, FermionOperator, fock_matrix, make_hubbard_chain

from conftest import penalized_pauli, random_hamiltonian

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def kron_label(label: str) -> np.ndarray:
    """Dense matrix with label character q on qubit q (qubit 0 least significant)."""
    mats = {"I": I2, "X": X, "Y": Y, "Z": Z}
    out = np.eye(1, dtype=complex)
    for ch in label:
        out = np.kron(mats[ch], out)
    return out


def test_single_mode_number_operator():
    h = jordan_wigner(FermionOperator.number(1), 3)
    assert h == PauliSum.from_labels({"IZI": -0.5}, identity_offset=0.5)


def test_hopping_term_image():
    op = FermionOperator({((0, 1), (1, 0)): 1.0, ((1, 1), (0, 0)): 1.0})
    h = jordan_wigner(op, 2)
    assert h == PauliSum.from_labels({"XX": 0.5, "YY": 0.5})


@pytest.mark.parametrize("label", ["XIZ", "YYI", "ZXY", "IYZ", "XYZ"])
def test_dense_matrix_matches_kron(label):
    h = PauliSum.from_labels({label: 0.7})
    assert np.allclose(dense_matrix(h), 0.7 * kron_label(label), atol=1e-15)


def test_jw_h2_matches_fock(h2_ham):
    op = h2_ham.to_operator()
    assert np.abs(dense_matrix(jordan_wigner(op, 4)) - fock_matrix(op, 4)).max() < 1e-12


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 3))
def test_jw_random_hamiltonian_matches_fock(seed, n):
    op = random_hamiltonian(n, 0, 0, np.random.default_rng(seed)).to_operator()
    assert np.abs(dense_matrix(jordan_wigner(op, 2 * n)) - fock_matrix(op, 2 * n)).max() < 1e-10


def test_non_hermitian_operator_rejected():
    with pytest.raises(ValueError, match="complex"):
        jordan_wigner(FermionOperator.term([(0, CREATE)]), 2)


def test_mode_out_of_range():
    with pytest.raises(ValueError):
        jordan_wigner(FermionOperator.number(4), 4)


def test_dense_refuses_large_registers():
    with pytest.raises(ValueError):
        dense_matrix(PauliSum(15, {(0, 1): 1.0}))


def test_mask_range_checked():
    with pytest.raises(ValueError):
        PauliSum(2, {(4, 0): 1.0})


def test_identity_term_folds_into_offset():
    h = PauliSum(2, {(0, 0): 2.0, (1, 0): 1.0}, identity_offset=0.5)
    assert h.identity_offset == 2.5 and (0, 0) not in h.terms


def test_algebra_and_text_roundtrip(hubbard_pauli):
    h = hubbard_pauli
    assert PauliSum.from_text(h.to_text()) == PauliSum.from_text(h.to_text(n_spatial=5))
    back = PauliSum.from_text(h.to_text())
    assert back.n_qubits == h.n_qubits
    assert max(abs(back.terms[k] - c) for k, c in h.terms.items()) < 1e-15
    zero = h - h
    assert zero.terms == {} and zero.identity_offset == 0.0
    assert (h * 2.0).identity_offset == 2 * h.identity_offset


def test_pauli_label_blocks():
    assert pauli_label(0b0011, 0b0110, 4) == "XYZI"
    assert pauli_label(0b0011, 0b0110, 4, n_spatial=2) == "XY ZI"


def test_diagonal_and_elements_match_dense(hubbard_pauli):
    h = PauliSum(6, {k: c for k, c in penalized_pauli(make_hubbard_chain(3, 1.0, 2.0, 2, 1)).terms.items()})
    d = dense_matrix(h)
    rng = np.random.default_rng(3)
    for z in rng.integers(0, 64, size=20):
        assert diagonal_expectation(h, int(z)) == pytest.approx(d[z, z], abs=1e-12)
        w = int(rng.integers(0, 64))
        assert matrix_element(h, w, int(z)) == pytest.approx(d[w, z], abs=1e-12)
    assert np.allclose(h.diagonal_energies(np.arange(64)), np.diag(d), atol=1e-12)


def test_complex_matrix_elements():
    h = PauliSum.from_labels({"YZ": 1.0, "XY": 0.5})
    assert not h.is_real
    d = dense_matrix(h)
    assert np.allclose(d, kron_label("YZ") + 0.5 * kron_label("XY"))
    for r in range(4):
        for c in range(4):
            assert matrix_element(h, r, c) == pytest.approx(d[r, c])
    with pytest.raises(ValueError):
        project_entries(h, np.arange(4))


def test_sparse_subset_matches_dense(hubbard_pauli, sector532):
    idx = sector532.configurations()
    sub = sparse_matrix(hubbard_pauli, idx).toarray()
    full = dense_matrix(hubbard_pauli)
    assert np.abs(sub - full[np.ix_(idx, idx)]).max() < 1e-12


def test_project_rejects_duplicates(h2_pauli):
    with pytest.raises(ValueError, match="duplicate"):
        project_entries(h2_pauli, np.array([5, 5]))
