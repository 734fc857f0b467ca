from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npsqd.encoding import dense_matrix, jordan_wigner
from npsqd.fermion import (
    ANNIHILATE,
    CREATE,
    FCIDUMPError,
    FermionOperator,
    SpinPenalty,
    build_spin_squared,
    fock_matrix,
    make_hubbard_chain,
    number_operator,
    parse_fcidump,
    penalize,
    spin_squared_target,
    write_fcidump,
)
from npsqd.sector import SectorSpec
from npsqd.subspace import fci_ground_state

from conftest import random_hamiltonian


def sector_block(mat, sector):
    idx = sector.configurations()
    return mat[np.ix_(idx, idx)]


# --- FCIDUMP ---------------------------------------------------------------


def test_parse_minimal_fcidump():
    text = "&FCI NORB=1,NELEC=2,MS2=0,\n&END\n0.5 1 1 0 0\n-1.0 0 0 0 0\n"
    ham = parse_fcidump(text)
    assert ham.n_spatial == 1 and ham.n_up == ham.n_down == 1
    assert ham.one_body[0, 0] == 0.5
    assert ham.core_energy == -1.0


def test_h2_fixture_fci_energy(h2_ham, h2_manifest):
    meta = h2_manifest["h2_sto3g_0735.fcidump"]
    assert (ham := h2_ham).n_spatial == 2 and (ham.n_up, ham.n_down) == (1, 1)
    h = jordan_wigner(h2_ham.to_operator(), 4)
    e = fci_ground_state(h, SectorSpec(2, 1, 1)).energy
    assert abs(e - meta["fci_energy"]) < 1e-9
    assert abs(e - (-1.1373)) < 1e-4


def test_h2_hf_energy_matches_manifest(h2_ham, h2_manifest):
    h = jordan_wigner(h2_ham.to_operator(), 4)
    hf = 0b0101
    assert abs(h.diagonal_energies([hf])[0] - h2_manifest["h2_sto3g_0735.fcidump"]["hf_energy"]) < 1e-9


def test_fcidump_fills_eightfold_symmetry():
    text = "&FCI NORB=2,NELEC=2,MS2=0 &END\n0.3 1 2 1 1\n"
    eri = parse_fcidump(text).two_body
    for idx in [(0, 1, 0, 0), (1, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0)]:
        assert eri[idx] == 0.3


def test_fcidump_slash_terminator_and_fortran_exponent():
    ham = parse_fcidump("&FCI NORB=1, NELEC=1, MS2=1\n/\n0.25D0 1 1 0 0\n")
    assert ham.n_up == 1 and ham.n_down == 0 and ham.one_body[0, 0] == 0.25


@pytest.mark.parametrize(
    "text, line",
    [
        ("&FCI NORB=1,NELEC=2,MS2=1 &END\n", 1),
        ("&FCI NORB=1,NELEC=2,MS2=0 &END\n0.5 1 x 0 0\n", 2),
        ("&FCI NORB=1,NELEC=2,MS2=0 &END\n0.5 1 1 0 0\n0.1 2 1 0 0\n", 3),
        ("&FCI NORB=1,NELEC=2,MS2=0 &END\n0.5 1 1 0\n", 2),
        ("&FCI NORB=x,NELEC=2 &END\n", 1),
        ("NORB=1\n", 1),
    ],
)
def test_fcidump_errors_name_the_line(text, line):
    with pytest.raises(FCIDUMPError, match=f"line {line}"):
        parse_fcidump(text)


def test_fcidump_missing_terminator():
    with pytest.raises(FCIDUMPError):
        parse_fcidump("&FCI NORB=1,NELEC=2\n0.5 1 1 0 0\n")


def test_fcidump_roundtrip(h2_ham):
    again = parse_fcidump(write_fcidump(h2_ham))
    assert np.array_equal(again.one_body, h2_ham.one_body)
    assert np.array_equal(again.two_body, h2_ham.two_body)
    assert again.core_energy == h2_ham.core_energy


# --- operator algebra -------------------------------------------------------


def test_normal_ordering_anticommutator():
    # c_0 c^dag_0 = 1 - c^dag_0 c_0
    op = FermionOperator.term([(0, ANNIHILATE), (0, CREATE)]).normal_ordered()
    assert op == FermionOperator({(): 1.0, ((0, CREATE), (0, ANNIHILATE)): -1.0})


def test_pauli_exclusion_vanishes():
    assert len(FermionOperator.term([(1, CREATE), (1, CREATE)]).normal_ordered()) == 0


def test_non_finite_coefficient_rejected():
    with pytest.raises(ValueError):
        FermionOperator({((0, CREATE),): float("nan")})


def test_hermitian_conjugate():
    op = FermionOperator.term([(2, CREATE), (0, ANNIHILATE)], 0.7)
    assert not op.is_hermitian()
    assert (op + op.hermitian_conjugate()).is_hermitian()


# --- S^2 and penalty ---------------------------------------------------------


def test_spin_squared_single_orbital():
    s2 = fock_matrix(build_spin_squared(1), 2)
    assert s2[0b01, 0b01] == pytest.approx(0.75)
    assert s2[0b11, 0b11] == pytest.approx(0.0)


def test_spin_squared_two_orbital_spectrum():
    s2 = dense_matrix(jordan_wigner(build_spin_squared(2), 4))
    full = np.linalg.eigvalsh(s2)
    # every eigenvalue is s(s+1) for s in {0, 1/2, 1}
    assert all(min(abs(v - t) for t in (0.0, 0.75, 2.0)) < 1e-12 for v in full)
    sector = np.linalg.eigvalsh(sector_block(s2, SectorSpec(2, 1, 1)))
    assert np.allclose(sector, [0, 0, 0, 2], atol=1e-12)


def test_spin_squared_matches_ladder_form():
    """S^2 = S_- S_+ + S_z + S_z^2 built independently."""
    n = 3
    s_plus = FermionOperator(
        {((i, CREATE), (i + n, ANNIHILATE)): 1.0 for i in range(n)}
    )
    sz = (number_operator(n, 0) - number_operator(n, 1)) * 0.5
    ref = s_plus.hermitian_conjugate() * s_plus + sz + sz * sz
    assert np.allclose(fock_matrix(build_spin_squared(n), 2 * n), fock_matrix(ref, 2 * n), atol=1e-12)


def test_penalty_zero_strength_is_identity_map(hubbard_ham):
    h_el = hubbard_ham.to_operator()
    out = penalize(h_el, build_spin_squared(5), SpinPenalty(0.0, 0.75))
    assert out == h_el.normal_ordered().simplify()


def test_penalty_vanishes_on_target_spin():
    s2 = build_spin_squared(1)
    op = penalize(FermionOperator(), s2, SpinPenalty(0.01, 0.75))
    assert fock_matrix(op, 2)[0b01, 0b01] == pytest.approx(0.0, abs=1e-14)


def test_penalty_raises_triplets():
    op = penalize(FermionOperator(), build_spin_squared(2), SpinPenalty(0.01, 0.0))
    m = sector_block(dense_matrix(jordan_wigner(op, 4)), SectorSpec(2, 1, 1))
    assert np.allclose(np.linalg.eigvalsh(m), [0, 0, 0, 0.04], atol=1e-12)


@pytest.mark.parametrize("bad", [0.5, 1.0, -0.75])
def test_spin_penalty_rejects_non_spin_values(bad):
    with pytest.raises(ValueError):
        SpinPenalty(0.01, bad)


def test_spin_penalty_accepts_spin_values():
    for s in (0, 0.5, 1, 1.5, 2, 2.5):
        assert SpinPenalty.for_spin(s).s0_squared == s * (s + 1)
    assert spin_squared_target(4, 1) == 3.75


def test_penalize_rejects_mismatched_registers():
    h_el = FermionOperator.number(7)
    with pytest.raises(ValueError):
        penalize(h_el, build_spin_squared(2), SpinPenalty())


# --- Hubbard ---------------------------------------------------------------


def test_hubbard_tight_binding_dimer():
    h = jordan_wigner(make_hubbard_chain(2, 1.0, 0.0, 1, 1).to_operator(), 4)
    assert fci_ground_state(h, SectorSpec(2, 1, 1)).energy == pytest.approx(-2.0, abs=1e-12)


def test_hubbard_atomic_limit():
    h = jordan_wigner(make_hubbard_chain(2, 0.0, 4.0, 1, 1).to_operator(), 4)
    assert fci_ground_state(h, SectorSpec(2, 1, 1)).energy == pytest.approx(0.0, abs=1e-12)


def test_hubbard_rejects_single_site():
    with pytest.raises(ValueError):
        make_hubbard_chain(1, 1.0, 4.0)


def test_hubbard_fixture_energy(hubbard_ham, hubbard_pauli, sector532):
    """Penalized and bare Hamiltonians share the doublet ground energy."""
    bare = jordan_wigner(hubbard_ham.to_operator(), 10)
    e_bare = fci_ground_state(bare, sector532).energy
    e_pen = fci_ground_state(hubbard_pauli, sector532).energy
    assert e_bare == pytest.approx(-2.417473004814, abs=1e-9)
    assert e_pen == pytest.approx(e_bare, abs=1e-9)


# --- invariants over random Hamiltonians ----------------------------------


@settings(max_examples=12, deadline=None)
@given(n=st.integers(2, 3), seed=st.integers(0, 2**31 - 1), data=st.data())
def test_random_hamiltonian_invariants(n, seed, data):
    n_up = data.draw(st.integers(0, n))
    n_down = data.draw(st.integers(0, n))
    ham = random_hamiltonian(n, n_up, n_down, np.random.default_rng(seed))
    h = dense_matrix(jordan_wigner(ham.to_operator(), 2 * n))
    s2 = dense_matrix(jordan_wigner(build_spin_squared(n), 2 * n))
    n_up_op = dense_matrix(jordan_wigner(number_operator(n, 0), 2 * n))
    n_dn_op = dense_matrix(jordan_wigner(number_operator(n, 1), 2 * n))
    assert np.abs(h - h.T).max() < 1e-12
    assert np.abs(h @ s2 - s2 @ h).max() < 1e-10
    assert np.abs(h @ n_up_op - n_up_op @ h).max() < 1e-10
    assert np.abs(h @ n_dn_op - n_dn_op @ h).max() < 1e-10


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), sec=st.sampled_from([(1, 1), (2, 1), (2, 0)]))
def test_penalty_preserves_target_sector(seed, sec):
    n = 3
    ham = random_hamiltonian(n, *sec, np.random.default_rng(seed))
    s0 = spin_squared_target(*sec)
    s2_op = build_spin_squared(n)
    h_el = dense_matrix(jordan_wigner(ham.to_operator(), 2 * n))
    h_pen = dense_matrix(jordan_wigner(penalize(ham.to_operator(), s2_op, SpinPenalty(0.01, s0)), 2 * n))
    s2 = dense_matrix(jordan_wigner(s2_op, 2 * n))
    assert np.abs(h_pen - h_pen.T).max() < 1e-12
    w, v = np.linalg.eigh(h_pen)
    # degenerate eigenspaces can mix spin; diagonalize S^2 inside each one
    i = 0
    while i < len(w):
        j = i
        while j < len(w) and w[j] - w[i] < 1e-9:
            j += 1
        block = v[:, i:j]
        sw, sv = np.linalg.eigh(block.T @ s2 @ block)
        for k in range(j - i):
            if abs(sw[k] - s0) < 1e-8:
                vec = block @ sv[:, k]
                assert np.linalg.norm(h_el @ vec - w[i] * vec) < 1e-8
        i = j
