from __future__ import annotations

import numpy as np
import pytest

from npsqd.sector import SectorSpec
from npsqd.simulator import (
    Gate,
    NoiseConfig,
    SampleSet,
    StateVector,
    apply_gate,
    bits_to_config,
    circuit_unitary,
    config_to_bits,
    exact_distribution,
    run_circuit,
    sample,
    sample_circuit,
)


def random_gate(rng, n):
    kind = rng.choice(["givens", "cz", "r", "rz", "rxx"])
    a, b = (int(q) for q in rng.choice(n, 2, replace=False))
    t = float(rng.uniform(-np.pi, np.pi))
    return {
        "givens": Gate.givens(a, b, t),
        "cz": Gate.cz(a, b),
        "r": Gate.r(a, t, float(rng.uniform(-np.pi, np.pi))),
        "rz": Gate.rz(a, t),
        "rxx": Gate.rxx(a, b, t),
    }[kind]


def test_givens_zero_is_identity():
    rng = np.random.default_rng(0)
    psi = StateVector(3, rng.normal(size=8) + 1j * rng.normal(size=8))
    before = psi.amplitudes.copy()
    apply_gate(psi, Gate.givens(0, 1, 0.0))
    assert np.max(np.abs(psi.amplitudes - before)) == 0.0


def test_givens_pi_swaps_with_sign():
    # local |q_a q_b> = |01>: q_b occupied; qubits (0, 1) so that is configuration 0b10
    psi = apply_gate(StateVector.basis(2, 0b10), Gate.givens(0, 1, np.pi))
    expected = np.zeros(4)
    expected[0b01] = -1.0
    assert np.allclose(psi.amplitudes, expected, atol=1e-15)


def test_givens_matrix_block():
    t = 0.3
    u = circuit_unitary([Gate.givens(1, 0, 2 * t)], 2)  # q_a = 1 is the high bit
    c, s = np.cos(t), np.sin(t)
    ref = np.array([[1, 0, 0, 0], [0, c, s, 0], [0, -s, c, 0], [0, 0, 0, 1]])
    assert np.allclose(u, ref, atol=1e-15)


def test_random_circuit_matches_dense_product():
    rng = np.random.default_rng(11)
    n = 6
    gates = [random_gate(rng, n) for _ in range(30)]
    psi0 = rng.normal(size=64) + 1j * rng.normal(size=64)
    psi0 /= np.linalg.norm(psi0)
    out = run_circuit(StateVector(n, psi0.copy()), gates)
    assert np.max(np.abs(out.amplitudes - circuit_unitary(gates, n) @ psi0)) < 1e-10


def test_norm_preserved_over_long_circuit():
    rng = np.random.default_rng(5)
    psi = StateVector.basis(4, 3)
    for _ in range(10_000):
        apply_gate(psi, random_gate(rng, 4))
    assert abs(psi.norm() - 1.0) < 1e-12


def test_number_conservation_on_ten_qubits():
    rng = np.random.default_rng(8)
    sector = SectorSpec(5, 3, 2)
    psi = StateVector.basis(10, 0b0001100111)
    for _ in range(200):
        kind = rng.integers(3)
        if kind == 0:
            off = 5 * int(rng.integers(2))
            a, b = (int(q) + off for q in rng.choice(5, 2, replace=False))
            apply_gate(psi, Gate.givens(a, b, float(rng.uniform(-3, 3))))
        elif kind == 1:
            a, b = (int(q) for q in rng.choice(10, 2, replace=False))
            apply_gate(psi, Gate.cz(a, b))
        else:
            apply_gate(psi, Gate.rz(int(rng.integers(10)), float(rng.uniform(-3, 3))))
    support = np.nonzero(psi.amplitudes)[0]
    assert np.all(sector.contains(support))


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate.givens(1, 1, 0.0)
    with pytest.raises(ValueError):
        Gate("swap", (0, 1))
    with pytest.raises(ValueError):
        apply_gate(StateVector(2), Gate.cz(0, 2))


def test_basis_state_sampling():
    psi = StateVector.basis(4, bits_to_config("0110"))
    s = sample(psi, 100, seed=1)
    assert s.counts == {bits_to_config("0110"): 100}


def test_readout_flip_rate_all_zero_state():
    s = sample(StateVector.basis(10, 0), 100_000, NoiseConfig(readout_flip_p=0.1), seed=3)
    p = 0.9**10
    frac = s.counts.get(0, 0) / 100_000
    assert abs(frac - p) < 3 * np.sqrt(p * (1 - p) / 100_000)


def test_uniform_two_qubit_sampling():
    psi = StateVector(2, np.full(4, 0.5, dtype=complex))
    shots = 40_000
    s = sample(psi, shots, seed=4)
    sigma = np.sqrt(0.25 * 0.75 / shots)
    for k in range(4):
        assert abs(s.counts[k] / shots - 0.25) < 3 * sigma


def test_sampling_is_seeded():
    rng = np.random.default_rng(0)
    psi = StateVector(5, rng.normal(size=32) + 0j)
    psi.amplitudes /= psi.norm()
    noise = NoiseConfig(0.05, 0.0)
    assert sample(psi, 500, noise, seed=9).counts == sample(psi, 500, noise, seed=9).counts
    assert sample(psi, 500, noise, seed=9).counts != sample(psi, 500, noise, seed=10).counts


def test_exact_distribution_examples():
    assert exact_distribution(StateVector.basis(1, 1)) == {1: 1.0}
    bell = StateVector(2, np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2))
    d = exact_distribution(bell)
    assert set(d) == {0, 3} and abs(d[0] - 0.5) < 1e-15 and abs(sum(d.values()) - 1) < 1e-12


def test_depolarizing_breaks_number_conservation_monotonically():
    sector = SectorSpec(2, 1, 1)
    init = StateVector.basis(4, 0b0101)
    gates = [Gate.givens(0, 1, 0.7), Gate.givens(2, 3, -0.4), Gate.cz(0, 2), Gate.cz(1, 3)] * 3
    fractions = []
    for p in (0.0, 0.02, 0.1, 0.3):
        out = 0
        for seed in range(5):
            s = sample_circuit(init, gates, 2000, NoiseConfig(0.0, p), seed=seed)
            c, k = s.arrays()
            out += k[~sector.contains(c)].sum()
        fractions.append(out / 10_000)
    assert fractions[0] == 0.0
    assert all(a < b for a, b in zip(fractions, fractions[1:]))


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(readout_flip_p=1.5)
    assert NoiseConfig().is_noiseless


def test_sample_set_text_roundtrip():
    s = SampleSet(4, {0b0011: 5, 0b1000: 2})
    assert s.shots == 7
    again = SampleSet.from_text(s.to_text())
    assert again == s
    assert config_to_bits(0b0011, 4) == "1100"
    with pytest.raises(ValueError):
        SampleSet.from_text("101 1\n10 2\n")


def test_sample_set_merge_and_expand():
    a = SampleSet(3, {1: 2})
    b = SampleSet(3, {1: 1, 4: 1})
    m = a.merged(b)
    assert m.counts == {1: 3, 4: 1}
    assert list(m.expand()) == [1, 1, 1, 4]
