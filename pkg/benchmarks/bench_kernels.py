"""Time the compiled kernels against the numpy fallback.

Run ``python benchmarks/bench_kernels.py [--repeat N]``. Each row reports the
best-of-N wall time per backend and the speedup of the compiled one.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from npsqd import kernels
from npsqd.encoding import jordan_wigner
from npsqd.fermion import SpinPenalty, build_spin_squared, make_hubbard_chain, penalize
from npsqd.sector import SectorSpec


def workloads(rng: np.random.Generator):
    ham = make_hubbard_chain(6, 1.0, 4.0, 3, 3)
    op = penalize(ham.to_operator(), build_spin_squared(6), SpinPenalty(0.01, 0.0))
    h = jordan_wigner(op, 12)
    basis = SectorSpec(6, 3, 3).configurations()
    order = np.argsort(basis)
    gx, gp, tz, tc = h._grouped
    diag_z, diag_c = tz[gp[0] : gp[1]], tc[gp[0] : gp[1]]
    configs = rng.integers(0, 1 << 12, size=20_000)

    psi = rng.normal(size=1 << 16) + 1j * rng.normal(size=1 << 16)
    u = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]

    n = 6
    bad = rng.integers(0, 1 << (2 * n), size=5000)
    occ = rng.uniform(size=2 * n)
    uniforms = rng.uniform(size=len(bad) * 4 * n)

    return {
        "diag_energies (20k configs)": lambda m: m.diag_energies(configs, diag_z, diag_c),
        "project_coo (dim 400)": lambda m: m.project_coo(basis, basis[order], order, gx, gp, tz, tc),
        "apply_givens (16 qubits)": lambda m: m.apply_givens(psi, 3, 11, 0.6, 0.8),
        "apply_one_qubit (16 qubits)": lambda m: m.apply_one_qubit(psi, 7, u),
        "apply_rxx (16 qubits)": lambda m: m.apply_rxx(psi, 2, 13, -np.pi / 2),
        "apply_cz (16 qubits)": lambda m: m.apply_cz(psi, 0, 15),
        "recover_strings (5k strings)": lambda m: m.recover_strings(
            bad, occ, n, 3, 3, 0.8, 0.2, uniforms, False
        ),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    found = kernels.backends()
    names = sorted(found, key=lambda k: k != "python")
    print(f"selected backend: {kernels.BACKEND}")
    if "cython" not in found:
        print("compiled extension not built; timing the fallback only")
    header = f"{'kernel':32s}" + "".join(f"{n:>14s}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for label, fn in workloads(np.random.default_rng(0)).items():
        times = []
        for name in names:
            mod = found[name]
            times.append(min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)))
        row = f"{label:32s}" + "".join(f"{1e3 * t:12.3f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
