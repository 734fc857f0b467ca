"""Pure-Python / numpy implementations of the hot kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature
and bitwise-identical results for identical inputs.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _parity(values: np.ndarray) -> np.ndarray:
    return np.bitwise_count(values) & 1


def diag_energies(configs, z_masks, coefs):
    """Sum of ``coef * (-1)^popcount(z & config)`` over diagonal terms."""
    configs = np.asarray(configs, dtype=np.int64)
    out = np.zeros(len(configs))
    for z, c in zip(z_masks, coefs):
        out += c * (1 - 2 * _parity(configs & z).astype(np.float64))
    return out


def project_coo(basis, sorted_basis, order, group_x, group_ptr, term_z, term_coef):
    """Nonzero entries of a Pauli sum projected onto ``basis``.

    ``term_coef`` must already carry the real part of ``i^popcount(x & z)``.
    Entry (a, b) collects terms with ``x = basis[a] ^ basis[b]``.
    """
    basis = np.asarray(basis, dtype=np.int64)
    rows, cols, vals = [], [], []
    n = len(sorted_basis)
    arange = np.arange(len(basis), dtype=np.int64)
    for g in range(len(group_x)):
        x = group_x[g]
        targets = basis ^ x
        pos = np.searchsorted(sorted_basis, targets)
        pos_c = np.minimum(pos, n - 1)
        found = sorted_basis[pos_c] == targets
        if not found.any():
            continue
        cols_g = targets[found]
        acc = np.zeros(len(cols_g))
        for t in range(group_ptr[g], group_ptr[g + 1]):
            acc += term_coef[t] * (1 - 2 * _parity(cols_g & term_z[t]).astype(np.float64))
        rows.append(arange[found])
        cols.append(order[pos_c[found]])
        vals.append(acc)
    if not rows:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), np.zeros(0)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def _pair_indices(n_amps: int, qa: int, qb: int):
    idx = np.arange(n_amps, dtype=np.int64)
    ma, mb = 1 << qa, 1 << qb
    sel = idx[((idx & ma) == 0) & ((idx & mb) != 0)]
    return sel, sel ^ ma ^ mb


def apply_givens(amps, qa, qb, c, s):
    """Rotate the (qa=0,qb=1), (qa=1,qb=0) amplitude pairs in place."""
    i01, i10 = _pair_indices(len(amps), qa, qb)
    a01 = amps[i01].copy()
    a10 = amps[i10]
    amps[i01] = c * a01 + s * a10
    amps[i10] = -s * a01 + c * a10


def apply_one_qubit(amps, q, u):
    idx = np.arange(len(amps), dtype=np.int64)
    m = 1 << q
    i0 = idx[(idx & m) == 0]
    i1 = i0 | m
    a0 = amps[i0].copy()
    a1 = amps[i1]
    amps[i0] = u[0, 0] * a0 + u[0, 1] * a1
    amps[i1] = u[1, 0] * a0 + u[1, 1] * a1


def apply_rxx(amps, qa, qb, angle):
    """exp(-i angle/2 X_a X_b) in place."""
    idx = np.arange(len(amps), dtype=np.int64)
    ma, mb = 1 << qa, 1 << qb
    lo = idx[(idx & ma) == 0]
    partner = lo ^ ma ^ mb
    c, s = np.cos(angle / 2), -1j * np.sin(angle / 2)
    a = amps[lo].copy()
    b = amps[partner]
    amps[lo] = c * a + s * b
    amps[partner] = s * a + c * b


def apply_cz(amps, qa, qb):
    idx = np.arange(len(amps), dtype=np.int64)
    m = (1 << qa) | (1 << qb)
    amps[(idx & m) == m] *= -1


def _flip_weight(y, h, delta):
    if y <= h:
        return delta * (y / h)
    return delta + (1.0 - delta) * (y - h) / (1.0 - h)


def recover_strings(configs, occ, n_spatial, n_up, n_down, h, delta, uniforms, single_attempt):
    """Flip bits of each configuration towards the target per-block counts.

    String ``k`` consumes random numbers from ``uniforms[k*4n:(k+1)*4n]``.
    Returns the repaired configurations (unchanged when not repaired).
    """
    n = n_spatial
    stride = 4 * n
    out = np.array(configs, dtype=np.int64, copy=True)
    for k in range(len(out)):
        cfg = int(out[k])
        u_pos = k * stride
        for block, target in ((0, n_up), (1, n_down)):
            off = block * n
            bits = [(cfg >> (off + i)) & 1 for i in range(n)]
            count = sum(bits)
            if count == target:
                continue
            want = 1 if count > target else 0  # flip occupied bits on surplus
            need = abs(count - target)
            cand = [i for i in range(n) if bits[i] == want]
            weights = [_flip_weight(abs(want - occ[off + i]), h, delta) for i in cand]
            for _ in range(need):
                if single_attempt:
                    u1, u2 = uniforms[u_pos], uniforms[u_pos + 1]
                    u_pos += 2
                    pick = min(int(u1 * len(cand)), len(cand) - 1)
                    if u2 < weights[pick]:
                        cfg ^= 1 << (off + cand[pick])
                        del cand[pick], weights[pick]
                else:
                    u1 = uniforms[u_pos]
                    u_pos += 1
                    total = 0.0
                    for w in weights:
                        total += w
                    if total <= 0.0:
                        pick = min(int(u1 * len(cand)), len(cand) - 1)
                    else:
                        r = u1 * total
                        pick = len(cand) - 1
                        acc = 0.0
                        for j in range(len(cand)):
                            acc += weights[j]
                            if r < acc:
                                pick = j
                                break
                    cfg ^= 1 << (off + cand[pick])
                    del cand[pick], weights[pick]
        out[k] = cfg
    return out
