# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_kernels_py`` function for function."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, fabs, sin

cnp.import_array()

BACKEND = "cython"

ctypedef long long i64


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef inline int parity(i64 v) noexcept nogil:
    return __builtin_popcountll(<unsigned long long>v) & 1


def diag_energies(configs, z_masks, coefs):
    cdef i64[:] cfg = np.ascontiguousarray(configs, dtype=np.int64)
    cdef i64[:] zs = np.ascontiguousarray(z_masks, dtype=np.int64)
    cdef double[:] cs = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef Py_ssize_t n = cfg.shape[0], nt = zs.shape[0], i, t
    out_arr = np.zeros(n)
    cdef double[:] out = out_arr
    cdef double acc
    cdef i64 c
    with nogil:
        for i in range(n):
            c = cfg[i]
            acc = 0.0
            for t in range(nt):
                # branchless: the sign pattern is data dependent and mispredicts
                acc += cs[t] * (1 - 2 * parity(c & zs[t]))
            out[i] = acc
    return out_arr


cdef Py_ssize_t bsearch(i64[:] arr, i64 key) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = arr.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    if lo < arr.shape[0] and arr[lo] == key:
        return lo
    return -1


def project_coo(basis, sorted_basis, order, group_x, group_ptr, term_z, term_coef):
    cdef i64[:] b = np.ascontiguousarray(basis, dtype=np.int64)
    cdef i64[:] sb = np.ascontiguousarray(sorted_basis, dtype=np.int64)
    cdef i64[:] od = np.ascontiguousarray(order, dtype=np.int64)
    cdef i64[:] gx = np.ascontiguousarray(group_x, dtype=np.int64)
    cdef i64[:] gp = np.ascontiguousarray(group_ptr, dtype=np.int64)
    cdef i64[:] tz = np.ascontiguousarray(term_z, dtype=np.int64)
    cdef double[:] tc = np.ascontiguousarray(term_coef, dtype=np.float64)
    cdef Py_ssize_t d = b.shape[0], ng = gx.shape[0]
    cdef Py_ssize_t cap = max(d * 4, 16), nnz = 0
    rows_arr = np.empty(cap, dtype=np.int64)
    cols_arr = np.empty(cap, dtype=np.int64)
    vals_arr = np.empty(cap, dtype=np.float64)
    cdef i64[:] rows = rows_arr
    cdef i64[:] cols = cols_arr
    cdef double[:] vals = vals_arr
    cdef Py_ssize_t a, g, t, pos
    cdef i64 target
    cdef double acc
    for a in range(d):
        if nnz + ng > cap:
            cap = max(2 * cap, nnz + ng)
            rows_arr = np.resize(rows_arr, cap)
            cols_arr = np.resize(cols_arr, cap)
            vals_arr = np.resize(vals_arr, cap)
            rows = rows_arr
            cols = cols_arr
            vals = vals_arr
        with nogil:
            for g in range(ng):
                target = b[a] ^ gx[g]
                pos = bsearch(sb, target)
                if pos < 0:
                    continue
                acc = 0.0
                for t in range(gp[g], gp[g + 1]):
                    if parity(target & tz[t]):
                        acc += -tc[t]
                    else:
                        acc += tc[t]
                rows[nnz] = a
                cols[nnz] = od[pos]
                vals[nnz] = acc
                nnz += 1
    return rows_arr[:nnz].copy(), cols_arr[:nnz].copy(), vals_arr[:nnz].copy()


def apply_givens(cnp.ndarray amps_arr, int qa, int qb, double c, double s):
    cdef double complex[:] amps = amps_arr
    cdef i64 n = amps.shape[0], i, j
    cdef i64 ma = (<i64>1) << qa, mb = (<i64>1) << qb
    cdef double complex a01, a10
    with nogil:
        for i in range(n):
            if (i & ma) == 0 and (i & mb) != 0:
                j = i ^ ma ^ mb
                a01 = amps[i]
                a10 = amps[j]
                amps[i] = c * a01 + s * a10
                amps[j] = -s * a01 + c * a10


def apply_one_qubit(cnp.ndarray amps_arr, int q, u):
    cdef double complex[:] amps = amps_arr
    cdef double complex u00 = u[0, 0], u01 = u[0, 1], u10 = u[1, 0], u11 = u[1, 1]
    cdef i64 n = amps.shape[0], i
    cdef i64 m = (<i64>1) << q
    cdef double complex a0, a1
    with nogil:
        for i in range(n):
            if (i & m) == 0:
                a0 = amps[i]
                a1 = amps[i | m]
                amps[i] = u00 * a0 + u01 * a1
                amps[i | m] = u10 * a0 + u11 * a1


def apply_rxx(cnp.ndarray amps_arr, int qa, int qb, double angle):
    cdef double complex[:] amps = amps_arr
    cdef i64 n = amps.shape[0], i, j
    cdef i64 ma = (<i64>1) << qa, mb = (<i64>1) << qb
    cdef double complex c = cos(angle / 2)
    cdef double complex s = -1j * sin(angle / 2)
    cdef double complex a, b
    with nogil:
        for i in range(n):
            if (i & ma) == 0:
                j = i ^ ma ^ mb
                a = amps[i]
                b = amps[j]
                amps[i] = c * a + s * b
                amps[j] = s * a + c * b


def apply_cz(cnp.ndarray amps_arr, int qa, int qb):
    cdef double complex[:] amps = amps_arr
    cdef i64 n = amps.shape[0], i
    cdef i64 m = ((<i64>1) << qa) | ((<i64>1) << qb)
    with nogil:
        for i in range(n):
            if (i & m) == m:
                amps[i] = -amps[i]


cdef inline double flip_weight(double y, double h, double delta) noexcept nogil:
    if y <= h:
        return delta * (y / h)
    return delta + (1.0 - delta) * (y - h) / (1.0 - h)


def recover_strings(configs, occ, int n_spatial, int n_up, int n_down,
                    double h, double delta, uniforms, bint single_attempt):
    out_arr = np.array(configs, dtype=np.int64, copy=True)
    cdef i64[:] out = out_arr
    cdef double[:] oc = np.ascontiguousarray(occ, dtype=np.float64)
    cdef double[:] un = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef int n = n_spatial
    cdef Py_ssize_t stride = 4 * n, k, u_pos
    cdef int block, target, off, i, j, count, want, need, ncand, pick, rep
    cdef i64 cfg
    cdef int cand[64]
    cdef double weights[64]
    cdef double total, r, acc, u1, u2
    if n > 64:
        raise ValueError("recover_strings supports at most 64 orbitals per block")
    with nogil:
        for k in range(out.shape[0]):
            cfg = out[k]
            u_pos = k * stride
            for block in range(2):
                target = n_up if block == 0 else n_down
                off = block * n
                count = 0
                for i in range(n):
                    count += (cfg >> (off + i)) & 1
                if count == target:
                    continue
                want = 1 if count > target else 0
                need = count - target if count > target else target - count
                ncand = 0
                for i in range(n):
                    if ((cfg >> (off + i)) & 1) == want:
                        cand[ncand] = i
                        weights[ncand] = flip_weight(fabs(want - oc[off + i]), h, delta)
                        ncand += 1
                for rep in range(need):
                    if single_attempt:
                        u1 = un[u_pos]
                        u2 = un[u_pos + 1]
                        u_pos += 2
                        pick = <int>(u1 * ncand)
                        if pick > ncand - 1:
                            pick = ncand - 1
                        if u2 >= weights[pick]:
                            continue
                    else:
                        u1 = un[u_pos]
                        u_pos += 1
                        total = 0.0
                        for j in range(ncand):
                            total += weights[j]
                        if total <= 0.0:
                            pick = <int>(u1 * ncand)
                            if pick > ncand - 1:
                                pick = ncand - 1
                        else:
                            r = u1 * total
                            pick = ncand - 1
                            acc = 0.0
                            for j in range(ncand):
                                acc += weights[j]
                                if r < acc:
                                    pick = j
                                    break
                    cfg ^= (<i64>1) << (off + cand[pick])
                    for j in range(pick, ncand - 1):
                        cand[j] = cand[j + 1]
                        weights[j] = weights[j + 1]
                    ncand -= 1
            out[k] = cfg
    return out_arr
