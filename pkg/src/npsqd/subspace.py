"""Projected Hamiltonians over configuration sets and their ground states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .encoding import PauliSum, project_entries
from .sector import SectorSpec

DENSE_LIMIT = 2000
FCI_LIMIT = 1_000_000


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SubspaceBasis:
    configurations: np.ndarray

    def __post_init__(self):
        cfg = np.asarray(self.configurations, dtype=np.int64).ravel()
        if len(np.unique(cfg)) != len(cfg):
            raise ValueError("basis contains duplicate configurations")
        object.__setattr__(self, "configurations", cfg)

    def __len__(self) -> int:
        return len(self.configurations)


@dataclass(frozen=True)
class SubspaceResult:
    energy: float
    coefficients: np.ndarray
    configurations: np.ndarray | None = None
    iterations: int = 0

    @property
    def dimension(self) -> int:
        return len(self.coefficients)


def _as_configs(basis) -> np.ndarray:
    if isinstance(basis, SubspaceBasis):
        return basis.configurations
    return SubspaceBasis(basis).configurations


def project(h: PauliSum, basis, sparse: bool | None = None):
    """Matrix of ``h`` restricted to ``basis``.

    Dense ``ndarray`` up to ``DENSE_LIMIT`` states, CSR above (or as forced by ``sparse``).
    """
    configs = _as_configs(basis)
    if len(configs) == 0:
        raise ValueError("basis is empty")
    d = len(configs)
    rows, cols, vals = project_entries(h, configs)
    if sparse is None:
        sparse = d > DENSE_LIMIT
    if sparse:
        return sp.csr_matrix((vals, (rows, cols)), shape=(d, d))
    m = np.zeros((d, d))
    np.add.at(m, (rows, cols), vals)
    return m


def _check_symmetric(m, tol: float = 1e-10) -> None:
    if m.shape[0] != m.shape[1]:
        raise ValueError("matrix is not square")
    if sp.issparse(m):
        asym = abs(m - m.T).max() if m.nnz else 0.0
    else:
        asym = np.max(np.abs(m - m.T)) if m.size else 0.0
    if asym > tol:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")


def _fix_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def ground_state(m, tol: float = 1e-10, seed: int = 0, max_restarts: int = 50) -> SubspaceResult:
    """Lowest eigenpair of a real symmetric matrix (dense or sparse)."""
    _check_symmetric(m)
    d = m.shape[0]
    if d == 0:
        raise ValueError("empty matrix")
    if d <= DENSE_LIMIT:
        dense = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=float)
        w, v = np.linalg.eigh(dense)
        return SubspaceResult(float(w[0]), _fix_sign(v[:, 0]))
    return lanczos(m, tol=tol, seed=seed, max_restarts=max_restarts)


def lanczos(
    m,
    tol: float = 1e-10,
    krylov_dim: int = 120,
    max_restarts: int = 50,
    seed: int = 0,
) -> SubspaceResult:
    """Restarted Lanczos with full reorthogonalization.

    Each cycle builds a Krylov basis from the current Ritz vector and restarts
    from the new lowest Ritz vector until ``||Mv - Ev|| <= tol * ||M||_F``.
    """
    d = m.shape[0]
    norm = float(sp.linalg.norm(m)) if sp.issparse(m) else float(np.linalg.norm(m))
    if norm == 0.0:
        v = np.zeros(d)
        v[0] = 1.0
        return SubspaceResult(0.0, v)
    k_max = min(krylov_dim, d)
    v = np.random.default_rng(seed).standard_normal(d)
    v /= np.linalg.norm(v)
    residual = np.inf
    for restart in range(max_restarts):
        q = np.zeros((k_max, d))
        alpha = np.zeros(k_max)
        beta = np.zeros(k_max)
        q[0] = v
        k = 0
        for k in range(k_max):
            w = m @ q[k]
            alpha[k] = q[k] @ w
            w -= q[: k + 1].T @ (q[: k + 1] @ w)
            w -= q[: k + 1].T @ (q[: k + 1] @ w)
            b = np.linalg.norm(w)
            if k + 1 == k_max or b < 1e-14 * norm:
                break
            beta[k] = b
            q[k + 1] = w / b
        n = k + 1
        t = np.diag(alpha[:n]) + np.diag(beta[: n - 1], 1) + np.diag(beta[: n - 1], -1)
        theta, s = np.linalg.eigh(t)
        v = q[:n].T @ s[:, 0]
        v /= np.linalg.norm(v)
        energy = float(v @ (m @ v))
        residual = float(np.linalg.norm(m @ v - energy * v))
        if residual <= tol * norm:
            return SubspaceResult(energy, _fix_sign(v), iterations=restart + 1)
    raise ConvergenceError(
        f"Lanczos did not converge: residual {residual:.3e} > {tol * norm:.3e} "
        f"after {max_restarts} restarts of dimension {k_max}"
    )


def solve(h: PauliSum, basis, tol: float = 1e-10) -> SubspaceResult:
    """Project ``h`` onto ``basis`` and return the ground state tagged with its basis."""
    configs = _as_configs(basis)
    res = ground_state(project(h, configs), tol=tol)
    return SubspaceResult(res.energy, res.coefficients, configs, res.iterations)


def apply_hamiltonian(h: PauliSum, configs: np.ndarray, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sparse ``H|psi>`` for ``|psi> = sum_a coeffs[a] |configs[a]>``; returns (support, amplitudes)."""
    configs = np.asarray(configs, dtype=np.int64)
    coeffs = np.asarray(coeffs, dtype=float)
    gx, gp, tz, tc = h._grouped
    targets, values = [], []
    for g in range(len(gx)):
        amp = kernels.diag_energies(configs, tz[gp[g] : gp[g + 1]], tc[gp[g] : gp[g + 1]])
        targets.append(configs ^ gx[g])
        values.append(amp * coeffs)
    if not targets:
        return configs.copy(), np.zeros(len(configs))
    all_t = np.concatenate(targets)
    all_v = np.concatenate(values)
    support, inverse = np.unique(all_t, return_inverse=True)
    out = np.zeros(len(support))
    np.add.at(out, inverse, all_v)
    return support, out


def energy_variance(h: PauliSum, basis, coeffs) -> float:
    """Standard deviation sqrt(<H^2> - <H>^2) of the subspace state in the full space."""
    configs = _as_configs(basis)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != configs.shape:
        raise ValueError("coefficients do not match the basis")
    support, hpsi = apply_hamiltonian(h, configs, coeffs)
    order = np.argsort(configs)
    pos = np.searchsorted(support, configs[order])
    energy = float(coeffs[order] @ hpsi[pos])
    var = float(hpsi @ hpsi) - energy * energy
    return float(np.sqrt(max(var, 0.0)))


def fci_ground_state(h: PauliSum, sector: SectorSpec, tol: float = 1e-10) -> SubspaceResult:
    """Exact ground state of ``h`` within the full particle-number sector."""
    if sector.n_qubits != h.n_qubits:
        raise ValueError(f"sector has {sector.n_qubits} qubits, Hamiltonian {h.n_qubits}")
    return solve(h, sector.configurations(limit=FCI_LIMIT), tol=tol)
