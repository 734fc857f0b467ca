"""Diagonal-only cost estimation and sequential trigonometric-interpolation minimization."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from math import pi, sqrt
from typing import Protocol, Sequence

import numpy as np

from .encoding import PauliSum
from .sector import SectorSpec
from .seeding import derive_seed
from .simulator import NOISELESS, Gate, NoiseConfig, StateVector, run_circuit, sample_circuit
from .subspace import apply_hamiltonian

N_SHIFTS = 5
MAX_RETRIES = 3
DEFAULT_SHOTS = 600
DEFAULT_UPDATES = 60

ESTIMATORS = ("shots", "exact")
COSTS = ("diagonal", "energy")


class Executor(Protocol):
    n_params: int

    def prepare(self, params: Sequence[float]) -> tuple[StateVector, list[Gate]]: ...


class ZeroRetainedError(RuntimeError):
    """No sample survived post-selection."""


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CostEvaluation:
    e_z: float
    shots_total: int
    shots_retained: int
    retained_fraction: float
    std_error: float


def _final_state(executor: Executor, params) -> StateVector:
    initial, gates = executor.prepare(params)
    return run_circuit(initial.copy(), gates)


def evaluate_cost(
    executor: Executor,
    params,
    h: PauliSum,
    sector: SectorSpec,
    shots: int = DEFAULT_SHOTS,
    noise: NoiseConfig = NOISELESS,
    seed=None,
    estimator: str = "shots",
    cost: str = "diagonal",
) -> CostEvaluation:
    """Post-selected cost of the circuit at ``params``.

    ``cost="diagonal"`` is the count-weighted mean of ``<z|H|z>`` over
    in-sector outcomes, renormalized over the retained total. With
    ``estimator="exact"`` the Born probabilities replace shots (noiseless
    only). ``cost="energy"`` returns the exact ``<psi|H|psi>`` of the
    noiseless state and ignores shots.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}")
    if cost not in COSTS:
        raise ValueError(f"cost must be one of {COSTS}")
    if cost == "energy" or estimator == "exact":
        if not noise.is_noiseless:
            raise ValueError("exact evaluation is only defined without noise")
        state = _final_state(executor, params)
        probs = state.probabilities()
        support = np.nonzero(probs > 1e-300)[0].astype(np.int64)
        p = probs[support]
        ok = sector.contains(support)
        mass = float(p[ok].sum())
        if mass <= 0.0:
            raise ZeroRetainedError("state has no weight in the target sector")
        if cost == "energy":
            amps = state.amplitudes[support]
            value = 0.0
            for part in (amps.real, amps.imag):
                if np.any(part):
                    cfg, hv = apply_hamiltonian(h, support, part)
                    value += float(part @ hv[np.searchsorted(cfg, support)])
            value /= float(p.sum())
        else:
            diag = h.diagonal_energies(support[ok])
            value = float(p[ok] @ diag) / mass
        return CostEvaluation(value, 0, 0, mass, 0.0)

    if shots < 1:
        raise ValueError("shots must be >= 1")
    initial, gates = executor.prepare(params)
    samples = sample_circuit(initial, gates, shots, noise, seed)
    configs, counts = samples.arrays()
    ok = sector.contains(configs)
    kept = int(counts[ok].sum())
    if kept == 0:
        raise ZeroRetainedError(f"0 of {shots} shots retained after post-selection")
    diag = h.diagonal_energies(configs[ok])
    w = counts[ok] / kept
    mean = float(w @ diag)
    var = float(w @ (diag - mean) ** 2)
    return CostEvaluation(mean, shots, kept, kept / shots, sqrt(var / kept))


def fit_trig(values: Sequence[float]) -> np.ndarray:
    """Coefficients (a0, a1, b1, a2, b2) of the degree-2 trig polynomial through
    ``values[k]`` at ``u = 2 pi k / 5``."""
    y = np.asarray(values, dtype=float)
    if y.shape != (N_SHIFTS,):
        raise ValueError("need exactly 5 samples")
    f = np.fft.rfft(y) / N_SHIFTS
    return np.array([f[0].real, 2 * f[1].real, -2 * f[1].imag, 2 * f[2].real, -2 * f[2].imag])


def trig_eval(coef: np.ndarray, u) -> np.ndarray:
    a0, a1, b1, a2, b2 = coef
    u = np.asarray(u, dtype=float)
    return a0 + a1 * np.cos(u) + b1 * np.sin(u) + a2 * np.cos(2 * u) + b2 * np.sin(2 * u)


def trig_argmin(coef: np.ndarray, grid: int = 360) -> float:
    """Global minimizer in [0, 2 pi): grid search, then Newton refinement of each local minimum."""
    a0, a1, b1, a2, b2 = coef
    us = np.linspace(0.0, 2 * pi, grid, endpoint=False)
    vals = trig_eval(coef, us)
    local = np.nonzero((vals <= np.roll(vals, 1)) & (vals <= np.roll(vals, -1)))[0]
    best_u, best_v = float(us[np.argmin(vals)]), float(vals.min())
    for i in local:
        u = float(us[i])
        for _ in range(30):
            d1 = -a1 * np.sin(u) + b1 * np.cos(u) - 2 * a2 * np.sin(2 * u) + 2 * b2 * np.cos(2 * u)
            d2 = -a1 * np.cos(u) - b1 * np.sin(u) - 4 * a2 * np.cos(2 * u) - 4 * b2 * np.sin(2 * u)
            if d2 <= 0:
                break
            step = d1 / d2
            u -= step
            if abs(step) < 1e-15:
                break
        v = float(trig_eval(coef, u))
        if v < best_v:
            best_u, best_v = u, v
    return best_u % (2 * pi)


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    parameter_index: int
    evaluation: CostEvaluation
    params: np.ndarray


@dataclass
class OptimizationTrace:
    """Chronological record; entry 0 is the initial point (parameter_index -1)."""

    iterations: list[TraceEntry] = field(default_factory=list)
    evaluations: int = 0
    retries: int = 0

    @property
    def updates(self) -> int:
        return max(len(self.iterations) - 1, 0)

    @property
    def final(self) -> TraceEntry:
        return self.iterations[-1]

    @property
    def best(self) -> TraceEntry:
        return min(self.iterations, key=lambda e: e.evaluation.e_z)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "parameter_index", "e_z", "std_error", "retained_fraction"])
        for e in self.iterations:
            ev = e.evaluation
            w.writerow([e.iteration, e.parameter_index, repr(ev.e_z), repr(ev.std_error),
                        repr(ev.retained_fraction)])
        return buf.getvalue()


def nft_minimize(
    executor: Executor,
    h: PauliSum,
    sector: SectorSpec,
    initial_params,
    sweeps: int | None = None,
    shots_per_eval: int = DEFAULT_SHOTS,
    seed=None,
    noise: NoiseConfig = NOISELESS,
    estimator: str = "shots",
    cost: str = "diagonal",
    max_updates: int | None = None,
) -> OptimizationTrace:
    """Sequential per-parameter minimization with 5-point trigonometric fits.

    The parameters are visited cyclically in index order. Each update
    evaluates 4 new shifts ``theta0 + 2 pi k / 5`` (the k=0 value is the
    previous evaluation), moves the parameter to the global minimizer of the
    fitted curve and evaluates the cost there. The number of updates is
    ``sweeps * n_params`` if ``sweeps`` is given, else ``max_updates``
    (default 60). Cost evaluations total ``1 + 5 * updates`` plus retries.
    """
    params = np.array(initial_params, dtype=float)
    n = len(params)
    if n == 0:
        raise ValueError("no parameters to optimize")
    if sweeps is not None:
        if sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        total = sweeps * n
    else:
        total = DEFAULT_UPDATES if max_updates is None else max_updates
    if total < 0:
        raise ValueError("max_updates must be >= 0")
    trace = OptimizationTrace()

    def evaluate(p, *key) -> CostEvaluation:
        last = None
        for attempt in range(MAX_RETRIES + 1):
            s = None if seed is None else derive_seed(seed, *key, attempt)
            try:
                trace.evaluations += 1
                return evaluate_cost(executor, p, h, sector, shots_per_eval, noise, s, estimator, cost)
            except ZeroRetainedError as exc:
                last = exc
                trace.retries += 1
        raise OptimizationError(
            f"evaluation {key} retained no samples after {MAX_RETRIES} retries: {last}"
        )

    current = evaluate(params, 0, 0)
    trace.iterations.append(TraceEntry(0, -1, current, params.copy()))
    for it in range(1, total + 1):
        i = (it - 1) % n
        theta0 = params[i]
        values = [current.e_z]
        for k in range(1, N_SHIFTS):
            trial = params.copy()
            trial[i] = theta0 + 2 * pi * k / N_SHIFTS
            values.append(evaluate(trial, it, k).e_z)
        coef = fit_trig(values)
        params[i] = (theta0 + trig_argmin(coef)) % (2 * pi)
        current = evaluate(params, it, N_SHIFTS)
        trace.iterations.append(TraceEntry(it, i, current, params.copy()))
    return trace
