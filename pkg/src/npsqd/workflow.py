"""End-to-end pipeline: Hamiltonian, optimization, sampling, recovery and subspace energy."""

from __future__ import annotations

import configparser
import dataclasses
import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import kernels
from .ansatz import AnsatzExecutor, AnsatzTemplate, build_circuit, circuit_to_text
from .encoding import PauliSum, jordan_wigner
from .fermion import (
    FermionHamiltonian,
    SpinPenalty,
    build_spin_squared,
    make_hubbard_chain,
    parse_fcidump,
    penalize,
    spin_squared_target,
)
from .optimizer import COSTS, ESTIMATORS, nft_minimize
from .recovery import MODES, RecoveryConfig, RecoveryResult, post_select, sccr_recover
from .sector import SectorSpec
from .seeding import derive_seed
from .simulator import NoiseConfig, SampleSet, sample_circuit
from .subspace import energy_variance, fci_ground_state, solve
from .transpiler import decompose_to_native, gate_counts, optimize_native

FIXTURES = ("hubbard", "h2")

# Stage keys for seed derivation: derive_seed(master, STAGE_KEYS[stage]).
STAGE_KEYS = {"optimize": 1, "sample": 2, "recover": 3}


class ConfigError(ValueError):
    """Invalid or inconsistent pipeline configuration."""


class StageError(RuntimeError):
    def __init__(self, stage: str, seed: int, cause: BaseException):
        super().__init__(f"stage '{stage}' failed (master seed {seed}): {cause}")
        self.stage = stage
        self.seed = seed
        self.cause = cause


@dataclass
class PipelineConfig:
    """All pipeline settings. Defaults follow the hardware protocol being emulated."""

    fixture: str | None = "hubbard"
    fcidump: str | None = None
    sites: int = 5
    hopping: float = 1.0
    onsite: float = 4.0
    n_up: int | None = None
    n_down: int | None = None
    penalty_strength: float = 0.01
    s0_squared: float | None = None
    layers: int = 1
    shots_per_eval: int = 600
    updates: int = 60
    estimator: str = "shots"
    cost: str = "diagonal"
    final_shots: int = 10_000
    readout_flip_p: float = 0.1
    depolarizing_p: float = 0.0
    recovery_h: float = 0.8
    recovery_delta: float = 0.2
    batches: int = 10
    max_passes: int = 100
    repetitions: int = 200
    recovery_mode: str = "until_valid"
    seed: int = 0
    output: str | None = None
    workers: int = 1
    fci_limit: int = 1_000_000

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        try:
            if self.fcidump is None and self.fixture not in FIXTURES:
                raise ConfigError(f"fixture must be one of {FIXTURES} or an FCIDUMP path given")
            if self.fcidump is not None and not Path(self.fcidump).is_file():
                raise ConfigError(f"FCIDUMP file not found: {self.fcidump}")
            if self.estimator not in ESTIMATORS:
                raise ConfigError(f"estimator must be one of {ESTIMATORS}")
            if self.cost not in COSTS:
                raise ConfigError(f"cost must be one of {COSTS}")
            if self.recovery_mode not in MODES:
                raise ConfigError(f"recovery mode must be one of {MODES}")
            for name in ("layers", "shots_per_eval", "final_shots", "workers"):
                if getattr(self, name) < 1:
                    raise ConfigError(f"{name} must be >= 1")
            if self.updates < 0:
                raise ConfigError("updates must be >= 0")
            if self.sites < 2:
                raise ConfigError("sites must be >= 2")
            NoiseConfig(self.readout_flip_p, self.depolarizing_p)
            self.recovery_config()
            if self.s0_squared is not None:
                SpinPenalty(self.penalty_strength, self.s0_squared)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def noise(self) -> NoiseConfig:
        return NoiseConfig(self.readout_flip_p, self.depolarizing_p)

    def recovery_config(self) -> RecoveryConfig:
        return RecoveryConfig(
            self.recovery_h, self.recovery_delta, self.batches, self.max_passes,
            self.repetitions, self.recovery_mode,
        )

    def replace(self, **changes) -> PipelineConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


# (section, key) -> (attribute, parser)
_SCHEMA: dict[tuple[str, str], tuple[str, Any]] = {
    ("hamiltonian", "fixture"): ("fixture", str),
    ("hamiltonian", "fcidump"): ("fcidump", str),
    ("hamiltonian", "sites"): ("sites", int),
    ("hamiltonian", "t"): ("hopping", float),
    ("hamiltonian", "u"): ("onsite", float),
    ("sector", "n_up"): ("n_up", int),
    ("sector", "n_down"): ("n_down", int),
    ("penalty", "strength"): ("penalty_strength", float),
    ("penalty", "s0_squared"): ("s0_squared", float),
    ("ansatz", "layers"): ("layers", int),
    ("optimizer", "shots"): ("shots_per_eval", int),
    ("optimizer", "updates"): ("updates", int),
    ("optimizer", "estimator"): ("estimator", str),
    ("optimizer", "cost"): ("cost", str),
    ("sampling", "shots"): ("final_shots", int),
    ("noise", "readout"): ("readout_flip_p", float),
    ("noise", "depolarizing"): ("depolarizing_p", float),
    ("recovery", "h"): ("recovery_h", float),
    ("recovery", "delta"): ("recovery_delta", float),
    ("recovery", "batches"): ("batches", int),
    ("recovery", "max_passes"): ("max_passes", int),
    ("recovery", "repetitions"): ("repetitions", int),
    ("recovery", "mode"): ("recovery_mode", str),
    ("run", "seed"): ("seed", int),
    ("run", "output"): ("output", str),
    ("run", "workers"): ("workers", int),
    ("run", "fci_limit"): ("fci_limit", int),
}


def config_from_text(text: str, base_dir: Path | None = None, **overrides) -> PipelineConfig:
    """Parse an INI-style config; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values: dict[str, Any] = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            entry = _SCHEMA.get((section, key))
            if entry is None:
                raise ConfigError(f"unknown config key [{section}] {key}")
            attr, conv = entry
            try:
                values[attr] = conv(raw.strip())
            except ValueError:
                raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None
    if "fcidump" in values:
        path = Path(values["fcidump"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        values["fcidump"] = str(path)
        values.setdefault("fixture", None)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**values)


def load_config(path, **overrides) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_text(text, base_dir=path.parent, **overrides)


def config_to_text(cfg: PipelineConfig) -> str:
    parser = configparser.ConfigParser(interpolation=None)
    for (section, key), (attr, _) in _SCHEMA.items():
        value = getattr(cfg, attr)
        if value is None:
            continue
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, repr(value) if isinstance(value, float) else str(value))
    from io import StringIO

    buf = StringIO()
    parser.write(buf)
    return buf.getvalue()


def h2_fixture_text() -> str:
    return resources.files("npsqd").joinpath("data/h2_sto3g_0735.fcidump").read_text()


def load_hamiltonian(cfg: PipelineConfig) -> FermionHamiltonian:
    if cfg.fcidump is not None:
        ham = parse_fcidump(Path(cfg.fcidump).read_text())
    elif cfg.fixture == "h2":
        ham = parse_fcidump(h2_fixture_text())
    else:
        n_up = 3 if cfg.n_up is None and cfg.sites == 5 else cfg.n_up
        n_down = 2 if cfg.n_down is None and cfg.sites == 5 else cfg.n_down
        ham = make_hubbard_chain(cfg.sites, cfg.hopping, cfg.onsite, n_up, n_down)
    if cfg.n_up is not None or cfg.n_down is not None:
        ham = dataclasses.replace(
            ham,
            n_up=ham.n_up if cfg.n_up is None else cfg.n_up,
            n_down=ham.n_down if cfg.n_down is None else cfg.n_down,
        )
    return ham


@dataclass
class Problem:
    hamiltonian: FermionHamiltonian
    sector: SectorSpec
    penalty: SpinPenalty
    qubit_hamiltonian: PauliSum


def build_problem(cfg: PipelineConfig) -> Problem:
    ham = load_hamiltonian(cfg)
    sector = SectorSpec(ham.n_spatial, ham.n_up, ham.n_down)
    s0 = cfg.s0_squared if cfg.s0_squared is not None else spin_squared_target(ham.n_up, ham.n_down)
    penalty = SpinPenalty(cfg.penalty_strength, s0)
    op = penalize(ham.to_operator(), build_spin_squared(ham.n_spatial), penalty)
    return Problem(ham, sector, penalty, jordan_wigner(op, ham.n_qubits))


def gibbs_delta(gse_ls: float, gse_is: float, corr_ls: float = 0.0, corr_is: float = 0.0) -> float:
    """Free-energy difference G(LS) - G(IS) from ground-state energies plus external corrections."""
    return (gse_ls + corr_ls) - (gse_is + corr_is)


@dataclass
class PipelineReport:
    config: dict[str, Any]
    seeds: dict[str, int]
    backend: str
    n_qubits: int
    sector: dict[str, int]
    optimized_params: list[float]
    optimizer: dict[str, Any]
    retention: dict[str, Any]
    pre_sd_energy: float
    pre_sd_std_error: float
    recovery: dict[str, Any]
    sd_energy: float
    sd_dimension: int
    energy_std: float
    fci_energy: float | None
    deviation: float | None
    gate_counts: dict[str, dict[str, int]]
    timing: dict[str, float] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> PipelineReport:
        return cls(**json.loads(text))


@dataclass
class PipelineResult:
    report: PipelineReport
    trace_csv: str
    samples: SampleSet
    recovery: RecoveryResult
    circuit_text: str


def _stage(name: str, cfg: PipelineConfig, timing: dict[str, float], fn, *args, **kwargs):
    t0 = time.perf_counter()
    try:
        return fn(*args, **kwargs)
    except (ConfigError, StageError):
        raise
    except Exception as exc:
        raise StageError(name, cfg.seed, exc) from exc
    finally:
        timing[name] = time.perf_counter() - t0


def _post_selected_estimate(h: PauliSum, s_n: SampleSet) -> tuple[float, float]:
    configs, counts = s_n.arrays()
    if counts.sum() == 0:
        return float("nan"), float("nan")
    diag = h.diagonal_energies(configs)
    w = counts / counts.sum()
    mean = float(w @ diag)
    var = float(w @ (diag - mean) ** 2)
    return mean, float(np.sqrt(var / counts.sum()))


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Run every stage and, when ``cfg.output`` is set, write the artifacts there."""
    timing: dict[str, float] = {}
    seeds = {name: derive_seed(cfg.seed, key) for name, key in STAGE_KEYS.items()}
    seeds["master"] = cfg.seed

    problem = _stage("hamiltonian", cfg, timing, build_problem, cfg)
    h, sector = problem.qubit_hamiltonian, problem.sector
    template = AnsatzTemplate(sector.n_spatial, sector.n_up, sector.n_down, cfg.layers)
    executor = AnsatzExecutor(template)
    noise = cfg.noise()
    opt_noise = noise if cfg.estimator == "shots" and cfg.cost == "diagonal" else NoiseConfig()

    trace = _stage(
        "optimize", cfg, timing, nft_minimize, executor, h, sector, np.zeros(template.n_params),
        shots_per_eval=cfg.shots_per_eval, seed=seeds["optimize"], noise=opt_noise,
        estimator=cfg.estimator, cost=cfg.cost, max_updates=cfg.updates,
    )
    params = trace.final.params

    initial, gates = executor.prepare(params)
    samples = _stage(
        "sample", cfg, timing, sample_circuit, initial, gates, cfg.final_shots, noise, seeds["sample"]
    )
    s_n, s_x = post_select(samples, sector)
    if not s_n:
        raise StageError("post_select", cfg.seed, RuntimeError("no in-sector samples"))
    pre_e, pre_err = _post_selected_estimate(h, s_n)

    rec = _stage(
        "recover", cfg, timing, sccr_recover, s_n, s_x, h, sector, cfg.recovery_config(),
        seeds["recover"], cfg.workers,
    )
    combined = rec.combined.arrays()[0]
    sd = _stage("subspace", cfg, timing, solve, h, combined)
    std = _stage("variance", cfg, timing, energy_variance, h, combined, sd.coefficients)

    fci_energy = None
    if sector.dimension <= cfg.fci_limit:
        fci_energy = _stage("fci", cfg, timing, fci_ground_state, h, sector).energy

    def transpile():
        naive = decompose_to_native(gates, template.n_qubits)
        return {"naive": gate_counts(naive), "optimized": gate_counts(optimize_native(naive))}

    counts = _stage("transpile", cfg, timing, transpile)

    report = PipelineReport(
        config=cfg.to_dict(),
        seeds=seeds,
        backend=kernels.BACKEND,
        n_qubits=template.n_qubits,
        sector={"n_spatial": sector.n_spatial, "n_up": sector.n_up, "n_down": sector.n_down},
        optimized_params=[float(p) for p in params],
        optimizer={
            "updates": trace.updates,
            "evaluations": trace.evaluations,
            "retries": trace.retries,
            "initial_e_z": trace.iterations[0].evaluation.e_z,
            "final_e_z": trace.final.evaluation.e_z,
            "trace": "trace.csv",
        },
        retention={
            "final_shots": samples.shots,
            "retained_shots": s_n.shots,
            "retained_fraction": s_n.shots / samples.shots,
            "unique_retained": len(s_n),
            "unique_rejected": len(s_x),
        },
        pre_sd_energy=pre_e,
        pre_sd_std_error=pre_err,
        recovery={
            "kept_shots": rec.kept.shots,
            "recovered_shots": rec.recovered.shots,
            "unrecovered_shots": rec.unrecovered_shots,
            "passes": rec.passes,
            "selected_repetition": rec.repetition,
            "repetitions": cfg.repetitions,
        },
        sd_energy=sd.energy,
        sd_dimension=sd.dimension,
        energy_std=std,
        fci_energy=fci_energy,
        deviation=None if fci_energy is None else sd.energy - fci_energy,
        gate_counts=counts,
        timing=timing,
    )
    result = PipelineResult(
        report, trace.to_csv(), samples, rec, circuit_to_text(gates, template.n_qubits)
    )
    if cfg.output is not None:
        write_outputs(result, cfg.output)
    return result


def write_outputs(result: PipelineResult, directory) -> dict[str, str]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "trace": "trace.csv",
        "samples": "samples.txt",
        "recovered": "recovered.txt",
        "counts": "counts.json",
        "circuit": "circuit.txt",
    }
    result.report.artifacts = dict(files)
    (out / files["trace"]).write_text(result.trace_csv)
    (out / files["samples"]).write_text(result.samples.to_text())
    (out / files["recovered"]).write_text(result.recovery.to_text())
    (out / files["counts"]).write_text(
        json.dumps(result.report.gate_counts["optimized"], sort_keys=True) + "\n"
    )
    (out / files["circuit"]).write_text(result.circuit_text)
    (out / "report.json").write_text(result.report.to_json())
    return files


def summarize(report: PipelineReport) -> str:
    """Human-readable summary of a report."""
    r = report
    lines = [
        f"qubits {r.n_qubits}, sector up={r.sector['n_up']} down={r.sector['n_down']}, master seed {r.seeds['master']}",
        f"optimizer: {r.optimizer['updates']} updates, {r.optimizer['evaluations']} evaluations, "
        f"E_Z {r.optimizer['initial_e_z']:.6f} -> {r.optimizer['final_e_z']:.6f} Ha",
        f"retention: {r.retention['retained_shots']}/{r.retention['final_shots']} "
        f"({100 * r.retention['retained_fraction']:.1f} %)",
        f"post-selected E_Z: {r.pre_sd_energy:.6f} +/- {r.pre_sd_std_error:.6f} Ha",
        f"recovery: {r.recovery['recovered_shots']} recovered, {r.recovery['unrecovered_shots']} unrecovered, "
        f"repetition {r.recovery['selected_repetition']} of {r.recovery['repetitions']}",
        f"subspace energy: {r.sd_energy:.9f} Ha (dimension {r.sd_dimension}, Delta H {r.energy_std:.3e} Ha)",
    ]
    if r.fci_energy is not None:
        lines.append(f"exact energy: {r.fci_energy:.9f} Ha, deviation {1e3 * r.deviation:.4f} mHa")
    opt = r.gate_counts.get("optimized", {})
    lines.append(f"native gates: {opt.get('rxx', 0)} RXX, {opt.get('r', 0)} R, {opt.get('rz', 0)} RZ")
    return "\n".join(lines) + "\n"


def convergence_csv(trace_csv: str) -> str:
    """Plot-ready convergence table: update index, E_Z and a 1-sigma band."""
    import csv
    import io

    rows = list(csv.DictReader(io.StringIO(trace_csv)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "e_z", "lower", "upper", "retained_fraction"])
    for row in rows:
        e, s = float(row["e_z"]), float(row["std_error"])
        w.writerow([row["iteration"], repr(e), repr(e - s), repr(e + s), row["retained_fraction"]])
    return buf.getvalue()
