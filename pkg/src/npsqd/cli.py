"""Command-line entry point: ``npsqd {run,transpile,exact,recover,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .ansatz import circuit_from_text
from .fermion import FCIDUMPError
from .recovery import post_select, recovered_from_text, sccr_recover
from .seeding import derive_seed
from .simulator import SampleSet
from .subspace import energy_variance, fci_ground_state, solve
from .transpiler import decompose_to_native, gate_counts, native_to_text, optimize_native
from .workflow import (
    STAGE_KEYS,
    ConfigError,
    PipelineConfig,
    PipelineReport,
    StageError,
    build_problem,
    convergence_csv,
    load_config,
    run_pipeline,
    summarize,
)

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI config file")
    p.add_argument("--fixture", choices=("hubbard", "h2"), help="builtin Hamiltonian")
    p.add_argument("--fcidump", type=Path, help="FCIDUMP integral file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--output", type=Path, help="output directory")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--shots", type=int, help="shots per cost evaluation")
    p.add_argument("--final-shots", type=int, help="shots of the final sampling run")
    p.add_argument("--iterations", type=int, help="parameter updates of the optimizer")
    p.add_argument("--layers", type=int, help="ansatz layers")
    p.add_argument("--noise-readout", type=float, help="readout bit-flip probability")
    p.add_argument("--noise-depol", type=float, help="two-qubit depolarizing probability")
    p.add_argument("--repetitions", type=int, help="independent recovery runs")
    p.add_argument("--workers", type=int, help="threads for recovery repetitions")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="npsqd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full pipeline")
    _add_problem_flags(p)
    _add_run_flags(p)

    p = sub.add_parser("transpile", help="lower an ansatz circuit to native gates")
    p.add_argument("circuit", type=Path, help="circuit text file")
    p.add_argument("--output", type=Path, help="output directory (default: print)")
    p.add_argument("--no-prune", action="store_true", help="keep small-angle R gates")
    p.add_argument("--no-optimize", action="store_true", help="decomposition only")

    p = sub.add_parser("exact", help="exact sector ground state (FCI oracle)")
    _add_problem_flags(p)

    p = sub.add_parser("recover", help="configuration recovery and subspace energy on dumped samples")
    _add_problem_flags(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--samples", type=Path, help="raw samples ('bits count' lines)")
    src.add_argument("--recovered", type=Path, help="recovered set ('bits count origin'); SD only")
    p.add_argument("--repetitions", type=int, help="independent recovery runs")
    p.add_argument("--workers", type=int, help="threads for recovery repetitions")

    p = sub.add_parser("report", help="summarize a report.json")
    p.add_argument("report", type=Path, help="report.json of a run")
    p.add_argument("--output", type=Path, help="write convergence.csv here")
    return parser


def _config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {
        "seed": getattr(args, "seed", None),
        "output": None if getattr(args, "output", None) is None else str(args.output),
        "shots_per_eval": getattr(args, "shots", None),
        "final_shots": getattr(args, "final_shots", None),
        "updates": getattr(args, "iterations", None),
        "layers": getattr(args, "layers", None),
        "readout_flip_p": getattr(args, "noise_readout", None),
        "depolarizing_p": getattr(args, "noise_depol", None),
        "repetitions": getattr(args, "repetitions", None),
        "workers": getattr(args, "workers", None),
    }
    if getattr(args, "fixture", None) is not None:
        overrides.update(fixture=args.fixture, fcidump=None)
    if getattr(args, "fcidump", None) is not None:
        overrides.update(fcidump=str(args.fcidump), fixture=None)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.config is not None:
        return load_config(args.config, **overrides)
    return PipelineConfig(**overrides)


def _cmd_run(args) -> int:
    cfg = _config(args)
    result = run_pipeline(cfg)
    sys.stdout.write(summarize(result.report))
    if cfg.output is None:
        sys.stdout.write(result.report.to_json())
    return EXIT_OK


def _cmd_transpile(args) -> int:
    try:
        gates, n_qubits = circuit_from_text(args.circuit.read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read circuit: {exc}") from None
    nc = decompose_to_native(gates, n_qubits)
    if not args.no_optimize:
        nc = optimize_native(nc, prune=not args.no_prune)
    counts = json.dumps(gate_counts(nc), sort_keys=True) + "\n"
    if args.output is None:
        sys.stdout.write(native_to_text(nc))
        sys.stdout.write(counts)
    else:
        args.output.mkdir(parents=True, exist_ok=True)
        (args.output / "native.txt").write_text(native_to_text(nc))
        (args.output / "counts.json").write_text(counts)
        sys.stdout.write(counts)
    return EXIT_OK


def _cmd_exact(args) -> int:
    cfg = _config(args)
    problem = build_problem(cfg)
    res = fci_ground_state(problem.qubit_hamiltonian, problem.sector)
    out = {
        "fci_energy": res.energy,
        "dimension": res.dimension,
        "n_qubits": problem.sector.n_qubits,
        "sector": [problem.sector.n_spatial, problem.sector.n_up, problem.sector.n_down],
    }
    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if cfg.output is not None:
        Path(cfg.output).mkdir(parents=True, exist_ok=True)
        (Path(cfg.output) / "exact.json").write_text(text)
    return EXIT_OK


def _cmd_recover(args) -> int:
    cfg = _config(args)
    problem = build_problem(cfg)
    h, sector = problem.qubit_hamiltonian, problem.sector
    try:
        if args.samples is not None:
            samples = SampleSet.from_text(args.samples.read_text())
        else:
            kept, rec = recovered_from_text(args.recovered.read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read samples: {exc}") from None
    out: dict = {}
    if args.samples is not None:
        s_n, s_x = post_select(samples, sector)
        seed = derive_seed(cfg.seed, STAGE_KEYS["recover"])
        try:
            result = sccr_recover(s_n, s_x, h, sector, cfg.recovery_config(), seed, cfg.workers)
        except ValueError as exc:
            raise StageError("recover", cfg.seed, exc) from exc
        combined = result.combined
        out.update(recovered_shots=result.recovered.shots, unrecovered_shots=result.unrecovered_shots)
        if cfg.output is not None:
            Path(cfg.output).mkdir(parents=True, exist_ok=True)
            (Path(cfg.output) / "recovered.txt").write_text(result.to_text())
    else:
        combined = kept.merged(rec)
    configs = combined.arrays()[0]
    if len(configs) == 0:
        raise StageError("subspace", cfg.seed, ValueError("empty configuration set"))
    sd = solve(h, configs)
    out.update(
        sd_energy=sd.energy,
        sd_dimension=sd.dimension,
        energy_std=energy_variance(h, configs, sd.coefficients),
    )
    sys.stdout.write(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        report = PipelineReport.from_json(args.report.read_text())
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"cannot read report: {exc}") from None
    sys.stdout.write(summarize(report))
    trace_path = args.report.parent / report.optimizer.get("trace", "trace.csv")
    if args.output is not None and trace_path.is_file():
        args.output.mkdir(parents=True, exist_ok=True)
        (args.output / "convergence.csv").write_text(convergence_csv(trace_path.read_text()))
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "transpile": _cmd_transpile,
    "exact": _cmd_exact,
    "recover": _cmd_recover,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, FCIDUMPError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
