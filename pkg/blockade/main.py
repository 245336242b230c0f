import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pydantic

from blockade.config import settings
from blockade.models.experiment_models import ExperimentConfig, InitialStateSpec, SolverKind, TimeGrid
from blockade.models.fpe_models import JacobianConvention
from blockade.models.kinetics_models import ExcitationDistribution
from blockade.models.lattice_models import Lattice, LatticeKind
from blockade.services.dimer_service import coefficient_table
from blockade.services.experiment_service import run_experiment, sweep_finite_size
from blockade.services.export_service import (
    ArtifactWriter,
    field_frame,
    rates_payload,
    snapshot_frame,
    trajectory_frame,
)
from blockade.services.fokker_planck_service import (
    bin_to_columns,
    cell_grid,
    column_density,
    fields,
    fit_quadratic_transform,
    solve_fpe,
    transform,
)
from blockade.services.lattice_service import enumerate_configurations, export_edge_list, export_summary
from blockade.services.master_service import build_rates_1d, build_rates_2d, solve_master
from blockade.services.validation_service import ValidationSuite
from blockade.utils.exceptions import BlockadeError, ValidationError
from blockade.utils.logger import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CRITERION_FAILED = 1
EXIT_ERROR = 2


def _print_json(writer: ArtifactWriter, payload) -> None:
    """Print a payload as indented JSON with the writer's float formatting."""
    print(json.dumps(writer.plain(payload), indent=2, ensure_ascii=False))


def _lattice(args) -> Lattice:
    """Lattice from --ring or --torus."""
    if args.torus:
        return Lattice.torus(*args.torus)
    if args.ring is None:
        raise BlockadeError("Specify --ring L or --torus LX LY")
    return Lattice.ring(args.ring)


def _time_grid(args) -> TimeGrid:
    """Ωt sample grid from --start/--stop/--samples."""
    return TimeGrid(start=args.start, stop=args.stop, samples=args.samples)


def _add_lattice_arguments(parser: argparse.ArgumentParser) -> None:
    """Mutually exclusive --ring / --torus flags."""
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--ring", type=int, metavar="L", help="ring of L sites")
    group.add_argument("--torus", type=int, nargs=2, metavar=("LX", "LY"), help="LX x LY torus")


def _add_time_arguments(parser: argparse.ArgumentParser, stop: float = 3.0, samples: int = 61) -> None:
    parser.add_argument("--start", type=float, default=0.0, help="first Ωt sample")
    parser.add_argument("--stop", type=float, default=stop, help="last Ωt sample")
    parser.add_argument("--samples", type=int, default=samples)


def _add_initial_arguments(parser: argparse.ArgumentParser) -> None:
    """Initial-state flags shared by quantum and compare."""
    parser.add_argument("--bits", help="explicit initial configuration, character k is site k")
    parser.add_argument("--column", type=int, help="draw the initial state uniformly from column n")
    parser.add_argument("--seed", type=int, help="seed for random initial states")
    parser.add_argument("--count", type=int, default=1, help="number of seeded random initial states")


def cmd_enumerate(args) -> int:
    """Print the space summary; with --export also write the edge list and summary files."""
    writer = ArtifactWriter(args.output_dir)
    space = enumerate_configurations(_lattice(args))
    if args.export:
        export_edge_list(space, writer)
        export_summary(space, writer)
    _print_json(writer, space.summary())
    return EXIT_OK


def cmd_coeffs(args) -> int:
    """Write the exact coefficient table to --output, or to stdout."""
    table = coefficient_table(args.length)
    if args.output:
        ArtifactWriter(str(Path(args.output).parent)).write_frame(Path(args.output).name, table)
    else:
        sys.stdout.write(table.to_csv(index=False, float_format=f"%.{settings.float_digits}g", lineterminator="\n"))
    return EXIT_OK


def _config_from_args(args, solvers: List[SolverKind]) -> ExperimentConfig:
    """Experiment config from --config JSON when given, otherwise from the flags."""
    if getattr(args, "config", None):
        payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
        return ExperimentConfig.model_validate(payload)
    return ExperimentConfig(
        name=args.name,
        lattice=_lattice(args),
        initial=InitialStateSpec(bits=args.bits, column=args.column, seed=args.seed, count=args.count),
        time_grid=_time_grid(args),
        solvers=solvers,
        omega=args.omega,
        output_dir=args.output_dir,
    )


def cmd_quantum(args) -> int:
    """Run the quantum solver alone and print state count and wall times."""
    report = run_experiment(_config_from_args(args, [SolverKind.QUANTUM]))
    _print_json(ArtifactWriter(report.output_dir), {"state_count": report.state_count, "wall_times": report.wall_times})
    return EXIT_OK


def cmd_master(args) -> int:
    """Solve the Master equation from a single column n0 of a ring or torus."""
    writer = ArtifactWriter(args.output_dir)
    lattice = _lattice(args)
    if lattice.kind == LatticeKind.RING:
        rates = build_rates_1d(lattice.extents[0])
    else:
        rates = build_rates_2d(enumerate_configurations(lattice))
    if not 0 <= args.n0 <= rates.n_max:
        raise ValidationError(f"--n0 must lie in 0..{rates.n_max}")
    p0 = np.zeros(rates.n_max + 1)
    p0[args.n0] = 1.0
    trajectory = solve_master(rates, ExcitationDistribution(p=p0), _time_grid(args).values())
    writer.write_json("rates.json", rates_payload(rates))
    writer.write_frame("master.csv", trajectory_frame(trajectory))
    _print_json(writer, {"final": trajectory[-1].p, "final_mean": trajectory[-1].mean})
    return EXIT_OK


def cmd_fpe(args) -> int:
    """Solve the Fokker-Planck equation of a ring and write fields, densities and binned p_n."""
    writer = ArtifactWriter(args.output_dir)
    field = fields(args.length, cell_grid(args.cells))
    transformed = transform(field, args.convention)
    snapshots = solve_fpe(field, column_density(field.grid, args.n0, args.length), _time_grid(args).values())
    writer.write_frame("fpe_field.csv", field_frame(field, transformed))
    writer.write_frame("fpe_density.csv", snapshot_frame(snapshots))
    writer.write_frame("fpe.csv", trajectory_frame([bin_to_columns(s, args.length) for s in snapshots]))
    fit = fit_quadratic_transform(transformed)
    _print_json(
        writer,
        {
            "final_mean_x": snapshots[-1].mean,
            "potential_minimum_x": transformed.potential_minimum_x,
            "quadratic_fit": fit,
        },
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    """Run the selected solvers on one experiment and print the pairwise TV summary."""
    solvers = [SolverKind(s) for s in args.solvers]
    report = run_experiment(_config_from_args(args, solvers))
    _print_json(
        ArtifactWriter(report.output_dir),
        [
            {"a": r.label_a, "b": r.label_b, "max_tv": r.max_tv, "mean_tv": r.mean_tv, "equilibrium_tv": r.equilibrium_tv}
            for r in report.comparisons
        ],
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    """Finite-size sweep; prints the RMS fluctuation per ring length."""
    if args.columns and len(args.columns) != len(args.lengths):
        raise BlockadeError("--columns needs one entry per length")
    writer = ArtifactWriter(args.output_dir)
    summary = sweep_finite_size(
        args.lengths,
        seeds=list(range(args.seed, args.seed + args.seeds)),
        columns=dict(zip(args.lengths, args.columns)) if args.columns else None,
        density=args.density,
        window=tuple(args.window),
        samples=args.samples,
        max_workers=args.workers,
        writer=writer,
    )
    _print_json(writer, summary.rms_by_length)
    return EXIT_OK


def cmd_validate(args) -> int:
    """Run the acceptance suite; exit code 1 when any criterion fails."""
    summary = ValidationSuite(fast=args.fast).run(args.only)
    writer = ArtifactWriter(args.output_dir)
    writer.write_json("validation.json", summary)
    for result in summary.results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status}  [{result.mode}] {result.key}: {result.title}")
    return EXIT_OK if summary.passed else EXIT_CRITERION_FAILED


def build_parser() -> argparse.ArgumentParser:
    """Top-level parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(
        prog="blockade",
        description="Blockade-constrained spin relaxation: enumeration, quantum, Master and Fokker-Planck solvers",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    pe = sub.add_parser("enumerate", help="Enumerate the configuration space and print its summary")
    _add_lattice_arguments(pe)
    pe.add_argument("--export", action="store_true", help="write the edge list and JSON summary")
    pe.add_argument("--output-dir", default=settings.output_dir)
    pe.set_defaults(func=cmd_enumerate)

    pc = sub.add_parser("coeffs", help="Print the ring coefficient table L,n,nu_n,c_down,T_down,T_up")
    pc.add_argument("--length", type=int, required=True)
    pc.add_argument("--output", help="CSV path instead of stdout")
    pc.set_defaults(func=cmd_coeffs)

    pq = sub.add_parser("quantum", help="Propagate an initial state and write p_n(t)")
    _add_lattice_arguments(pq)
    _add_initial_arguments(pq)
    _add_time_arguments(pq)
    pq.add_argument("--config", help="experiment JSON file")
    pq.add_argument("--name", default="quantum")
    pq.add_argument("--omega", type=float, default=settings.omega)
    pq.add_argument("--output-dir", default=settings.output_dir)
    pq.set_defaults(func=cmd_quantum)

    pm = sub.add_parser("master", help="Solve the Master equation from a single column")
    _add_lattice_arguments(pm)
    _add_time_arguments(pm)
    pm.add_argument("--n0", type=int, required=True)
    pm.add_argument("--output-dir", default=settings.output_dir)
    pm.set_defaults(func=cmd_master)

    pf = sub.add_parser("fpe", help="Solve the Fokker-Planck equation of a ring")
    pf.add_argument("--length", type=int, required=True)
    pf.add_argument("--n0", type=int, required=True)
    pf.add_argument("--cells", type=int, default=settings.fpe_cells)
    pf.add_argument(
        "--convention", choices=[c.value for c in JacobianConvention], default=settings.jacobian_convention
    )
    _add_time_arguments(pf)
    pf.add_argument("--output-dir", default=settings.output_dir)
    pf.set_defaults(func=cmd_fpe)

    pk = sub.add_parser("compare", help="Run an experiment and compare the selected solvers")
    _add_lattice_arguments(pk)
    _add_initial_arguments(pk)
    _add_time_arguments(pk)
    pk.add_argument("--config", help="experiment JSON file")
    pk.add_argument("--name", default="compare")
    pk.add_argument("--solvers", nargs="+", choices=[s.value for s in SolverKind], default=["quantum", "master"])
    pk.add_argument("--omega", type=float, default=settings.omega)
    pk.add_argument("--output-dir", default=settings.output_dir)
    pk.set_defaults(func=cmd_compare)

    ps = sub.add_parser("sweep", help="Finite-size fluctuation sweep over ring lengths")
    ps.add_argument("--lengths", type=int, nargs="+", required=True)
    ps.add_argument("--columns", type=int, nargs="+", help="initial column per length")
    ps.add_argument("--density", type=float, default=0.28, help="initial column = round(density·L)")
    ps.add_argument("--seeds", type=int, default=5, help="number of random initial states per length")
    ps.add_argument("--seed", type=int, default=0, help="first seed")
    ps.add_argument("--window", type=float, nargs=2, default=[2.0, 6.0], metavar=("START", "STOP"))
    ps.add_argument("--samples", type=int, default=81)
    ps.add_argument("--workers", type=int, default=settings.max_workers)
    ps.add_argument("--output-dir", default=settings.output_dir)
    ps.set_defaults(func=cmd_sweep)

    pv = sub.add_parser("validate", help="Run the acceptance suite; exit 1 on any failure")
    pv.add_argument("--fast", action="store_true", help="cheap subset on small rings")
    pv.add_argument("--only", nargs="+", help="criterion keys to run")
    pv.add_argument("--output-dir", default=settings.output_dir)
    pv.set_defaults(func=cmd_validate)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BlockadeError, pydantic.ValidationError) as e:
        logger.error("command_failed", command=args.cmd, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
