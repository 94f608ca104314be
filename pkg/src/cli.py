# ABOUTME: Command-line frontend: mask construction, analysis, completion, certification, sweeps
# ABOUTME: Prints key=value blocks on stdout and maps library errors to stable exit codes

import argparse
import asyncio
import math
import os
import sys
from enum import IntEnum
from pathlib import Path

from rich.console import Console
from rich.table import Table

from .bounds import (
    certify_theorem35,
    dual_certificate_iterate,
    lemma31_check,
    prior_bound_comparison,
)
from .config import (
    DEFAULT_CERTIFICATE_SAMPLES,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_PENALTY,
    DEFAULT_PRIMAL_TOLERANCE,
    DEFAULT_SUCCESS_THRESHOLD,
    DESK_SCALE_MAX_DEGREE,
    DESK_SCALE_TRIALS,
    FULL_SCALE_TRIALS,
    configure_logging,
)
from .errors import (
    ConstructionError,
    MatrixCompletionError,
    NumericalFailureError,
    ParameterError,
    ShapeError,
)
from .experiments import (
    FileMaskSource,
    LpsMaskSource,
    PhaseSweep,
    SweepConfig,
    critical_rank,
    degree_sweep_async,
    transition_width,
)
from .graphs import as_biregular, lps_graph, permutation_union_mask, spectral_certificate
from .solver import SolverOptions, complete_exact, complete_stable, recovery_success, relative_error
from .storage import (
    format_pairs,
    format_value,
    load_mask,
    load_matrix,
    save_degree_sweep,
    save_mask,
    save_matrix,
    save_sweep,
)
from .subspace import coherence_report, subspace_of

console = Console(soft_wrap=True, highlight=False)
error_console = Console(stderr=True)


class ExitStatus(IntEnum):
    OK = 0
    FAILED = 1  # infeasible certificate, unconverged or unsuccessful solve
    INVALID_INPUT = 2
    NUMERICAL_FAILURE = 3


def print_block(pairs) -> None:
    console.print(format_pairs(pairs), end="", markup=False)


# graph ---------------------------------------------------------------------


def _mask_pairs(mask) -> list[tuple[str, object]]:
    pairs = [("n_rows", mask.n_rows), ("n_cols", mask.n_cols), ("m", mask.m), ("d_r", mask.d_r), ("d_c", mask.d_c)]
    return pairs + spectral_certificate(mask).as_pairs()


async def cmd_graph(args) -> ExitStatus:
    if args.graph_command == "validate":
        mask = as_biregular(await load_mask(args.mask))
    else:
        if args.graph_command == "lps":
            mask = await asyncio.to_thread(lps_graph, args.p, args.q)
        else:
            mask = await asyncio.to_thread(permutation_union_mask, args.n, args.d, args.seed)
        if args.out:
            await save_mask(args.out, mask)

    print_block(_mask_pairs(mask))
    return ExitStatus.OK


# analyze -------------------------------------------------------------------


async def _matrix_and_mask(matrix_path: Path, mask_path: Path):
    matrix = await load_matrix(matrix_path)
    mask = as_biregular(await load_mask(mask_path))
    if matrix.shape != mask.shape:
        raise ShapeError(f"Matrix of shape {matrix.shape} does not match mask shape {mask.shape}")
    return matrix, mask


async def cmd_analyze(args) -> ExitStatus:
    matrix, mask = await _matrix_and_mask(args.matrix, args.mask)
    sp = subspace_of(matrix, args.rank)
    report = coherence_report(sp, mask, theta_override=args.theta_override)
    cert = certify_theorem35(report.mu0, report.theta, report.phi, args.rank, mask.alpha, min(mask.shape))

    print_block(report.as_pairs())
    print_block(cert.as_pairs())
    print_block([("prior_bound", prior_bound_comparison(report.mu0, args.rank))])
    return ExitStatus.OK if cert.feasible else ExitStatus.FAILED


# complete ------------------------------------------------------------------


def _solver_options(args) -> SolverOptions:
    return SolverOptions(
        max_iterations=args.max_iterations,
        primal_tolerance=args.tolerance,
        dual_tolerance=args.tolerance,
        penalty=args.penalty,
    )


async def cmd_complete(args) -> ExitStatus:
    if args.mode == "stable" and args.eps is None:
        raise ParameterError("--mode stable requires --eps")

    observed = await load_matrix(args.obs)
    mask = await load_mask(args.mask)
    options = _solver_options(args)
    if args.mode == "stable":
        outcome = await asyncio.to_thread(complete_stable, observed, mask, args.eps, options)
    else:
        outcome = await asyncio.to_thread(complete_exact, observed, mask, options)

    if args.out:
        await save_matrix(args.out, outcome.X_hat)
    print_block(outcome.as_pairs())

    succeeded = outcome.converged
    if args.truth:
        truth = await load_matrix(args.truth)
        success = recovery_success(outcome.X_hat, truth, args.threshold)
        print_block([("relative_error", relative_error(outcome.X_hat, truth)), ("success", success)])
        succeeded = succeeded and success
    return ExitStatus.OK if succeeded else ExitStatus.FAILED


# certify -------------------------------------------------------------------


def _decay_table(history: tuple[float, ...]) -> Table:
    table = Table(title="Certificate decay", show_header=True, header_style="bold cyan")
    table.add_column("i", justify="right")
    table.add_column("||W_i||_F", justify="right")
    table.add_column("ratio", justify="right")
    for i, norm in enumerate(history):
        ratio = "" if i == 0 or history[i - 1] == 0 else f"{norm / history[i - 1]:.6f}"
        table.add_row(str(i), f"{norm:.6e}", ratio)
    return table


async def cmd_certify(args) -> ExitStatus:
    if args.iterations < 0:
        raise ParameterError(f"--iterations must be non-negative, got {args.iterations}")
    matrix, mask = await _matrix_and_mask(args.matrix, args.mask)
    sp = subspace_of(matrix, args.rank)
    report = coherence_report(sp, mask)
    certificate = await asyncio.to_thread(dual_certificate_iterate, sp, mask, args.iterations)

    k1 = report.phi
    k2 = report.theta + report.phi
    k3 = math.sqrt(args.rank * (report.theta**2 + report.phi**2))
    verdict = await asyncio.to_thread(lemma31_check, certificate.Y, sp, mask, k1, k2, k3, args.samples, args.seed)

    print_block(
        [
            ("iterations", certificate.iterations),
            ("deviation_T", certificate.deviation_T),
            ("spectral_Tperp", certificate.spectral_Tperp),
            ("theta", report.theta),
            ("phi", report.phi),
        ]
    )
    console.print(_decay_table(certificate.history))
    print_block(verdict.as_pairs())
    return ExitStatus.OK if verdict.passed else ExitStatus.FAILED


# phase ---------------------------------------------------------------------


def _baseline_path(out: Path) -> Path:
    return out.with_name(f"{out.stem}_baseline{out.suffix}")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _phase_sources(args) -> list:
    if args.mask:
        return [FileMaskSource(path) for path in args.mask]
    if args.p is not None and args.q is not None:
        largest = max(args.p) + 1
        if largest > DESK_SCALE_MAX_DEGREE and not args.full:
            raise ParameterError(f"Degree {largest} exceeds desk scale ({DESK_SCALE_MAX_DEGREE}); pass --full")
        return [LpsMaskSource(p, args.q) for p in args.p]
    raise ParameterError("phase needs either --mask or both --p and --q")


async def _phase_degrees(args, config: SweepConfig, sources: list) -> ExitStatus:
    limit = None if args.full else DESK_SCALE_MAX_DEGREE
    records = await degree_sweep_async(config, sources, baseline=args.baseline, max_degree=limit)
    await save_degree_sweep(args.out, records, baseline=args.baseline)
    pairs = [
        ("degrees", tuple(format(r.degree, "g") for r in records)),
        ("critical_ranks", tuple(format_value(r.critical_rank) for r in records)),
    ]
    if args.baseline:
        pairs.append(("baseline_critical_ranks", tuple(format_value(r.baseline_critical_rank) for r in records)))
    print_block(pairs)
    return ExitStatus.OK


async def cmd_phase(args) -> ExitStatus:
    sources = _phase_sources(args)
    trials = args.trials or (FULL_SCALE_TRIALS if args.full else DESK_SCALE_TRIALS)
    config = SweepConfig(
        mask_source=sources[0],
        rank_min=args.rank_min,
        rank_max=args.rank_max,
        trials_per_rank=trials,
        matrix_seed=args.seed,
        success_threshold=args.threshold,
        solver=_solver_options(args),
        jobs=args.jobs,
    )
    if args.full:
        error_console.print(
            f"[yellow]⚠ Full-scale sweep: {len(sources)} mask(s), {len(config.ranks)} ranks x {trials} trials "
            f"can take days[/yellow]"
        )
    if len(sources) > 1:
        return await _phase_degrees(args, config, sources)

    sweep = PhaseSweep(config)
    mask = await sweep.mask()
    degree = mask.m / mask.n_rows
    if degree > DESK_SCALE_MAX_DEGREE and not args.full:
        raise ParameterError(f"Mean degree {degree:g} exceeds desk scale ({DESK_SCALE_MAX_DEGREE}); pass --full")

    records = await sweep.run()
    await save_sweep(args.out, records)
    print_block([("critical_rank", critical_rank(records)), ("transition_width", transition_width(records))])

    if args.baseline:
        baseline = await sweep.run_baseline()
        await save_sweep(_baseline_path(args.out), baseline)
        print_block([("baseline_critical_rank", critical_rank(baseline))])
    return ExitStatus.OK


# parser --------------------------------------------------------------------


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-iterations", type=int, default=DEFAULT_MAX_ITERATIONS, help="ADMM iteration cap")
    parser.add_argument(
        "--tolerance", type=float, default=DEFAULT_PRIMAL_TOLERANCE, help="relative primal and dual tolerance"
    )
    parser.add_argument("--penalty", type=float, default=DEFAULT_PENALTY, help="ADMM penalty parameter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ramanujan-mc",
        description="Matrix completion with Ramanujan sampling masks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    graph = sub.add_parser("graph", help="build or validate a sampling mask")
    graph_sub = graph.add_subparsers(dest="graph_command", required=True)
    lps = graph_sub.add_parser("lps", help="LPS Ramanujan graph X^{p,q}")
    lps.add_argument("--p", type=int, required=True, help="prime = 1 mod 4; degree is p+1")
    lps.add_argument("--q", type=int, required=True, help="prime = 1 mod 4, distinct from p")
    lps.add_argument("--out", type=Path, help="mask file to write")
    validate = graph_sub.add_parser("validate", help="check biregularity and print the spectrum")
    validate.add_argument("--mask", type=Path, required=True, help="mask file")
    permutation = graph_sub.add_parser("permutation", help="union of d disjoint random permutations")
    permutation.add_argument("--n", type=int, required=True, help="matrix size")
    permutation.add_argument("--d", type=int, required=True, help="degree")
    permutation.add_argument("--seed", type=int, default=0, help="random seed")
    permutation.add_argument("--out", type=Path, help="mask file to write")
    graph.set_defaults(handler=cmd_graph)

    analyze = sub.add_parser("analyze", help="coherence parameters and recovery certificate")
    analyze.add_argument("--matrix", type=Path, required=True, help="reference matrix CSV")
    analyze.add_argument("--rank", type=int, required=True, help="rank r")
    analyze.add_argument("--mask", type=Path, required=True, help="biregular mask file")
    analyze.add_argument("--theta-override", type=float, help="use this theta instead of measuring it")
    analyze.set_defaults(handler=cmd_analyze)

    complete = sub.add_parser("complete", help="nuclear-norm completion")
    complete.add_argument("--obs", type=Path, required=True, help="observed matrix CSV; entries off the mask are ignored")
    complete.add_argument("--mask", type=Path, required=True, help="mask file")
    complete.add_argument("--mode", choices=["exact", "stable"], default="exact", help="constraint type")
    complete.add_argument("--eps", type=float, help="noise bound for stable mode")
    complete.add_argument("--truth", type=Path, help="true matrix CSV for scoring")
    complete.add_argument("--out", type=Path, help="completed matrix CSV to write")
    complete.add_argument("--threshold", type=float, default=DEFAULT_SUCCESS_THRESHOLD, help="success threshold")
    _add_solver_flags(complete)
    complete.set_defaults(handler=cmd_complete)

    certify = sub.add_parser("certify", help="build and audit a dual certificate")
    certify.add_argument("--matrix", type=Path, required=True, help="reference matrix CSV")
    certify.add_argument("--rank", type=int, required=True, help="rank r")
    certify.add_argument("--mask", type=Path, required=True, help="biregular mask file")
    certify.add_argument("--iterations", type=int, default=1, help="correction steps p")
    certify.add_argument("--samples", type=int, default=DEFAULT_CERTIFICATE_SAMPLES, help="random tangent samples")
    certify.add_argument("--seed", type=int, default=0, help="seed for tangent samples")
    certify.set_defaults(handler=cmd_certify)

    phase = sub.add_parser("phase", help="success rate against rank")
    phase.add_argument("--p", type=_int_list, help="LPS parameter p; a comma-separated list sweeps the degree")
    phase.add_argument("--q", type=int, help="LPS parameter q")
    phase.add_argument(
        "--mask", type=Path, nargs="+", help="mask file(s) instead of an LPS graph; several sweep the degree"
    )
    phase.add_argument("--rank-min", type=int, default=1, help="first rank")
    phase.add_argument("--rank-max", type=int, required=True, help="last rank")
    phase.add_argument("--trials", type=int, help="trials per rank")
    phase.add_argument("--seed", type=int, default=0, help="matrix seed")
    phase.add_argument("--out", type=Path, required=True, help="sweep CSV, or degree CSV when several masks are swept")
    phase.add_argument("--baseline", action="store_true", help="also sweep a random mask with as many samples")
    phase.add_argument("--threshold", type=float, default=DEFAULT_SUCCESS_THRESHOLD, help="success threshold")
    phase.add_argument("--full", action="store_true", help="allow degrees above desk scale")
    phase.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel trials")
    _add_solver_flags(phase)
    phase.set_defaults(handler=cmd_phase)

    return parser


def run(argv: list[str] | None = None) -> int:
    """Parse arguments, dispatch, and translate errors into an exit status."""
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        return int(asyncio.run(args.handler(args)))
    except (ConstructionError, NumericalFailureError) as e:
        error_console.print(f"[red]✗ {e}[/red]")
        return ExitStatus.NUMERICAL_FAILURE
    except (MatrixCompletionError, OSError) as e:
        error_console.print(f"[red]✗ {e}[/red]")
        return ExitStatus.INVALID_INPUT
    except Exception as e:
        error_console.print(f"[red]✗ Unexpected error: {e}[/red]")
        return ExitStatus.NUMERICAL_FAILURE


def main():
    """Entry point for the CLI application."""
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        error_console.print("\n[yellow]Interrupted[/yellow]")
        sys.exit(130)


if __name__ == "__main__":
    main()
