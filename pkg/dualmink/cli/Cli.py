import argparse
import logging
import sys
import time
from collections.abc import Sequence
from enum import IntEnum
from pathlib import Path

from rich import print
from rich.logging import RichHandler
from rich.table import Table

from .. import __version__
from ..asymptotics.IntegralEstimate import (
    SWEEP_COLUMNS,
    DiagonalSpec,
    closed_form_estimate,
    integral_norm_power,
    ratio_sweep,
)
from ..bodies.StarBody import RadialGrid
from ..checks.Preconditions import CheckStatus, PreconditionReport, evaluate_preconditions
from ..errors import DimensionMismatchError, DocumentError, DualMinkError
from ..io.Documents import (
    RunManifest,
    digest,
    load_config,
    load_measure,
    load_polytope,
    load_star,
    write_csv,
    write_document,
)
from ..measures.DualMeasures import dual_curvature_measure
from ..solver.SolveConfig import SolveConfig
from ..solver.Solver import TRACE_COLUMNS, SolveStatus, minimize
from ..sphere.SphereGrid import GridKind, build_grid, default_kind, default_resolution
from .SelfTest import FAULTS, run_selftest

logger = logging.getLogger(__name__)


class ExitCode(IntEnum):
    OK = 0
    INPUT_ERROR = 1
    PRECONDITION_FAILURE = 2
    NOT_CONVERGED = 3
    INDETERMINATE = 4
    SELFTEST_FAILURE = 5


CHECK_EXIT = {
    CheckStatus.PASS: ExitCode.OK,
    CheckStatus.FAIL: ExitCode.PRECONDITION_FAILURE,
    CheckStatus.INDETERMINATE: ExitCode.INDETERMINATE,
}


# ---------------------------------------------------------------------- #
# Helpers

def _out_dir(path: str | None) -> Path:
    out = Path(path or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid(n: int, resolution: int | None, kind: str | None, seed: int | None):
    kind = GridKind(kind) if kind else default_kind(n)
    return build_grid(n, resolution or default_resolution(n), kind, 0 if seed is None else seed)


def _finish(out: Path, command: str, inputs: Sequence[str], config_document: dict,
            outputs: list[str], started: float) -> None:
    manifest = RunManifest(
        command=command,
        inputs=[str(p) for p in inputs],
        config_digest=digest(config_document),
        version=__version__,
        wall_time=time.perf_counter() - started,
        outputs=outputs)
    write_document(out / "manifest.json", manifest.to_document())


def _print_preconditions(report: PreconditionReport) -> None:
    table = Table(title=f"preconditions at q = {report.q:g} ({report.regime.value})")
    table.add_column("check")
    table.add_column("status")
    table.add_column("detail", overflow="fold")
    table.add_row("hemisphere", report.hemisphere.status.value, f"margin {report.hemisphere.margin:.3g}")
    table.add_row("even", "yes" if report.even else "no", "")
    if report.subspace_mass is not None:
        for entry in report.subspace_mass.entries:
            table.add_row(f"subspace mass i={entry.dimension}", entry.status.value,
                          f"{entry.sup_fraction:.6g} vs {entry.threshold:.6g} (slack {entry.slack:.3g})")
    if report.mass_balance is not None:
        table.add_row("mass balance", "pass" if report.mass_balance.passed else "fail",
                      f"gap {report.mass_balance.gap:.3g}")
    print(table)
    colour = {CheckStatus.PASS: "green", CheckStatus.FAIL: "red"}.get(report.status, "yellow")
    print(f"[{colour}]preconditions: {report.status.value}[/{colour}]")
    for finding in report.findings:
        print(f"  [{colour}]{finding.name}[/{colour}]: {finding.detail}")


# ---------------------------------------------------------------------- #
# Commands

def cmd_solve(measure: str, star: str, config: str | None = None, out_dir: str | None = None,
              **overrides) -> int:

    """
    Solve for a polytope whose generalized dual curvature measure is the
    given measure. Writes report.json, trace.csv, solution.json (when a
    body was found) and manifest.json.
    """

    started = time.perf_counter()
    mu = load_measure(measure)
    Q = load_star(star)
    if mu.dim != Q.dim:
        raise DimensionMismatchError(f"measure lives in R^{mu.dim} but the star body in R^{Q.dim}")
    if config is not None:
        settings = load_config(config).replace(**overrides)
    else:
        if overrides.get("q") is None:
            raise DocumentError("--q", "required when no config file is given")
        settings = SolveConfig(**{k: v for k, v in overrides.items() if v is not None})
    if isinstance(Q, RadialGrid):
        sampled, solving = Q.grid.descriptor(), settings.build_grid(mu.dim).descriptor()
        if sampled != solving:
            raise DocumentError(f"{star}.parameters.grid",
                                f"star body sampled on {sampled} but the solve runs on {solving}")

    report = minimize(mu, Q, settings)
    out = _out_dir(out_dir)
    outputs = ["report.json", "trace.csv"]
    write_document(out / "report.json", report.to_document())
    write_csv(out / "trace.csv", TRACE_COLUMNS, (row.as_row() for row in report.trace))
    if report.solution is not None:
        write_document(out / "solution.json", report.solution.to_document())
        outputs.append("solution.json")
    _finish(out, "solve", [measure, star] + ([config] if config else []),
            settings.to_document(), outputs, started)

    if report.status is SolveStatus.REFUSED:
        _print_preconditions(report.preconditions)
        for line in report.diagnostics:
            print(f"[red]refused[/red]: {line}")
        return ExitCode.PRECONDITION_FAILURE
    for warning in report.warnings:
        print(f"[yellow]warning[/yellow]: {warning}")
    residual = "n/a" if report.residual is None else f"{report.residual:.3g}"
    if report.accepted:
        print(f"[green]converged[/green] in {len(report.trace) - 1} iterations, residual {residual}")
        return ExitCode.OK
    print(f"[red]{report.status.value}[/red]: residual {residual} "
          f"(bound {settings.residual_bound:g})")
    for line in report.diagnostics:
        print(f"  {line}")
    return ExitCode.NOT_CONVERGED


def cmd_curvature(body: str, star: str, q: float, out_dir: str | None = None,
                  grid_resolution: int | None = None, grid_kind: str | None = None,
                  seed: int | None = None) -> int:

    """
    Write the generalized dual curvature measure of a polytope as a measure
    document. Facets that receive no mass on the grid are left out, so the
    output feeds the solver directly.
    """

    started = time.perf_counter()
    K = load_polytope(body)
    Q = load_star(star)
    if K.dim != Q.dim:
        raise DimensionMismatchError(f"polytope lives in R^{K.dim} but the star body in R^{Q.dim}")
    grid = _grid(K.dim, grid_resolution, grid_kind, seed)
    measure = dual_curvature_measure(K, Q, q, grid)
    dropped = len(measure.zero_atoms)
    if dropped:
        logger.warning("%d facets carry no mass on the grid and are left out", dropped)
    measure = measure.support_part()

    out = _out_dir(out_dir)
    write_document(out / "measure.json", measure.to_document())
    _finish(out, "curvature", [body, star], {"q": q, "grid": grid.descriptor()},
            ["measure.json"], started)
    print(f"[green]measure[/green]: {len(measure)} atoms, total {measure.total:.10g}")
    return ExitCode.OK


def cmd_check(measure: str, q: float, star: str | None = None, out_dir: str | None = None,
              grid_resolution: int | None = None, grid_kind: str | None = None,
              seed: int | None = None) -> int:
    """ Evaluate the existence hypotheses for q and write preconditions.json """
    started = time.perf_counter()
    mu = load_measure(measure)
    Q = load_star(star) if star else None
    if Q is not None and Q.dim != mu.dim:
        raise DimensionMismatchError(f"measure lives in R^{mu.dim} but the star body in R^{Q.dim}")
    grid = _grid(mu.dim, grid_resolution, grid_kind, seed) if Q is not None and q == 0 else None
    report = evaluate_preconditions(mu, q, Q, grid)

    out = _out_dir(out_dir)
    write_document(out / "preconditions.json", report.to_document())
    _finish(out, "check", [measure] + ([star] if star else []),
            {"q": q, "grid": None if grid is None else grid.descriptor()},
            ["preconditions.json"], started)
    _print_preconditions(report)
    return CHECK_EXIT.get(report.status, ExitCode.INDETERMINATE)


def cmd_estimate(alpha: float, diagonal: Sequence[float], out_dir: str | None = None,
                 spreads: Sequence[float] | None = None,
                 grid_resolution: int | None = None, grid_kind: str | None = None,
                 seed: int | None = None) -> int:

    """
    Compare ∫|Ax|^{-α} against its closed-form estimate for A = diag(diagonal),
    and optionally over a sweep of random diagonals with the given spreads.
    Writes estimate.json and, for a sweep, sweep.csv.
    """

    started = time.perf_counter()
    A = DiagonalSpec.sorted(diagonal)
    grid = _grid(A.m, grid_resolution, grid_kind, seed)
    integral = integral_norm_power(A, alpha, grid)
    estimate, case = closed_form_estimate(A, alpha)
    document = {
        "schema": "dualmink.estimate/1",
        "alpha": alpha,
        "diagonal": list(A.entries),
        "grid": grid.descriptor(),
        "integral": integral,
        "estimate": estimate,
        "ratio": integral / estimate,
        "case": case.case.value,
    }
    print(f"∫|Ax|^-{alpha:g} = {integral:.10g}, estimate {estimate:.10g}, "
          f"ratio [bold]{integral / estimate:.6g}[/bold] ({case.case.value})")

    out = _out_dir(out_dir)
    outputs = ["estimate.json"]
    if spreads:
        sweep = ratio_sweep(alpha, A.m, spreads, grid, 0 if seed is None else seed)
        document["sweep"] = sweep.to_document()
        write_csv(out / "sweep.csv", SWEEP_COLUMNS, (row.as_row() for row in sweep.rows))
        outputs.append("sweep.csv")
        print(f"sweep over {len(sweep.rows)} spreads: ratio band "
              f"[{sweep.min_ratio:.6g}, {sweep.max_ratio:.6g}]")
    write_document(out / "estimate.json", document)
    _finish(out, "estimate", [], {"alpha": alpha, "diagonal": list(A.entries),
                                  "grid": grid.descriptor()}, outputs, started)
    return ExitCode.OK


def cmd_selftest(resolution: int = 24, fault: str | None = None,
                 out_dir: str | None = None) -> int:
    """ Run the invariant suite; the exit code is nonzero iff an invariant fails """
    report = run_selftest(resolution, fault)
    print(report.table())
    if out_dir is not None:
        write_document(_out_dir(out_dir) / "selftest.json", report.to_document())
    failure = report.first_failure
    if failure is not None:
        print(f"[red]self-test failed: {failure.name}[/red]")
        return ExitCode.SELFTEST_FAILURE
    print("[green]all invariants hold[/green]")
    return ExitCode.OK


# ---------------------------------------------------------------------- #
# Entry point

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid-resolution", type=int, default=None)
    common.add_argument("--grid-kind", choices=[k.value for k in GridKind], default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out-dir", default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dualmink", description="Generalized dual Minkowski solver")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", parents=[common], help="solve for a polytope")
    solve.add_argument("measure")
    solve.add_argument("star")
    solve.add_argument("--config", default=None)
    solve.add_argument("--q", type=float, default=None)
    solve.add_argument("--tolerance", type=float, default=None)
    solve.add_argument("--max-iters", type=int, default=None)
    solve.add_argument("--starts", type=int, default=None)
    solve.add_argument("--override-regime", action="store_true", default=None)

    curvature = commands.add_parser("curvature", parents=[common], help="forward curvature measure")
    curvature.add_argument("body")
    curvature.add_argument("star")
    curvature.add_argument("--q", type=float, required=True)

    check = commands.add_parser("check", parents=[common], help="existence hypotheses")
    check.add_argument("measure")
    check.add_argument("--q", type=float, required=True)
    check.add_argument("--star", default=None)

    estimate = commands.add_parser("estimate", parents=[common], help="∫|Ax|^-α against its estimate")
    estimate.add_argument("--alpha", type=float, required=True)
    estimate.add_argument("--diagonal", type=float, nargs="+", required=True)
    estimate.add_argument("--spreads", type=float, nargs="*", default=None)

    selftest = commands.add_parser("selftest", parents=[common], help="invariant suite")
    selftest.add_argument("--fault", choices=FAULTS, default=None)
    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=verbose, show_path=verbose)],
        force=True)


def run(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    _configure_logging(args.verbose)
    grid = {"grid_resolution": args.grid_resolution, "grid_kind": args.grid_kind, "seed": args.seed}

    try:
        if args.command == "solve":
            return cmd_solve(args.measure, args.star, args.config, args.out_dir,
                             q=args.q, tolerance=args.tolerance, max_iters=args.max_iters,
                             starts=args.starts, override_regime=args.override_regime, **grid)
        if args.command == "curvature":
            return cmd_curvature(args.body, args.star, args.q, args.out_dir, **grid)
        if args.command == "check":
            return cmd_check(args.measure, args.q, args.star, args.out_dir, **grid)
        if args.command == "estimate":
            return cmd_estimate(args.alpha, args.diagonal, args.out_dir, args.spreads, **grid)
        return cmd_selftest(args.grid_resolution or 24, args.fault, args.out_dir)
    except (DocumentError, DimensionMismatchError) as e:
        print(f"[red]input error[/red]: {e}")
        return ExitCode.INPUT_ERROR
    except (ValueError, DualMinkError) as e:
        print(f"[red]invalid input[/red]: {e}")
        return ExitCode.INPUT_ERROR


def main() -> None:
    sys.exit(int(run()))
