#!/usr/bin/env python3  src/blowup_solver/cli/main.py
"""
Command-line Front End
======================
::

    blowup-solver solve   --problem ex1 --method nonlocal --g f-over-y --xi-max 14
    blowup-solver solve   --rhs "y^2" --order 1 --x0 0 --y0 1 --method differential --t-max 1e6
    blowup-solver compare --problem ex3 --steps 100
    blowup-solver sweep   --problem ex2-form --h 0.2 0.1 0.05 --xi-max 2

Each subcommand is a handler in ``COMMANDS``; every library error carries the
exit code reported here.
"""

import math
import sys
from argparse import ArgumentParser, Namespace, RawDescriptionHelpFormatter
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from blowup_solver import __version__
from blowup_solver.cli.output import (
    summary_record,
    thin_rows,
    write_plot_script,
    write_summary,
    write_table,
    write_trajectory,
)
from blowup_solver.config import (
    FORMAT_ALIASES,
    OUTPUT_FORMATS,
    LoggingConfig,
    RunConfig,
    SolverDefaults,
    g_from_args,
    source_from_args,
)
from blowup_solver.core.blowup import STRIDES, BlowupEstimate, estimate_x_star, fit_power_law
from blowup_solver.core.codes import (
    ExitCode,
    GKind,
    TerminationReason,
    TransformKind,
    choices_for,
    code_from_name,
    translate_code,
)
from blowup_solver.core.errors import (
    BlowupError,
    ConfigurationError,
    EstimationError,
    ParseError,
    SingularTransformError,
)
from blowup_solver.core.odecore import StopRule, Trajectory, integrate
from blowup_solver.core.problems import PROBLEM_IDS, TestProblem, exact_transformed_state
from blowup_solver.core.transforms import (
    AdmissibilityReport,
    CauchyProblem,
    GChoice,
    TransformedSystem,
    check_g_admissibility,
    default_g,
    transform,
)
from blowup_solver.logging_config import get_logger, setup_logging

logger = get_logger(__name__)


# =============================================================================
# PIPELINES
# =============================================================================


@dataclass(frozen=True)
class SolveResult:
    system: TransformedSystem
    trajectory: Trajectory
    estimate: BlowupEstimate
    exact: Optional[TestProblem] = None
    admissibility: Optional[AdmissibilityReport] = None

    def summary(self) -> Dict[str, object]:
        record = summary_record(
            self.estimate.to_dict(), self.trajectory.steps, translate_code(self.trajectory.reason)
        )
        record.update(
            {
                "transform": self.system.tag,
                "parameter": self.system.parameter_name,
                "final_param": self.trajectory.final_param,
                "h": self.trajectory.step,
            }
        )
        if self.system.g is not None:
            record["g"] = self.system.g.describe()
        if self.admissibility is not None:
            record["g_admissible"] = self.admissibility.admissible
        if self.exact is not None:
            record["exact_x_star"] = self.exact.x_star
        if self.trajectory.error is not None:
            record["error"] = self.trajectory.error
        return record


def _method_system(
    problem: CauchyProblem, method: TransformKind, g: Optional[GChoice]
) -> TransformedSystem:
    if method == TransformKind.NONLOCAL:
        return transform(problem, method, g or default_g(problem.order))
    return transform(problem, method)


def solve(cfg: RunConfig) -> SolveResult:
    """Transform, integrate and estimate x* (plus A, beta when the tail allows a fit)."""
    problem, exact, method, g = cfg.resolve()
    system = _method_system(problem, method, g)
    report = None
    if method == TransformKind.NONLOCAL:
        report = check_g_admissibility(problem, system.g)
        if not report.admissible:
            logger.warning(
                "solve.g_not_admissible", g=system.g.describe(), violations=report.violations()
            )
    trajectory = integrate(system.system, cfg.step, cfg.stop_rule(system.system.start))
    estimate = estimate_x_star(trajectory, tail=cfg.tail, stride=cfg.stride)
    try:
        amplitude, beta = fit_power_law(trajectory, estimate.x_star, fraction=cfg.fit_fraction)
        estimate = estimate.with_fit(amplitude, beta)
    except EstimationError as exc:
        logger.warning("solve.fit_skipped", reason=str(exc))
    return SolveResult(system, trajectory, estimate, exact, report)


def trajectory_columns(result: SolveResult) -> Dict[str, object]:
    columns: Dict[str, object] = {"param": result.trajectory.params}
    columns.update(result.system.to_original(result.trajectory))
    return columns


@dataclass(frozen=True)
class Side:
    label: str
    method: TransformKind
    g: Optional[GChoice] = None


def compare_methods(
    problem: CauchyProblem,
    sides: Sequence[Side],
    h: float,
    steps: int,
    exact: Optional[TestProblem] = None,
    every: int = 10,
    tail: int = 8,
    stride: str = "auto",
    eps_stop: float = 0.0,
) -> Tuple[List[Dict[str, object]], Dict[str, object]]:
    """Integrate every side for the same step budget and tabulate |x* - x| at checkpoints.

    x* is the exact blow-up point when known, else the estimate with the smallest
    uncertainty.
    """
    stop = StopRule(max_steps=steps, eps_stop=eps_stop)
    runs = []
    for side in sides:
        system = _method_system(problem, side.method, side.g)
        trajectory = integrate(system.system, h, stop)
        runs.append((side, system, trajectory, estimate_x_star(trajectory, tail, stride)))

    if exact is not None:
        reference, reference_kind = exact.x_star, "exact"
    else:
        best = min(runs, key=lambda run: run[3].uncertainty)
        reference, reference_kind = best[3].x_star, f"estimate:{best[0].label}"

    rows = []
    for k in thin_rows(steps + 1, every):
        row: Dict[str, object] = {"steps": int(k)}
        for side, _, trajectory, _ in runs:
            if k < len(trajectory):
                x = float(trajectory.x[k])
                row[f"{side.label}_x"] = x
                row[f"{side.label}_error"] = abs(reference - x)
        rows.append(row)

    summary: Dict[str, object] = {"reference": reference, "reference_kind": reference_kind}
    for side, system, trajectory, estimate in runs:
        entry = estimate.to_dict()
        entry.update(
            {
                "transform": system.tag,
                "g": system.g.describe() if system.g is not None else None,
                "steps": trajectory.steps,
                "reason": translate_code(trajectory.reason),
                "final_error": abs(reference - float(trajectory.x[-1])),
                "estimate_error": abs(reference - estimate.x_star),
            }
        )
        summary[side.label] = entry
    return rows, summary


def sweep_steps(
    tp: TestProblem,
    method: TransformKind,
    steps: Sequence[float],
    g: Optional[GChoice] = None,
    max_param: Optional[float] = None,
    span: Optional[float] = None,
) -> List[Dict[str, object]]:
    """Error at the final parameter against the closed form, for each step size.

    ``order`` compares each row with the previous one: ln(e_prev/e)/ln(h_prev/h).
    """
    if len(steps) < 2:
        raise ConfigurationError("a sweep needs at least two step sizes")
    if len(set(steps)) != len(steps):
        raise ConfigurationError("sweep step sizes must be distinct")
    if (max_param is None) == (span is None):
        raise ConfigurationError("a sweep needs exactly one of --t-max/--xi-max or --span")
    g = (g or tp.g) if method == TransformKind.NONLOCAL else None
    system = tp.transform(method, g)
    bound = max_param if max_param is not None else system.system.start + span
    stop = StopRule(max_param=bound, eps_stop=0.0)

    rows: List[Dict[str, object]] = []
    for h in steps:
        trajectory = integrate(system.system, h, stop)
        exact_state = exact_transformed_state(tp, method, trajectory.final_param, g)
        error = max(abs(a - b) for a, b in zip(trajectory.final_state, exact_state))
        row: Dict[str, object] = {
            "h": float(h),
            "steps": trajectory.steps,
            "final_param": trajectory.final_param,
            "error": error,
            "order": None,
        }
        if rows:
            previous = rows[-1]
            if error > 0.0 and previous["error"] > 0.0:
                row["order"] = math.log(previous["error"] / error) / math.log(previous["h"] / h)
        rows.append(row)
    logger.info("sweep.finished", steps=[r["h"] for r in rows], orders=[r["order"] for r in rows])
    return rows


# =============================================================================
# COMMAND HANDLERS
# =============================================================================


def cmd_solve(args: Namespace) -> int:
    cfg = RunConfig.from_args(args)
    if cfg.plot_script and (cfg.output in (None, "-") or cfg.output_format != "csv"):
        raise ConfigurationError("--plot-script needs a CSV trajectory written to --output")
    result = solve(cfg)
    if cfg.output is not None:
        write_trajectory(trajectory_columns(result), cfg.output, cfg.output_format, cfg.every)
    if cfg.plot_script:
        write_plot_script(
            cfg.output, cfg.plot_script, result.system.parameter_name, result.estimate.x_star
        )
    write_summary(result.summary(), cfg.summary)
    if result.trajectory.reason == TerminationReason.RHS_ERROR:
        print(f"error: integration stopped early: {result.trajectory.error}", file=sys.stderr)
        return int(ExitCode.SINGULAR_TRANSFORM)
    return int(ExitCode.OK)


def _side_from_args(args: Namespace, label: str) -> Side:
    text = getattr(args, f"{label}_method")
    try:
        method = code_from_name(TransformKind, text)
    except KeyError as exc:
        raise ConfigurationError(f"--{label}-method: {exc.args[0]}") from None
    return Side(label, method, g_from_args(args, attr=f"{label}_g"))


def cmd_compare(args: Namespace) -> int:
    problem, exact = source_from_args(args).build()
    sides = [_side_from_args(args, "left"), _side_from_args(args, "right")]
    if exact is not None:
        sides = [
            Side(s.label, s.method, s.g or exact.g) if s.method == TransformKind.NONLOCAL else s
            for s in sides
        ]
    defaults = SolverDefaults()
    rows, summary = compare_methods(
        problem,
        sides,
        h=args.h if args.h is not None else defaults.step,
        steps=args.steps,
        exact=exact,
        every=args.every,
        tail=args.tail if args.tail is not None else defaults.tail,
        stride=args.stride,
    )
    columns = ["steps"] + [f"{s.label}_{c}" for s in sides for c in ("x", "error")]
    write_table(rows, columns, args.output)
    if args.summary is not None:
        write_summary(summary, args.summary)
    return int(ExitCode.OK)


def cmd_sweep(args: Namespace) -> int:
    source = source_from_args(args)
    _, exact = source.build()
    if exact is None:
        raise ConfigurationError("sweep compares against a closed form; use a built-in --problem")
    method = exact.method
    if args.method is not None:
        try:
            method = code_from_name(TransformKind, args.method)
        except KeyError as exc:
            raise ConfigurationError(f"--method: {exc.args[0]}") from None
    if args.t_max is not None and args.xi_max is not None:
        raise ConfigurationError("give only one of --t-max and --xi-max")
    bound = args.t_max if args.t_max is not None else args.xi_max
    rows = sweep_steps(exact, method, args.h, g_from_args(args), max_param=bound, span=args.span)
    write_table(rows, ["h", "steps", "final_param", "error", "order"], args.output)
    return int(ExitCode.OK)


COMMANDS: Dict[str, Callable[[Namespace], int]] = {
    "solve": cmd_solve,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
}


# =============================================================================
# ARGUMENT PARSING
# =============================================================================


class _Parser(ArgumentParser):
    """ArgumentParser whose usage errors exit with the configuration code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(int(ExitCode.CONFIG), f"{self.prog}: error: {message}\n")


def _exit_code_epilog() -> str:
    lines = ["exit codes:"]
    lines += [f"  {int(code)}  {translate_code(code)}" for code in ExitCode]
    return "\n".join(lines)


def _add_problem_flags(parser: ArgumentParser) -> None:
    group = parser.add_argument_group("problem")
    group.add_argument("--problem", choices=PROBLEM_IDS, help="built-in problem id")
    group.add_argument("--a", type=float, help="initial value y(0) = a of a built-in problem")
    group.add_argument("--p", type=float, help="exponent of the 'power' problem y' = y^p")
    group.add_argument("--rhs", help="inline right-hand side f(x, y[, t]), t = y'")
    group.add_argument("--order", type=int, choices=(1, 2), help="order of the inline equation")
    group.add_argument("--x0", type=float)
    group.add_argument("--y0", type=float)
    group.add_argument("--y1", type=float, help="initial slope y'(x0) (order 2)")


def _add_g_flags(parser: ArgumentParser, *names: str) -> None:
    for name in names:
        parser.add_argument(f"--{name}", choices=choices_for(GKind), help="regularizing function g")
    parser.add_argument("--s", type=float, help="arc-length exponent s (default 2)")
    parser.add_argument("--custom-g", help="expression for --g custom")


def _add_estimate_flags(parser: ArgumentParser) -> None:
    parser.add_argument("--tail", type=int, help="samples used by the x* extrapolation")
    parser.add_argument("--stride", choices=STRIDES, default="auto")


def build_parser() -> ArgumentParser:
    parser = _Parser(
        prog="blowup-solver",
        description="Blow-up points of ODE Cauchy problems via singularity-free transforms.",
        epilog=_exit_code_epilog(),
        formatter_class=RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-format", choices=("console", "json"))
    commands = parser.add_subparsers(dest="command", required=True)
    methods = choices_for(TransformKind)

    solve_cmd = commands.add_parser(
        "solve",
        help="integrate one problem and estimate x*",
        epilog=_exit_code_epilog(),
        formatter_class=RawDescriptionHelpFormatter,
    )
    _add_problem_flags(solve_cmd)
    solve_cmd.add_argument("--method", choices=methods)
    _add_g_flags(solve_cmd, "g")
    solve_cmd.add_argument("--h", type=float, help="RK4 step (default 0.2)")
    solve_cmd.add_argument("--t-max", type=float, help="bound on t (differential)")
    solve_cmd.add_argument("--xi-max", type=float, help="bound on xi (non-local)")
    solve_cmd.add_argument("--span", type=float, help="length of the parameter interval")
    solve_cmd.add_argument("--max-steps", type=int)
    solve_cmd.add_argument("--eps-stop", type=float, help="stop when |dx/dparam| < eps")
    _add_estimate_flags(solve_cmd)
    solve_cmd.add_argument("--fit-fraction", type=float, help="tail share used by the power fit")
    solve_cmd.add_argument(
        "--format",
        choices=(*OUTPUT_FORMATS, *FORMAT_ALIASES),
        default="csv",
        help="trajectory table format (jsonl is short for json-lines)",
    )
    solve_cmd.add_argument("--output", help="trajectory table path ('-' for stdout)")
    solve_cmd.add_argument("--summary", help="summary JSON path (default stdout)")
    solve_cmd.add_argument("--every", type=int, default=1, help="write every n-th sample")
    solve_cmd.add_argument("--plot-script", help="write a matplotlib script for --output")

    compare_cmd = commands.add_parser("compare", help="error against step count for two methods")
    _add_problem_flags(compare_cmd)
    compare_cmd.add_argument("--left-method", choices=methods, default="differential")
    compare_cmd.add_argument("--right-method", choices=methods, default="nonlocal")
    _add_g_flags(compare_cmd, "left-g", "right-g")
    compare_cmd.add_argument("--h", type=float)
    compare_cmd.add_argument("--steps", type=int, default=100)
    compare_cmd.add_argument("--every", type=int, default=10, help="checkpoint spacing in steps")
    _add_estimate_flags(compare_cmd)
    compare_cmd.add_argument("--output", help="table path (default stdout)")
    compare_cmd.add_argument("--summary", help="per-method estimates as JSON")

    sweep_cmd = commands.add_parser("sweep", help="final error against step size")
    _add_problem_flags(sweep_cmd)
    sweep_cmd.add_argument("--method", choices=methods)
    _add_g_flags(sweep_cmd, "g")
    sweep_cmd.add_argument("--h", type=float, nargs="+", required=True)
    sweep_cmd.add_argument("--t-max", type=float)
    sweep_cmd.add_argument("--xi-max", type=float)
    sweep_cmd.add_argument("--span", type=float)
    sweep_cmd.add_argument("--output", help="table path (default stdout)")
    return parser


def _configure_logging(args: Namespace) -> None:
    cfg = LoggingConfig()
    if args.log_level:
        cfg.level = args.log_level
    if args.log_format:
        cfg.format = args.log_format
    try:
        setup_logging(cfg.level, cfg.json_output)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _configure_logging(args)
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(
            f"error: parse error at column {exc.position}: expected {exc.expected}",
            file=sys.stderr,
        )
        print(exc.caret(), file=sys.stderr)
        return int(exc.exit_code)
    except SingularTransformError as exc:
        print(f"error: singular transform: {exc}", file=sys.stderr)
        return int(exc.exit_code)
    except BlowupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return int(exc.exit_code)


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
