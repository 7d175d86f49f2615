#!/usr/bin/env python3  src/blowup_solver/config.py
"""
Run Configuration
=================
Environment-driven defaults plus the validated configuration of one CLI run.
Command-line flags override the environment; the environment overrides the
built-in defaults (step 0.2, classical RK4).
"""

import math
import os
from argparse import Namespace
from dataclasses import dataclass, field
from typing import Optional, Tuple

from blowup_solver.core.blowup import DEFAULT_FIT_FRACTION, DEFAULT_TAIL, STRIDES
from blowup_solver.core.codes import GKind, TransformKind, code_from_name, translate_code
from blowup_solver.core.errors import ConfigurationError
from blowup_solver.core.odecore import DEFAULT_EPS_STOP, DEFAULT_MAX_STEPS, StopRule
from blowup_solver.core.problems import TestProblem, get_problem
from blowup_solver.core.transforms import CauchyProblem, GChoice, default_g

OUTPUT_FORMATS = ("csv", "json-lines")
# other accepted spellings, normalized in RunConfig
FORMAT_ALIASES = {"jsonl": "json-lines"}


@dataclass
class LoggingConfig:
    """Logging configuration."""

    level: str = field(default_factory=lambda: os.getenv("BLOWUP_LOG_LEVEL", "WARNING"))
    format: str = field(default_factory=lambda: os.getenv("BLOWUP_LOG_FORMAT", "console"))

    def __post_init__(self):
        if self.format not in ("console", "json"):
            raise ConfigurationError(f"log format must be console or json, got '{self.format}'")

    @property
    def json_output(self) -> bool:
        return self.format == "json"


@dataclass
class SolverDefaults:
    """Numerical defaults, overridable through the environment."""

    step: float = field(default_factory=lambda: float(os.getenv("BLOWUP_STEP", "0.2")))
    max_steps: int = field(
        default_factory=lambda: int(os.getenv("BLOWUP_MAX_STEPS", str(DEFAULT_MAX_STEPS)))
    )
    eps_stop: float = field(
        default_factory=lambda: float(os.getenv("BLOWUP_EPS_STOP", str(DEFAULT_EPS_STOP)))
    )
    tail: int = field(
        default_factory=lambda: int(os.getenv("BLOWUP_AITKEN_TAIL", str(DEFAULT_TAIL)))
    )
    fit_fraction: float = field(
        default_factory=lambda: float(os.getenv("BLOWUP_FIT_FRACTION", str(DEFAULT_FIT_FRACTION)))
    )


@dataclass(frozen=True)
class ProblemSource:
    """Either a built-in problem id (with a, p) or an inline right-hand side."""

    problem_id: Optional[str] = None
    a: float = 1.0
    p: float = 2.0
    rhs: Optional[str] = None
    order: int = 1
    x0: float = 0.0
    y0: float = 1.0
    y1: Optional[float] = None

    def __post_init__(self):
        if (self.problem_id is None) == (self.rhs is None):
            raise ConfigurationError("give exactly one of --problem or --rhs")

    @property
    def builtin(self) -> bool:
        return self.problem_id is not None

    def build(self) -> Tuple[CauchyProblem, Optional[TestProblem]]:
        """The Cauchy problem and, for built-in ids, its exact data."""
        if self.builtin:
            tp = get_problem(self.problem_id, self.a, self.p)
            return tp.problem, tp
        return CauchyProblem(self.order, self.rhs, self.x0, self.y0, self.y1, label="inline"), None


@dataclass(frozen=True)
class RunConfig:
    """Everything one ``solve`` run needs.

    ``param_max`` bounds the new independent variable absolutely; ``span`` bounds
    it relative to the transform's start parameter. At most one of them is set.
    """

    source: ProblemSource
    method: Optional[TransformKind] = None
    g: Optional[GChoice] = None
    step: float = 0.2
    max_steps: int = DEFAULT_MAX_STEPS
    eps_stop: float = DEFAULT_EPS_STOP
    param_max: Optional[float] = None
    param_flag: Optional[str] = None  # "t" or "xi": which flag set param_max
    span: Optional[float] = None
    tail: int = DEFAULT_TAIL
    stride: str = "auto"
    fit_fraction: float = DEFAULT_FIT_FRACTION
    output_format: str = "csv"
    output: Optional[str] = None
    summary: Optional[str] = None
    every: int = 1
    plot_script: Optional[str] = None

    def __post_init__(self):
        if not (self.step > 0.0 and math.isfinite(self.step)):
            raise ConfigurationError(f"step h must be a positive number, got {self.step!r}")
        if self.param_max is not None and self.span is not None:
            raise ConfigurationError("give at most one of --t-max/--xi-max and --span")
        if self.span is not None and not self.span > 0.0:
            raise ConfigurationError(f"--span must be positive, got {self.span!r}")
        if self.stride not in STRIDES:
            raise ConfigurationError(f"stride must be one of {', '.join(STRIDES)}")
        object.__setattr__(
            self, "output_format", FORMAT_ALIASES.get(self.output_format, self.output_format)
        )
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigurationError(f"format must be one of {', '.join(OUTPUT_FORMATS)}")
        if self.every < 1:
            raise ConfigurationError(f"--every must be >= 1, got {self.every}")

    def resolve(self) -> Tuple[CauchyProblem, Optional[TestProblem], TransformKind, GChoice]:
        """Problem, exact data, method and g after applying the problem's defaults."""
        problem, exact = self.source.build()
        method = self.method
        if method is None:
            method = exact.method if exact is not None else TransformKind.NONLOCAL
        g = self.g
        if g is None:
            g = exact.g if exact is not None else default_g(problem.order)
        g.check_order(problem.order)
        expected = "t" if method == TransformKind.DIFFERENTIAL else "xi"
        if self.param_flag is not None and self.param_flag != expected:
            raise ConfigurationError(
                f"--{self.param_flag}-max does not bound the {translate_code(method)} transform;"
                f" use --{expected}-max or --span"
            )
        return problem, exact, method, g

    def stop_rule(self, start: float) -> StopRule:
        max_param = self.param_max
        if self.span is not None:
            max_param = start + self.span
        if max_param is not None and max_param <= start:
            raise ConfigurationError(
                f"parameter bound {max_param!r} does not exceed the start {start!r}"
            )
        return StopRule(max_steps=self.max_steps, max_param=max_param, eps_stop=self.eps_stop)

    @classmethod
    def from_args(cls, args: Namespace, defaults: Optional[SolverDefaults] = None) -> "RunConfig":
        """Build from parsed ``solve`` flags; unset flags fall back to ``defaults``."""
        defaults = defaults or SolverDefaults()
        param_max, param_flag = _param_max_from_args(args)
        return cls(
            source=source_from_args(args),
            method=_method_from_args(args),
            g=g_from_args(args),
            step=_pick(args, "h", defaults.step),
            max_steps=_pick(args, "max_steps", defaults.max_steps),
            eps_stop=_pick(args, "eps_stop", defaults.eps_stop),
            param_max=param_max,
            param_flag=param_flag,
            span=getattr(args, "span", None),
            tail=_pick(args, "tail", defaults.tail),
            stride=_pick(args, "stride", "auto"),
            fit_fraction=_pick(args, "fit_fraction", defaults.fit_fraction),
            output_format=_pick(args, "format", "csv"),
            output=getattr(args, "output", None),
            summary=getattr(args, "summary", None),
            every=_pick(args, "every", 1),
            plot_script=getattr(args, "plot_script", None),
        )


def _pick(args: Namespace, name: str, fallback):
    value = getattr(args, name, None)
    return fallback if value is None else value


def source_from_args(args: Namespace) -> ProblemSource:
    problem_id = getattr(args, "problem", None)
    rhs = getattr(args, "rhs", None)
    if problem_id is not None:
        inline_flags = [
            f for f in ("order", "x0", "y0", "y1") if getattr(args, f, None) is not None
        ]
        if inline_flags:
            raise ConfigurationError(
                f"--{inline_flags[0]} only applies to inline problems given with --rhs"
            )
    return ProblemSource(
        problem_id=problem_id,
        a=_pick(args, "a", 1.0),
        p=_pick(args, "p", 2.0),
        rhs=rhs,
        order=_pick(args, "order", 1),
        x0=_pick(args, "x0", 0.0),
        y0=_pick(args, "y0", 1.0),
        y1=getattr(args, "y1", None),
    )


def _method_from_args(args: Namespace, attr: str = "method") -> Optional[TransformKind]:
    text = getattr(args, attr, None)
    if text is None:
        return None
    try:
        return code_from_name(TransformKind, text)
    except KeyError as exc:
        raise ConfigurationError(f"--{attr.replace('_', '-')}: {exc.args[0]}") from None


def g_from_args(args: Namespace, attr: str = "g") -> Optional[GChoice]:
    """GChoice from ``--g`` (plus ``--s`` / ``--custom-g``); None when unset."""
    text = getattr(args, attr, None)
    custom = getattr(args, "custom_g", None)
    s = _pick(args, "s", 2.0)
    if text is None:
        if custom is not None:
            return GChoice.custom_expression(custom)
        return GChoice.arc_length(s) if getattr(args, "s", None) is not None else None
    try:
        kind = code_from_name(GKind, text)
    except KeyError as exc:
        raise ConfigurationError(f"--{attr.replace('_', '-')}: {exc.args[0]}") from None
    if kind == GKind.CUSTOM:
        if custom is None:
            raise ConfigurationError("--g custom needs --custom-g EXPRESSION")
        return GChoice.custom_expression(custom)
    if kind == GKind.ARC_LENGTH:
        return GChoice.arc_length(s)
    return GChoice.of(kind)


def _param_max_from_args(args: Namespace) -> Tuple[Optional[float], Optional[str]]:
    t_max = getattr(args, "t_max", None)
    xi_max = getattr(args, "xi_max", None)
    if t_max is not None and xi_max is not None:
        raise ConfigurationError("give only one of --t-max and --xi-max")
    if t_max is not None:
        return t_max, "t"
    if xi_max is not None:
        return xi_max, "xi"
    return None, None
