#!/usr/bin/env python3  src/blowup_solver/core/problems.py
"""
Built-in Problems
=================
Blow-up problems with closed-form solutions, in original and transformed
variables. They are the oracles of the test-suite and the ``--problem``
choices of the CLI.

Identifiers:
- ``ex1``:      y' = y^2, y(0) = a. Pole at x* = 1/a.
- ``ex2-form``: ex1 solved with the non-local transform, g = f/y.
- ``ex3``:      y'' = 2 y^3, y(0) = a, y'(0) = a^2. Same solution as ex1.
- ``ex4-form``: ex3 solved with the non-local transform, g = t/y.
- ``power``:    y' = y^p (p > 1), y(0) = a. Synthetic family with
                x* = a^(1-p)/(p-1), A = (p-1)^(-1/(p-1)), beta = 1/(p-1).
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from blowup_solver.core import expr as ex
from blowup_solver.core.codes import GKind, TransformKind, translate_code
from blowup_solver.core.errors import ConfigurationError, ProblemNotApplicableError
from blowup_solver.core.transforms import CauchyProblem, GChoice, TransformedSystem, transform

PROBLEM_IDS = ("ex1", "ex2-form", "ex3", "ex4-form", "power")

State = Tuple[float, ...]


@dataclass(frozen=True)
class TestProblem:
    """A Cauchy problem with its exact blow-up data and exact transformed solutions.

    ``method`` and ``g`` are the defaults used by the CLI; ``g`` is also the
    regularizing function for which :func:`exact_transformed_state` knows the
    non-local solution.
    """

    __test__ = False  # not a pytest class

    identifier: str
    problem: CauchyProblem
    a: float
    method: TransformKind
    g: GChoice
    power: float = 2.0  # exponent p of y' = y^p; 2 for the ex* problems

    @property
    def x_star(self) -> float:
        return self.a ** (1.0 - self.power) / (self.power - 1.0)

    @property
    def amplitude(self) -> float:
        return (self.power - 1.0) ** (-1.0 / (self.power - 1.0))

    @property
    def beta(self) -> float:
        return 1.0 / (self.power - 1.0)

    def exact_y(self, x: float) -> float:
        """y(x) for x0 <= x < x*."""
        if not x < self.x_star:
            raise ConfigurationError(f"x = {x!r} is not below the blow-up point {self.x_star!r}")
        return self.amplitude * (self.x_star - x) ** (-self.beta)

    def start_parameter(self, kind: TransformKind) -> float:
        # t0 = f(x0, y0) = y0^p for order 1, y1 = a^2 for ex3
        return self.a**self.power if kind == TransformKind.DIFFERENTIAL else 0.0

    def transform(
        self, kind: Optional[TransformKind] = None, g: Optional[GChoice] = None
    ) -> TransformedSystem:
        """The problem's transformed system; defaults to its own method and g."""
        kind = self.method if kind is None else kind
        if kind == TransformKind.NONLOCAL:
            return transform(self.problem, kind, g or self.g)
        return transform(self.problem, kind)


def get_problem(identifier: str, a: float = 1.0, p: float = 2.0) -> TestProblem:
    """Build a built-in problem.

    Raises:
        ConfigurationError: unknown identifier, a <= 0, or p <= 1 for ``power``
    """
    if identifier not in PROBLEM_IDS:
        raise ConfigurationError(
            f"unknown problem '{identifier}', choose one of {', '.join(PROBLEM_IDS)}"
        )
    if not a > 0.0:
        raise ConfigurationError(f"parameter a must be > 0, got {a!r}")
    y = ex.Var("y")

    if identifier in ("ex1", "ex2-form"):
        cauchy = CauchyProblem(1, y ** ex.Const(2.0), 0.0, a, label=identifier)
        method = TransformKind.DIFFERENTIAL if identifier == "ex1" else TransformKind.NONLOCAL
        return TestProblem(identifier, cauchy, a, method, GChoice.of(GKind.F_OVER_Y))

    if identifier in ("ex3", "ex4-form"):
        rhs = ex.Const(2.0) * y ** ex.Const(3.0)
        cauchy = CauchyProblem(2, rhs, 0.0, a, y1=a * a, label=identifier)
        method = TransformKind.DIFFERENTIAL if identifier == "ex3" else TransformKind.NONLOCAL
        return TestProblem(identifier, cauchy, a, method, GChoice.of(GKind.T_OVER_Y))

    if not p > 1.0:
        raise ConfigurationError(f"the power family needs p > 1, got {p!r}")
    cauchy = CauchyProblem(1, y ** ex.Const(float(p)), 0.0, a, label=f"power(p={p:g})")
    return TestProblem(
        identifier, cauchy, a, TransformKind.NONLOCAL, GChoice.of(GKind.F_OVER_Y), power=float(p)
    )


def _check_applicable(
    tp: TestProblem, kind: TransformKind, param: float, g: Optional[GChoice]
) -> None:
    if kind == TransformKind.NONLOCAL and g is not None and g != tp.g:
        raise ProblemNotApplicableError(
            f"no closed-form non-local solution of {tp.identifier} for g = {g.describe()}"
            f" (known for g = {tp.g.describe()})"
        )
    start = tp.start_parameter(kind)
    if param < start:
        raise ConfigurationError(
            f"{translate_code(kind)} parameter {param!r} lies before its start {start!r}"
        )


def exact_transformed_state(
    tp: TestProblem, kind: TransformKind, param: float, g: Optional[GChoice] = None
) -> State:
    """Exact state of the transformed system at ``param`` (t or xi).

    Differential: (x, y). Non-local: (x, y) for order 1, (x, y, t) for order 2.

    Raises:
        ProblemNotApplicableError: ``g`` differs from the problem's own non-local g
        ConfigurationError: ``param`` precedes the transform's start parameter
    """
    _check_applicable(tp, kind, param, g)
    a, p, x_star = tp.a, tp.power, tp.x_star
    if kind == TransformKind.DIFFERENTIAL:
        # t = y^p along the exact solution (for ex3, t = y' = y^2)
        return (x_star - param ** ((1.0 - p) / p) / (p - 1.0), param ** (1.0 / p))
    decay = math.exp(-(p - 1.0) * param)
    y = a * math.exp(param)
    if tp.problem.order == 1:
        return (x_star * (1.0 - decay), y)
    return (x_star * (1.0 - decay), y, y * y)


def exact_transformed_derivative(
    tp: TestProblem, kind: TransformKind, param: float, g: Optional[GChoice] = None
) -> State:
    """d/dparam of :func:`exact_transformed_state`, differentiated by hand."""
    _check_applicable(tp, kind, param, g)
    a, p, x_star = tp.a, tp.power, tp.x_star
    if kind == TransformKind.DIFFERENTIAL:
        return (param ** ((1.0 - 2.0 * p) / p) / p, param ** (1.0 / p - 1.0) / p)
    dx = x_star * (p - 1.0) * math.exp(-(p - 1.0) * param)
    y = a * math.exp(param)
    if tp.problem.order == 1:
        return (dx, y)
    return (dx, y, 2.0 * y * y)
