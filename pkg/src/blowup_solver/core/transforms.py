#!/usr/bin/env python3  src/blowup_solver/core/transforms.py
"""
Singularity-free Reformulations
===============================
Turn a Cauchy problem whose solution blows up at an unknown x* into an
ordinary first-order system whose solution exists for all values of a new
independent variable:

- differential transform, new variable t = y'  (x* = lim x(t) as t -> oo)
- non-local transform,    new variable xi = integral of g dx from x0
                          (x* = lim x(xi) as xi -> oo)

Orders 1 (y' = f(x, y)) and 2 (y'' = f(x, y, y'), with t standing for y')
are supported. The regularizing function g is picked with :class:`GChoice`.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from blowup_solver.core import expr as ex
from blowup_solver.core.codes import GKind, RatioTrend, TransformKind, translate_code
from blowup_solver.core.errors import (
    ConfigurationError,
    EvaluationError,
    ProblemNotApplicableError,
    SingularTransformError,
)
from blowup_solver.core.odecore import OdeSystem, Trajectory
from blowup_solver.logging_config import get_logger

logger = get_logger(__name__)

# |den| < DELTA_DEN * (1 + |numerator|) is singular; the guarded component is x' = 1/den
DELTA_DEN = 1e-14

ScalarFn = Callable[[float, float, float], float]
RightHandSide = Union[ex.Expression, Callable[..., float]]

_ALLOWED_VARIABLES = {1: frozenset(("x", "y")), 2: frozenset(("x", "y", "t"))}


# =============================================================================
# PROBLEM DEFINITION
# =============================================================================


@dataclass(frozen=True)
class CauchyProblem:
    """y' = f(x, y) (order 1) or y'' = f(x, y, t) with t = y' (order 2).

    ``f`` is either an :class:`~blowup_solver.core.expr.Expression` or a plain
    callable ``f(x, y, t)``; callables get finite-difference partial derivatives.
    """

    order: int
    f: RightHandSide
    x0: float
    y0: float
    y1: Optional[float] = None
    exact: Optional[Callable[[float], float]] = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ConfigurationError(f"only orders 1 and 2 are implemented, got {self.order}")
        if isinstance(self.f, str):
            object.__setattr__(self, "f", ex.parse(self.f))
        if isinstance(self.f, ex.Expression):
            extra = ex.variables(self.f) - _ALLOWED_VARIABLES[self.order]
            if extra:
                raise ConfigurationError(
                    f"order-{self.order} right-hand side may not use {sorted(extra)}"
                )
        elif not callable(self.f):
            raise ConfigurationError("f must be an expression, expression text or a callable")
        if self.order == 1:
            if not self.x0 >= 0.0:
                raise ConfigurationError(f"order-1 problems need x0 >= 0, got {self.x0}")
            if not self.y0 > 0.0:
                raise ConfigurationError(f"order-1 problems need y0 > 0, got {self.y0}")
        elif self.y1 is None:
            raise ConfigurationError("order-2 problems need the initial slope y1")

    @property
    def expression(self) -> Optional[ex.Expression]:
        return self.f if isinstance(self.f, ex.Expression) else None

    def rhs(self) -> ScalarFn:
        """The right-hand side as a fast ``fn(x, y, t)``."""
        if self.expression is not None:
            return ex.lambdify(self.expression)
        user = self.f
        if self.order == 1:
            return lambda x, y, t: float(user(x, y))
        return lambda x, y, t: float(user(x, y, t))

    def partials(self, *names: str) -> Tuple[ScalarFn, ...]:
        """Partial derivatives of f: the symbolic gradient, or central differences for callables."""
        if self.expression is not None:
            grad = ex.gradient(self.expression, names)
            return tuple(ex.lambdify(grad[name]) for name in names)
        fn = self.rhs()
        return tuple(_central_difference(fn, "xyt".index(name)) for name in names)


def _central_difference(fn: ScalarFn, index: int) -> ScalarFn:
    scale = 6e-6  # ~ cube root of machine epsilon

    def partial(x: float, y: float, t: float) -> float:
        point = [x, y, t]
        h = scale * (1.0 + abs(point[index]))
        up, down = list(point), list(point)
        up[index] += h
        down[index] -= h
        return (fn(*up) - fn(*down)) / (2.0 * h)

    return partial


# =============================================================================
# REGULARIZING FUNCTION g
# =============================================================================


@dataclass(frozen=True)
class GChoice:
    """Which g to use in xi = integral of g dx.

    Arc-length: (1 + |f|^s)^(1/s) for order 1, (1 + |t|^s + |f|^s)^(1/s) for order 2.
    """

    kind: GKind = GKind.ARC_LENGTH
    s: float = 2.0
    custom: Optional[ex.Expression] = None

    def __post_init__(self):
        if isinstance(self.custom, str):
            object.__setattr__(self, "custom", ex.parse(self.custom))
        if not self.s > 0.0:
            raise ConfigurationError(f"arc-length exponent s must be > 0, got {self.s}")
        if self.kind == GKind.CUSTOM and self.custom is None:
            raise ConfigurationError("a custom g needs an expression")

    @classmethod
    def arc_length(cls, s: float = 2.0) -> "GChoice":
        return cls(GKind.ARC_LENGTH, s=s)

    @classmethod
    def of(cls, kind: GKind) -> "GChoice":
        return cls(kind)

    @classmethod
    def custom_expression(cls, source: Union[str, ex.Expression]) -> "GChoice":
        return cls(GKind.CUSTOM, custom=source)

    def describe(self) -> str:
        if self.kind == GKind.ARC_LENGTH:
            return f"arc-length(s={self.s:g})"
        if self.kind == GKind.CUSTOM:
            return f"custom({self.custom})"
        return translate_code(self.kind)

    def check_order(self, order: int) -> None:
        if order == 1 and self.kind in (GKind.F_OVER_T, GKind.T_OVER_Y):
            raise ProblemNotApplicableError(
                f"g = {translate_code(self.kind)} needs t = y' and is only valid for order 2"
            )
        if self.kind == GKind.CUSTOM:
            extra = ex.variables(self.custom) - _ALLOWED_VARIABLES[order]
            if extra:
                raise ProblemNotApplicableError(
                    f"custom g for an order-{order} problem may not use {sorted(extra)}"
                )


def default_g(order: int) -> GChoice:
    """Arc-length (s = 2) for order 1, t/y for order 2."""
    return GChoice.arc_length(2.0) if order == 1 else GChoice.of(GKind.T_OVER_Y)


def g_expression(problem: CauchyProblem, g: GChoice) -> Optional[ex.Expression]:
    """g as an expression tree, or None when f is an opaque callable."""
    g.check_order(problem.order)
    if g.kind == GKind.CUSTOM:
        return g.custom
    f = problem.expression
    if f is None:
        return None
    y, t = ex.Var("y"), ex.Var("t")
    if g.kind == GKind.F_OVER_Y:
        return f / y
    if g.kind == GKind.F_OVER_T:
        return f / t
    if g.kind == GKind.T_OVER_Y:
        return t / y
    if g.s == 2.0:
        inner = 1 + f ** ex.Const(2.0)
        if problem.order == 2:
            inner = 1 + t ** ex.Const(2.0) + f ** ex.Const(2.0)
        return ex.Unary("sqrt", inner)
    s = ex.Const(g.s)
    inner = 1 + ex.Unary("abs", f) ** s
    if problem.order == 2:
        inner = 1 + ex.Unary("abs", t) ** s + ex.Unary("abs", f) ** s
    return inner ** ex.Const(1.0 / g.s)


def g_callable(problem: CauchyProblem, g: GChoice) -> ScalarFn:
    """g as a fast ``fn(x, y, t)``, built from the expression when there is one."""
    tree = g_expression(problem, g)
    if tree is not None:
        return ex.lambdify(tree)
    f = problem.rhs()
    s = g.s
    order2 = problem.order == 2
    if g.kind == GKind.F_OVER_Y:
        return lambda x, y, t: f(x, y, t) / y
    if g.kind == GKind.F_OVER_T:
        return lambda x, y, t: f(x, y, t) / t
    if g.kind == GKind.T_OVER_Y:
        return lambda x, y, t: t / y
    if order2:
        return lambda x, y, t: (1.0 + abs(t) ** s + abs(f(x, y, t)) ** s) ** (1.0 / s)
    return lambda x, y, t: (1.0 + abs(f(x, y, t)) ** s) ** (1.0 / s)


# =============================================================================
# TRANSFORMED SYSTEMS
# =============================================================================


@dataclass(frozen=True)
class TransformedSystem:
    """An :class:`OdeSystem` in t or xi plus the map back to (x, y[, t]).

    ``back_map`` names, for each original quantity, the state component holding it;
    the value "param" means the quantity is the independent variable itself.
    """

    system: OdeSystem
    kind: TransformKind
    parameter_name: str
    back_map: Dict[str, str]
    problem: CauchyProblem = field(compare=False)
    g: Optional[GChoice] = None
    g_tree: Optional[ex.Expression] = field(default=None, compare=False)

    @property
    def tag(self) -> str:
        return translate_code(self.kind)

    def to_original(self, trajectory: Trajectory) -> Dict[str, np.ndarray]:
        """The solution as arrays x, y (and t for order 2) indexed like the trajectory."""
        out = {}
        for name, source in self.back_map.items():
            out[name] = trajectory.params if source == "param" else trajectory.component(source)
        return out


def _guard(
    den: float,
    numerator: float,
    what: str,
    param: float,
    state: Tuple[float, ...],
    names: Tuple[str, ...],
    param_name: str,
) -> None:
    if abs(den) < DELTA_DEN * (1.0 + abs(numerator)):
        raise SingularTransformError(
            f"vanishing denominator {what}", param, state, names, param_name
        )


def _require_order(problem: CauchyProblem, order: int) -> None:
    if problem.order != order:
        raise ProblemNotApplicableError(
            f"this transform needs an order-{order} problem, got order {problem.order}"
        )


def differential_transform_1(p: CauchyProblem) -> TransformedSystem:
    """x'_t = 1/(f_x + t f_y), y'_t = t/(f_x + t f_y); x(t0) = x0, y(t0) = y0, t0 = f(x0, y0)."""
    _require_order(p, 1)
    f, (fx, fy) = p.rhs(), p.partials("x", "y")
    names = ("x", "y")

    def rhs(t, state):
        x, y = state
        den = fx(x, y, t) + t * fy(x, y, t)
        _guard(den, 1.0, "f_x + t*f_y", t, state, names, "t")
        return (1.0 / den, t / den)

    t0 = f(p.x0, p.y0, 0.0)
    system = OdeSystem(names, rhs, start=t0, initial=(p.x0, p.y0), parameter_name="t")
    return _finish(system, TransformKind.DIFFERENTIAL, "t", {"x": "x", "y": "y"}, p)


def differential_transform_2(p: CauchyProblem) -> TransformedSystem:
    """x'_t = 1/f, y'_t = t/f; x(t0) = x0, y(t0) = y0, t0 = y1."""
    _require_order(p, 2)
    f = p.rhs()
    names = ("x", "y")

    def rhs(t, state):
        x, y = state
        fv = f(x, y, t)
        _guard(fv, 1.0, "f", t, state, names, "t")
        return (1.0 / fv, t / fv)

    system = OdeSystem(names, rhs, start=p.y1, initial=(p.x0, p.y0), parameter_name="t")
    return _finish(system, TransformKind.DIFFERENTIAL, "t", {"x": "x", "y": "y", "t": "param"}, p)


def nonlocal_transform_1(p: CauchyProblem, g: Optional[GChoice] = None) -> TransformedSystem:
    """x'_xi = 1/g, y'_xi = f/g; x(0) = x0, y(0) = y0."""
    _require_order(p, 1)
    g = g or default_g(1)
    f, gf = p.rhs(), g_callable(p, g)
    names = ("x", "y")

    def rhs(xi, state):
        x, y = state
        fv = f(x, y, 0.0)
        gv = gf(x, y, 0.0)
        _guard(gv, 1.0, "g", xi, state, names, "xi")
        return (1.0 / gv, fv / gv)

    system = OdeSystem(names, rhs, start=0.0, initial=(p.x0, p.y0), parameter_name="xi")
    return _finish(system, TransformKind.NONLOCAL, "xi", {"x": "x", "y": "y"}, p, g)


def nonlocal_transform_2(p: CauchyProblem, g: Optional[GChoice] = None) -> TransformedSystem:
    """x'_xi = 1/g, y'_xi = t/g, t'_xi = f/g; x(0) = x0, y(0) = y0, t(0) = y1."""
    _require_order(p, 2)
    g = g or default_g(2)
    f, gf = p.rhs(), g_callable(p, g)
    names = ("x", "y", "t")

    def rhs(xi, state):
        x, y, t = state
        fv = f(x, y, t)
        gv = gf(x, y, t)
        _guard(gv, 1.0, "g", xi, state, names, "xi")
        return (1.0 / gv, t / gv, fv / gv)

    system = OdeSystem(names, rhs, start=0.0, initial=(p.x0, p.y0, p.y1), parameter_name="xi")
    return _finish(system, TransformKind.NONLOCAL, "xi", {"x": "x", "y": "y", "t": "t"}, p, g)


def _finish(system, kind, parameter_name, back_map, problem, g=None) -> TransformedSystem:
    tree = g_expression(problem, g) if g is not None else None
    logger.debug(
        "transform.built",
        kind=translate_code(kind),
        order=problem.order,
        start=system.start,
        g=str(tree) if tree is not None else (g.describe() if g else None),
    )
    return TransformedSystem(system, kind, parameter_name, back_map, problem, g, tree)


def transform(
    problem: CauchyProblem, kind: TransformKind, g: Optional[GChoice] = None
) -> TransformedSystem:
    """Dispatch to the transform matching ``kind`` and the problem's order."""
    if kind == TransformKind.DIFFERENTIAL:
        if g is not None and g.kind != GKind.ARC_LENGTH:
            logger.warning("transform.g_ignored", reason="differential transform has no g")
        return (differential_transform_1 if problem.order == 1 else differential_transform_2)(
            problem
        )
    if problem.order == 1:
        return nonlocal_transform_1(problem, g)
    return nonlocal_transform_2(problem, g)


# =============================================================================
# ADMISSIBILITY OF g
# =============================================================================


@dataclass(frozen=True)
class ProbeGrid:
    """Sample points for the admissibility check.

    x runs over [x0, x0 + x_span]; y over a geometric ladder from y0 to y_max; for
    order 2 the ladder ties t = y**t_power.
    """

    x_span: float = 0.5
    x_points: int = 5
    y_max: float = 1e6
    rungs: int = 25
    growth_factor: float = 10.0
    t_power: float = 2.0
    slope_tolerance: float = 0.05


@dataclass(frozen=True)
class AdmissibilityReport:
    positive: bool
    min_g: float
    growth: bool
    growth_ratio: float
    ratio_trend: RatioTrend
    ratio_limit: float  # f/g at the top of the ladder
    ratio_degree: Optional[float]  # symbolic growth degree of f/g in y, if known
    errors: Tuple[str, ...] = ()

    @property
    def admissible(self) -> bool:
        return (
            self.positive
            and self.growth
            and self.ratio_trend in (RatioTrend.BOUNDED, RatioTrend.DIVERGING)
        )

    def violations(self) -> Tuple[str, ...]:
        found = []
        if not self.positive:
            found.append("positivity")
        if not self.growth:
            found.append("growth")
        if self.ratio_trend == RatioTrend.VANISHING:
            found.append("vanishing-ratio")
        return tuple(found)

    def to_dict(self) -> Dict[str, object]:
        return {
            "positive": self.positive,
            "min_g": self.min_g,
            "growth": self.growth,
            "growth_ratio": self.growth_ratio,
            "ratio_trend": translate_code(self.ratio_trend),
            "ratio_limit": self.ratio_limit,
            "ratio_degree": self.ratio_degree,
            "admissible": self.admissible,
            "violations": list(self.violations()),
            "errors": list(self.errors),
        }


def growth_degree(e: ex.Expression, t_power: float = 2.0) -> Optional[float]:
    """Exponent d with e ~ C y^d as y -> oo (x fixed, t ~ y^t_power), or None if unknown."""
    if isinstance(e, ex.Const):
        return 0.0
    if isinstance(e, ex.Var):
        return {"x": 0.0, "y": 1.0, "t": t_power}[e.name]
    if isinstance(e, ex.Unary):
        inner = growth_degree(e.operand, t_power)
        if inner is None:
            return None
        if e.op in ("neg", "abs"):
            return inner
        if e.op == "sqrt":
            return inner / 2.0
        if e.op == "sign":
            return 0.0
        # exp and ln grow faster/slower than any power unless the argument is bounded
        return 0.0 if inner == 0.0 else None
    if isinstance(e, ex.Binary):
        left = growth_degree(e.left, t_power)
        if e.op == "^":
            if ex.variables(e.right):
                right = growth_degree(e.right, t_power)
                return 0.0 if left == 0.0 and right == 0.0 else None
            if left is None:
                return None
            try:
                return left * ex.evaluate(e.right, {})
            except EvaluationError:
                return None
        right = growth_degree(e.right, t_power)
        if left is None or right is None:
            return None
        if e.op == "*":
            return left + right
        if e.op == "/":
            return left - right
        if e.op == "-" and left == right and left != 0.0:
            return None  # leading terms may cancel
        return max(left, right)
    return None


def _classify_degree(degree: float) -> RatioTrend:
    if degree > 0.0:
        return RatioTrend.DIVERGING
    if degree < 0.0:
        return RatioTrend.VANISHING
    return RatioTrend.BOUNDED


def check_g_admissibility(
    p: CauchyProblem, g: GChoice, probe: Optional[ProbeGrid] = None
) -> AdmissibilityReport:
    """Check g > 0, g -> oo and f/g -> k (0 < k <= oo) numerically on a probe grid.

    Evaluation failures at probe points are recorded in ``errors`` and skipped.
    """
    probe = probe or ProbeGrid()
    f, gf = p.rhs(), g_callable(p, g)
    y_low = p.y0 if p.y0 > 0.0 else 1.0
    if not probe.y_max > y_low:
        raise ConfigurationError(f"probe y_max {probe.y_max} must exceed {y_low}")
    ladder = np.geomspace(y_low, probe.y_max, probe.rungs)
    xs = np.linspace(p.x0, p.x0 + probe.x_span, probe.x_points)
    errors = []

    def t_of(y: float) -> float:
        return y**probe.t_power if p.order == 2 else 0.0

    def safe(fn: ScalarFn, x: float, y: float) -> Optional[float]:
        try:
            value = float(fn(x, y, t_of(y)))
        except (EvaluationError, ArithmeticError, ValueError) as exc:
            errors.append(f"x={x:g}, y={y:g}: {exc}")
            return None
        if not math.isfinite(value):
            errors.append(f"x={x:g}, y={y:g}: non-finite value")
            return None
        return value

    g_values = [safe(gf, float(x), float(y)) for x in xs for y in ladder]
    finite_g = [v for v in g_values if v is not None]
    min_g = min(finite_g) if finite_g else math.nan
    positive = bool(finite_g) and min_g > 0.0

    bottom = safe(gf, float(p.x0), float(ladder[0]))
    top = safe(gf, float(p.x0), float(ladder[-1]))
    growth_ratio = top / bottom if bottom and top is not None and bottom > 0.0 else math.nan
    growth = math.isfinite(growth_ratio) and growth_ratio >= probe.growth_factor

    ratios = []
    for y in ladder[len(ladder) // 2 :]:
        fv, gv = safe(f, float(p.x0), float(y)), safe(gf, float(p.x0), float(y))
        ratios.append(fv / gv if fv is not None and gv else None)
    ratio_limit = ratios[-1] if ratios and ratios[-1] is not None else math.nan

    degree = None
    g_tree = g_expression(p, g)
    if p.expression is not None and g_tree is not None:
        f_degree = growth_degree(p.expression, probe.t_power)
        g_degree = growth_degree(g_tree, probe.t_power)
        if f_degree is not None and g_degree is not None:
            degree = f_degree - g_degree

    if degree is not None:
        trend = _classify_degree(degree)
        if trend == RatioTrend.BOUNDED and not ratio_limit > 0.0:
            trend = RatioTrend.VANISHING if ratio_limit == 0.0 else RatioTrend.INCONCLUSIVE
    elif all(r is not None and r > 0.0 for r in ratios) and len(ratios) >= 2:
        upper = ladder[len(ladder) // 2 :]
        slope = float(np.polyfit(np.log(upper), np.log(np.asarray(ratios, dtype=float)), 1)[0])
        if slope > probe.slope_tolerance:
            trend = RatioTrend.DIVERGING
        elif slope < -probe.slope_tolerance:
            trend = RatioTrend.VANISHING
        else:
            trend = RatioTrend.BOUNDED
    else:
        trend = RatioTrend.INCONCLUSIVE

    report = AdmissibilityReport(
        positive=positive,
        min_g=min_g,
        growth=growth,
        growth_ratio=growth_ratio,
        ratio_trend=trend,
        ratio_limit=ratio_limit,
        ratio_degree=degree,
        errors=tuple(errors),
    )
    logger.info(
        "admissibility.checked",
        g=g.describe(),
        admissible=report.admissible,
        violations=list(report.violations()),
    )
    return report
