"""Tests for expression parsing, printing, evaluation and differentiation."""

import math

import numpy as np
import pytest

from blowup_solver.core import expr as ex
from blowup_solver.core.errors import DomainError, ParseError, UnboundVariableError

ROUND_TRIP_CORPUS = [
    "2*y^3",
    "y^2",
    "(1 + abs(y^2)^3)^(1/3)",
    "sqrt(1 + t^2 + (2*y^3)^2)",
    "-y^2",
    "(-y)^2",
    "--y",
    "2^-1",
    "x - (y - t)",
    "(x - y) - t",
    "x / (y * t)",
    "x / y * t",
    "y^2^3",
    "(y^2)^3",
    "exp(-x) + ln(1 + y^2)",
    "3.5e-3*y",
    "sign(y)*abs(y)",
    "t/y",
    "y^2/y",
    "(x + 1)*(y - 2)/(t + 3)",
]


class TestParse:
    """Test the recursive-descent parser."""

    def test_precedence(self):
        """'*' binds tighter than '+', '^' tighter than unary minus."""
        assert ex.parse("1 + 2*y") == ex.Binary(
            "+", ex.Const(1.0), ex.Binary("*", ex.Const(2.0), ex.Var("y"))
        )
        assert ex.parse("-y^2") == ex.Unary("neg", ex.Binary("^", ex.Var("y"), ex.Const(2.0)))

    def test_power_is_right_associative(self):
        """y^2^3 is y^(2^3)."""
        tree = ex.parse("y^2^3")
        assert tree == ex.Binary("^", ex.Var("y"), ex.Binary("^", ex.Const(2.0), ex.Const(3.0)))

    def test_functions(self):
        """Function names parse into unary nodes."""
        assert ex.parse("sqrt(y)") == ex.Unary("sqrt", ex.Var("y"))
        assert ex.variables(ex.parse("exp(x) + ln(t)")) == {"x", "t"}

    @pytest.mark.parametrize(
        "source,column",
        [
            ("y^", 2),
            ("y^^2", 3),
            ("2*(y+1", 6),
            ("y $ 2", 3),
            ("foo(y)", 1),
            ("sqrt y", 6),
            ("y 2", 3),
            ("1e999", 1),
            ("2*1e999", 3),
        ],
    )
    def test_errors_report_column(self, source, column):
        """Malformed text raises ParseError with a 1-based column."""
        with pytest.raises(ParseError) as info:
            ex.parse(source)
        assert info.value.position == column
        assert info.value.source == source

    def test_empty_source(self):
        """Nothing to parse is an error too."""
        with pytest.raises(ParseError):
            ex.parse("   ")


class TestPrint:
    """Test printing and the parse/print round trip."""

    @pytest.mark.parametrize("source", ROUND_TRIP_CORPUS)
    def test_round_trip(self, source):
        """parse(print(e)) == e and printing is idempotent."""
        tree = ex.parse(source)
        text = ex.to_string(tree)
        assert ex.parse(text) == tree
        assert ex.to_string(ex.parse(text)) == text

    def test_minimal_parentheses(self):
        """Only the parentheses needed to keep the tree are printed."""
        assert ex.to_string(ex.parse("((y))^(2)")) == "y^2"
        assert ex.to_string(ex.parse("x/(y*t)")) == "x / (y * t)"
        assert ex.to_string(ex.parse("(x/y)*t")) == "x / y * t"

    def test_negative_constant(self):
        """Negative constants built in code print in parentheses."""
        assert ex.to_string(ex.Binary("*", ex.Const(-2.0), ex.Var("y"))) == "(-2) * y"


class TestEvaluate:
    """Test evaluation and its domain checks."""

    def test_values(self):
        """Plain arithmetic."""
        assert ex.evaluate(ex.parse("2*y^3"), {"y": 2.0}) == 16.0
        assert ex.evaluate(ex.parse("(1 + abs(y^2)^3)^(1/3)"), {"y": 1.0}) == pytest.approx(
            2.0 ** (1.0 / 3.0)
        )

    @pytest.mark.parametrize(
        "source,binding",
        [
            ("1/y", {"y": 0.0}),
            ("ln(y)", {"y": -1.0}),
            ("sqrt(y)", {"y": -4.0}),
            ("y^0.5", {"y": -4.0}),
            ("exp(y)", {"y": 1000.0}),
        ],
    )
    def test_domain_errors(self, source, binding):
        """Out-of-domain operations raise DomainError."""
        with pytest.raises(DomainError):
            ex.evaluate(ex.parse(source), binding)

    def test_unbound_variable(self):
        """Missing bindings are reported by name."""
        with pytest.raises(UnboundVariableError, match="'t'"):
            ex.evaluate(ex.parse("t + y"), {"y": 1.0})

    def test_lambdify_matches_evaluate(self):
        """The compiled callable agrees with the tree walk."""
        for source in ROUND_TRIP_CORPUS:
            tree = ex.parse(source)
            fn = ex.lambdify(tree)
            binding = {"x": 0.3, "y": 1.7, "t": 2.1}
            assert fn(0.3, 1.7, 2.1) == pytest.approx(ex.evaluate(tree, binding), rel=1e-15)

    def test_lambdify_domain_error(self):
        """Compiled callables keep the domain checks."""
        with pytest.raises(DomainError):
            ex.lambdify(ex.parse("1/y"))(0.0, 0.0, 0.0)

    @pytest.mark.parametrize(
        "source,y", [("1/(y*y*y*y)", 1e100), ("exp(-(y*y*y*y))", 1e100), ("x / (y + y)", 1e308)]
    )
    def test_lambdify_intermediate_overflow(self, source, y):
        """An overflow inside the tree raises even when the final value would be finite."""
        tree = ex.parse(source)
        with pytest.raises(DomainError):
            ex.evaluate(tree, {"x": 1.0, "y": y})
        with pytest.raises(DomainError):
            ex.lambdify(tree)(1.0, y, 0.0)

    def test_overflowing_fold_is_kept(self):
        """Constant folding never produces an infinite constant."""
        tree = ex.simplify(ex.parse("1e300*1e300 + y"))
        assert "inf" not in ex.to_string(tree)
        with pytest.raises(DomainError):
            ex.evaluate(tree, {"y": 1.0})


def _random_tree(rng: np.random.Generator, depth: int, guards: list) -> ex.Expression:
    """Random expression over + - * / ^, abs, exp, sqrt and ln.

    Subtrees that must keep away from zero (abs arguments, raw denominators)
    are appended to ``guards`` as ``(subtree, smallest allowed |value|)``.
    """
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return ex.Var(str(rng.choice(list(ex.VARIABLES))))
        return ex.Const(float(np.round(rng.uniform(0.5, 1.5), 2)))
    a = _random_tree(rng, depth - 1, guards)
    kind = int(rng.integers(0, 12))
    if kind < 3:
        b = _random_tree(rng, depth - 1, guards)
        return (a + b, a - b, a * b)[kind]
    if kind == 3:
        b = _random_tree(rng, depth - 1, guards)
        guards.append((b, 0.25))
        return a / b
    if kind == 4:
        b = _random_tree(rng, depth - 1, guards)
        guards.append((b, 0.05))
        return a / (1 + ex.Unary("abs", b))
    if kind == 5:
        return a ** ex.Const(2.0)
    if kind == 6:
        b = _random_tree(rng, depth - 1, guards)
        guards.append((a, 0.05))
        return (1 + ex.Unary("abs", a)) ** (b / (1 + b ** ex.Const(2.0)))
    if kind == 7:
        guards.append((a, 0.05))
        return ex.Unary("abs", a)
    if kind == 8:
        return ex.Unary("exp", a / (1 + a ** ex.Const(2.0)))
    if kind == 9:
        return ex.Unary("sqrt", 1 + a ** ex.Const(2.0))
    if kind == 10:
        return ex.Unary("ln", 1 + a ** ex.Const(2.0))
    return -a


def _nodes(tree: ex.Expression):
    yield tree
    if isinstance(tree, ex.Unary):
        yield from _nodes(tree.operand)
    elif isinstance(tree, ex.Binary):
        yield from _nodes(tree.left)
        yield from _nodes(tree.right)


def _step(point: dict, v: str) -> float:
    return 1e-4 * (1.0 + abs(point[v]))


def _stencil(point: dict):
    yield point
    for v in ex.VARIABLES:
        for k in (-2, -1, 1, 2):
            shifted = dict(point)
            shifted[v] += k * _step(point, v)
            yield shifted


def _well_inside(tree: ex.Expression, guards: list, point: dict) -> bool:
    """Guarded subtrees keep their sign and size over the stencil; nothing exceeds 1e3."""
    try:
        if max(abs(ex.evaluate(node, point)) for node in _nodes(tree)) > 1e3:
            return False
        for guard, least in guards:
            centre = ex.evaluate(guard, point)
            for shifted in _stencil(point):
                value = ex.evaluate(guard, shifted)
                if abs(value) < least or (value > 0.0) != (centre > 0.0):
                    return False
    except DomainError:
        return False
    return True


def _five_point(tree: ex.Expression, point: dict, v: str) -> float:
    h = _step(point, v)
    values = []
    for k in (-2, -1, 1, 2):
        shifted = dict(point)
        shifted[v] += k * h
        values.append(ex.evaluate(tree, shifted))
    return (values[0] - 8.0 * values[1] + 8.0 * values[2] - values[3]) / (12.0 * h)


class TestDifferentiate:
    """Symbolic derivatives against finite differences."""

    def test_known_derivative(self):
        """d/dy 2y^3 = 6y^2, already folded."""
        derivative = ex.differentiate(ex.parse("2*y^3"), "y")
        assert derivative == ex.Binary(
            "*", ex.Const(6.0), ex.Binary("^", ex.Var("y"), ex.Const(2.0))
        )
        assert ex.to_string(derivative) == "6 * y^2"

    def test_other_variable_is_zero(self):
        """Differentiating with respect to an absent variable gives 0."""
        assert ex.differentiate(ex.parse("2*y^3"), "x") == ex.Const(0.0)

    def test_abs_uses_sign(self):
        """d abs(u) = sign(u) u'."""
        derivative = ex.differentiate(ex.parse("abs(y^3)"), "y")
        assert ex.evaluate(derivative, {"y": -2.0}) == pytest.approx(-12.0)
        assert ex.evaluate(derivative, {"y": 0.0}) == 0.0

    def test_variable_exponent(self):
        """d/dy y^y = y^y (ln y + 1)."""
        derivative = ex.differentiate(ex.parse("y^y"), "y")
        assert ex.evaluate(derivative, {"y": 2.0}) == pytest.approx(4.0 * (math.log(2.0) + 1.0))

    def test_gradient(self):
        """Gradient covers every variable."""
        grad = ex.gradient(ex.parse("x*y + t^2"))
        point = {"x": 2.0, "y": 3.0, "t": 4.0}
        assert [ex.evaluate(grad[v], point) for v in "xyt"] == [3.0, 2.0, 8.0]

    def test_unknown_variable(self):
        """Only x, y and t can be differentiated against."""
        with pytest.raises(ValueError):
            ex.differentiate(ex.parse("y"), "z")

    def test_randomized_against_finite_differences(self):
        """100 random depth-6 trees at 10 points each: partials match a five-point stencil."""
        rng = np.random.default_rng(20240611)
        checked = 0
        while checked < 100:
            guards = []
            tree = _random_tree(rng, 6, guards)
            points = []
            for _ in range(200):
                point = {v: float(rng.uniform(-1.5, 1.5)) for v in ex.VARIABLES}
                if _well_inside(tree, guards, point):
                    points.append(point)
                if len(points) == 10:
                    break
            else:
                continue
            partials = {v: ex.differentiate(tree, v) for v in ex.VARIABLES}
            for point in points:
                for v in ex.VARIABLES:
                    numeric = _five_point(tree, point, v)
                    symbolic = ex.evaluate(partials[v], point)
                    assert abs(symbolic - numeric) <= 1e-6 * (1.0 + abs(numeric)), (
                        f"d/d{v} of {tree} at {point}"
                    )
            checked += 1


class TestSimplify:
    """Light folding used by the differentiator."""

    def test_folds_constants(self):
        """Constant subtrees collapse."""
        assert ex.simplify(ex.parse("2*3 + y*1 + 0")) == ex.Binary(
            "+", ex.Const(6.0), ex.Var("y")
        )

    def test_double_negation(self):
        """--u is u."""
        assert ex.simplify(ex.parse("--y")) == ex.Var("y")
