#!/usr/bin/env python3  src/blowup_solver/core/expr.py
"""
Right-hand Side Expressions
===========================
Parse textual right-hand sides such as ``2*y^3`` or ``(1 + abs(y^2)^3)^(1/3)``
into immutable expression trees, evaluate them, and differentiate them
symbolically so the transformed systems can use exact partial derivatives.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right associative
    primary := NUMBER | 'x' | 'y' | 't' | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := abs | sqrt | exp | ln | sign

``sign`` is accepted because differentiating ``abs(u)`` yields ``sign(u) * u'``
(with the convention sign(0) = 0).
"""

import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Tuple

from blowup_solver.core.errors import DomainError, ParseError, UnboundVariableError

VARIABLES = ("x", "y", "t")
FUNCTIONS = ("abs", "sqrt", "exp", "ln", "sign")

# printing precedence
_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5

_BINARY_PREC = {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "^": _PREC_POW}


class Expression:
    """Base node. Subclasses are frozen dataclasses, so equality is structural."""

    def __str__(self) -> str:
        return to_string(self)

    def __add__(self, other: "Expression") -> "Expression":
        return Binary("+", self, _coerce(other))

    def __radd__(self, other: float) -> "Expression":
        return Binary("+", _coerce(other), self)

    def __sub__(self, other: "Expression") -> "Expression":
        return Binary("-", self, _coerce(other))

    def __rsub__(self, other: float) -> "Expression":
        return Binary("-", _coerce(other), self)

    def __mul__(self, other: "Expression") -> "Expression":
        return Binary("*", self, _coerce(other))

    def __rmul__(self, other: float) -> "Expression":
        return Binary("*", _coerce(other), self)

    def __truediv__(self, other: "Expression") -> "Expression":
        return Binary("/", self, _coerce(other))

    def __rtruediv__(self, other: float) -> "Expression":
        return Binary("/", _coerce(other), self)

    def __pow__(self, other: "Expression") -> "Expression":
        return Binary("^", self, _coerce(other))

    def __neg__(self) -> "Expression":
        return Unary("neg", self)


@dataclass(frozen=True, eq=True)
class Const(Expression):
    value: float

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True, eq=True)
class Var(Expression):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, eq=True)
class Unary(Expression):
    op: str  # neg, abs, sqrt, exp, ln, sign
    operand: Expression

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True, eq=True)
class Binary(Expression):
    op: str  # + - * / ^
    left: Expression
    right: Expression

    def __str__(self) -> str:
        return to_string(self)


def _coerce(value) -> Expression:
    if isinstance(value, Expression):
        return value
    return Const(float(value))


ZERO = Const(0.0)
ONE = Const(1.0)


# =============================================================================
# PARSING
# =============================================================================

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number, name, op, end
    text: str
    pos: int  # 0-based


def _tokenize(source: str) -> List[_Token]:
    tokens = []
    pos = 0
    stripped_end = len(source.rstrip())
    while pos < stripped_end:
        match = _TOKEN_RE.match(source, pos)
        if match is None or match.end() == pos:
            bad = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ParseError(bad + 1, "a number, variable, function or operator", source)
        kind = match.lastgroup
        tokens.append(_Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(_Token("end", "", stripped_end))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def _fail(self, expected: str, token: Optional[_Token] = None) -> ParseError:
        token = token or self.current
        position = min(token.pos, max(len(self.source) - 1, 0)) + 1
        return ParseError(position, expected, self.source)

    def _accept(self, *ops: str) -> Optional[_Token]:
        token = self.current
        if token.kind == "op" and token.text in ops:
            self.index += 1
            return token
        return None

    def parse(self) -> Expression:
        if self.current.kind == "end":
            raise self._fail("an expression")
        tree = self._expr()
        if self.current.kind != "end":
            raise self._fail("an operator or end of input")
        return tree

    def _expr(self) -> Expression:
        tree = self._term()
        while True:
            token = self._accept("+", "-")
            if token is None:
                return tree
            tree = Binary(token.text, tree, self._term())

    def _term(self) -> Expression:
        tree = self._unary()
        while True:
            token = self._accept("*", "/")
            if token is None:
                return tree
            tree = Binary(token.text, tree, self._unary())

    def _unary(self) -> Expression:
        if self._accept("-"):
            return Unary("neg", self._unary())
        return self._power()

    def _power(self) -> Expression:
        base = self._primary()
        if self._accept("^"):
            return Binary("^", base, self._unary())
        return base

    def _primary(self) -> Expression:
        token = self.current
        if token.kind == "number":
            self.index += 1
            value = float(token.text)
            if not math.isfinite(value):
                raise self._fail("a number within double-precision range", token)
            return Const(value)
        if token.kind == "name":
            self.index += 1
            if token.text in VARIABLES:
                return Var(token.text)
            if token.text in FUNCTIONS:
                if not self._accept("("):
                    raise self._fail(f"'(' after {token.text}")
                argument = self._expr()
                if not self._accept(")"):
                    raise self._fail("')'")
                return Unary(token.text, argument)
            raise self._fail("one of x, y, t or a function (abs, sqrt, exp, ln, sign)", token)
        if self._accept("("):
            inner = self._expr()
            if not self._accept(")"):
                raise self._fail("')'")
            return inner
        raise self._fail("a number, variable, function call or '('")


def parse(source: str) -> Expression:
    """Parse ``source`` into an expression tree.

    Raises:
        ParseError: unknown identifier, unbalanced parentheses, trailing tokens
            or an empty string. ``position`` is a 1-based column.
    """
    return _Parser(source).parse()


# =============================================================================
# PRINTING
# =============================================================================


def _format_const(value: float) -> str:
    value = float(value)
    if value < 0:
        return f"(-{_format_const(-value)})"
    if value.is_integer() and value < 1e16:
        return str(int(value))
    return repr(float(value))


def _precedence(e: Expression) -> int:
    if isinstance(e, Binary):
        return _BINARY_PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return _PREC_NEG
    return _PREC_ATOM


def to_string(e: Expression) -> str:
    """Render with the minimum parentheses that re-parse to the same tree."""
    if isinstance(e, Const):
        return _format_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_string(e.operand)
            if _precedence(e.operand) < _PREC_NEG:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{e.op}({to_string(e.operand)})"
    if isinstance(e, Binary):
        prec = _BINARY_PREC[e.op]
        left = to_string(e.left)
        right = to_string(e.right)
        if e.op == "^":
            if _precedence(e.left) <= _PREC_POW:
                left = f"({left})"
            if _precedence(e.right) < _PREC_NEG:
                right = f"({right})"
            return f"{left}^{right}"
        if _precedence(e.left) < prec:
            left = f"({left})"
        if _precedence(e.right) <= prec:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression node: {e!r}")


# =============================================================================
# EVALUATION
# =============================================================================


def _checked(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise DomainError(f"non-finite result in {what}")
    return value


def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise DomainError("division by zero")
    return a / b


def _pow(a: float, b: float) -> float:
    if a < 0.0 and not float(b).is_integer():
        raise DomainError(f"negative base {a!r} raised to non-integer power {b!r}")
    if a == 0.0 and b < 0.0:
        raise DomainError("division by zero (zero raised to a negative power)")
    try:
        return a**b
    except OverflowError:
        raise DomainError(f"overflow in {a!r}^{b!r}") from None


def _ln(a: float) -> float:
    if a <= 0.0:
        raise DomainError(f"ln of non-positive argument {a!r}")
    return math.log(a)


def _sqrt(a: float) -> float:
    if a < 0.0:
        raise DomainError(f"sqrt of negative argument {a!r}")
    return math.sqrt(a)


def _exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        raise DomainError(f"overflow in exp({a!r})") from None


def _sign(a: float) -> float:
    if a == 0.0:
        return 0.0
    return math.copysign(1.0, a)


_UNARY_FUNCS: Dict[str, Callable[[float], float]] = {
    "neg": lambda a: -a,
    "abs": abs,
    "sqrt": _sqrt,
    "exp": _exp,
    "ln": _ln,
    "sign": _sign,
}

_BINARY_FUNCS: Dict[str, Callable[[float, float], float]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "^": _pow,
}


def _eval(e: Expression, binding: Mapping[str, float]) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(binding[e.name])
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Unary):
        return _checked(_UNARY_FUNCS[e.op](_eval(e.operand, binding)), e.op)
    if isinstance(e, Binary):
        left = _eval(e.left, binding)
        right = _eval(e.right, binding)
        return _checked(_BINARY_FUNCS[e.op](left, right), f"'{e.op}'")
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expression, binding: Mapping[str, float]) -> float:
    """Evaluate ``e`` with variables taken from ``binding``.

    Raises:
        UnboundVariableError: a variable of ``e`` is missing from ``binding``
        DomainError: division by zero, ln/sqrt out of domain, non-finite result
    """
    return _eval(e, binding)


def _source(e: Expression) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{_source(e.operand)})"
        if e.op == "abs":
            return f"abs({_source(e.operand)})"
        return f"_{e.op}({_source(e.operand)})"
    if isinstance(e, Binary):
        left, right = _source(e.left), _source(e.right)
        if e.op == "/":
            inner = f"_div({left}, {right})"
        elif e.op == "^":
            inner = f"_pow({left}, {right})"
        else:
            inner = f"({left} {e.op} {right})"
        return f"_checked({inner}, {repr(e.op)!r})"
    raise TypeError(f"not an expression node: {e!r}")


def lambdify(e: Expression) -> Callable[[float, float, float], float]:
    """Compile ``e`` into a Python callable ``fn(x, y, t)``.

    Every binary node is checked for a finite result, so the domain errors are
    those of :func:`evaluate`, without the tree walk. The integrators call this
    on every stage.
    """
    namespace = {
        "_div": _div,
        "_pow": _pow,
        "_ln": _ln,
        "_sqrt": _sqrt,
        "_exp": _exp,
        "_sign": _sign,
        "_checked": _checked,
    }
    code = f"def _compiled(x, y, t):\n    return _checked({_source(e)}, {to_string(e)!r})\n"
    exec(compile(code, f"<expr {to_string(e)}>", "exec"), namespace)
    return namespace["_compiled"]


def variables(e: Expression) -> FrozenSet[str]:
    """Names of the variables occurring in ``e``."""
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Unary):
        return variables(e.operand)
    if isinstance(e, Binary):
        return variables(e.left) | variables(e.right)
    return frozenset()


# =============================================================================
# SIMPLIFICATION
# =============================================================================


def _is_const(e: Expression, value: Optional[float] = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def _fold(op: str, value: float, a: Expression, b: Expression) -> Expression:
    # overflowing folds stay as nodes so that evaluation reports them
    return Const(value) if math.isfinite(value) else Binary(op, a, b)


def mk_neg(a: Expression) -> Expression:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.operand
    return Unary("neg", a)


def mk_add(a: Expression, b: Expression) -> Expression:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold("+", a.value + b.value, a, b)
    return Binary("+", a, b)


def mk_sub(a: Expression, b: Expression) -> Expression:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return mk_neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold("-", a.value - b.value, a, b)
    return Binary("-", a, b)


def mk_mul(a: Expression, b: Expression) -> Expression:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold("*", a.value * b.value, a, b)
    if isinstance(b, Const):
        return mk_mul(b, a)
    if isinstance(a, Const) and isinstance(b, Binary) and b.op == "*" and isinstance(b.left, Const):
        product = a.value * b.left.value
        if math.isfinite(product):
            return mk_mul(Const(product), b.right)
    return Binary("*", a, b)


def mk_div(a: Expression, b: Expression) -> Expression:
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return _fold("/", a.value / b.value, a, b)
    return Binary("/", a, b)


def mk_pow(a: Expression, b: Expression) -> Expression:
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return ONE
    if isinstance(a, Const) and isinstance(b, Const):
        try:
            return Const(_pow(a.value, b.value))
        except DomainError:
            pass
    return Binary("^", a, b)


_MAKERS = {"+": mk_add, "-": mk_sub, "*": mk_mul, "/": mk_div, "^": mk_pow}


def simplify(e: Expression) -> Expression:
    """Light bottom-up folding: constants, 0*u, 1*u, u+0, u^1, --u."""
    if isinstance(e, Unary):
        inner = simplify(e.operand)
        if e.op == "neg":
            return mk_neg(inner)
        if isinstance(inner, Const):
            try:
                return Const(_checked(_UNARY_FUNCS[e.op](inner.value), e.op))
            except DomainError:
                pass
        return Unary(e.op, inner)
    if isinstance(e, Binary):
        return _MAKERS[e.op](simplify(e.left), simplify(e.right))
    return e


# =============================================================================
# DIFFERENTIATION
# =============================================================================


def differentiate(e: Expression, v: str) -> Expression:
    """Exact partial derivative of ``e`` with respect to variable ``v``.

    d abs(u) = sign(u) * du, with sign(0) = 0 (a library convention at the kink).
    """
    if v not in VARIABLES:
        raise ValueError(f"cannot differentiate with respect to '{v}'")
    return _diff(e, v)


def _diff(e: Expression, v: str) -> Expression:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Unary):
        u = e.operand
        du = _diff(u, v)
        if _is_const(du, 0.0):
            return ZERO
        if e.op == "neg":
            return mk_neg(du)
        if e.op == "abs":
            return mk_mul(Unary("sign", u), du)
        if e.op == "sqrt":
            return mk_div(du, mk_mul(Const(2.0), e))
        if e.op == "exp":
            return mk_mul(e, du)
        if e.op == "ln":
            return mk_div(du, u)
        if e.op == "sign":
            return ZERO
    if isinstance(e, Binary):
        u, w = e.left, e.right
        du, dw = _diff(u, v), _diff(w, v)
        if e.op == "+":
            return mk_add(du, dw)
        if e.op == "-":
            return mk_sub(du, dw)
        if e.op == "*":
            return mk_add(mk_mul(du, w), mk_mul(u, dw))
        if e.op == "/":
            return mk_div(mk_sub(mk_mul(du, w), mk_mul(u, dw)), mk_pow(w, Const(2.0)))
        if e.op == "^":
            if _is_const(dw, 0.0):
                exponent = simplify(w)
                lowered = simplify(mk_sub(exponent, ONE))
                return mk_mul(mk_mul(exponent, mk_pow(u, lowered)), du)
            if _is_const(du, 0.0):
                return mk_mul(mk_mul(e, Unary("ln", u)), dw)
            inner = mk_add(mk_mul(dw, Unary("ln", u)), mk_div(mk_mul(w, du), u))
            return mk_mul(e, inner)
    raise TypeError(f"not an expression node: {e!r}")


def gradient(e: Expression, names: Tuple[str, ...] = VARIABLES) -> Dict[str, Expression]:
    """Partial derivatives of ``e`` with respect to each of ``names``."""
    return {name: differentiate(e, name) for name in names}
