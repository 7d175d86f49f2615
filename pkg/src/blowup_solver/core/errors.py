# blowup_solver/src/blowup_solver/core/errors.py
"""Exception hierarchy. Each class carries the process exit code the CLI reports."""

from typing import Optional, Sequence, Tuple

from blowup_solver.core.codes import ExitCode


class BlowupError(Exception):
    """Base class for every error raised by the solver."""

    exit_code: ExitCode = ExitCode.CONFIG


class ConfigurationError(BlowupError, ValueError):
    """Invalid problem definition, method choice or run configuration."""

    exit_code = ExitCode.CONFIG


class ProblemNotApplicableError(ConfigurationError):
    """A transform or exact solution does not exist for the requested problem."""


class ParseError(BlowupError):
    """Malformed expression text.

    Attributes:
        position: 1-based column of the offending character
        expected: description of what the parser wanted at that column
        source: the text being parsed
    """

    exit_code = ExitCode.PARSE

    def __init__(self, position: int, expected: str, source: str):
        self.position = position
        self.expected = expected
        self.source = source
        super().__init__(f"column {position}: expected {expected} in '{source}'")

    def caret(self) -> str:
        """Two-line rendering of the source with a caret under the offending column."""
        return f"{self.source}\n{' ' * (self.position - 1)}^"


class EvaluationError(BlowupError, ArithmeticError):
    """An expression or right-hand side could not produce a finite value."""

    exit_code = ExitCode.SINGULAR_TRANSFORM


class UnboundVariableError(EvaluationError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"variable '{name}' is not bound")


class DomainError(EvaluationError):
    """Division by zero, logarithm or root out of domain, or a non-finite result."""


class SingularTransformError(EvaluationError):
    """A transformed system's denominator vanished.

    Attributes:
        param: value of the new independent variable (t or xi)
        state: state vector at the failure
        names: component names matching ``state``
    """

    def __init__(
        self,
        message: str,
        param: float,
        state: Sequence[float],
        names: Optional[Sequence[str]] = None,
        param_name: str = "param",
    ):
        self.param = param
        self.state: Tuple[float, ...] = tuple(state)
        self.names = tuple(names) if names else tuple(f"u{i}" for i in range(len(self.state)))
        self.param_name = param_name
        where = ", ".join(f"{n}={v:.17g}" for n, v in zip(self.names, self.state))
        super().__init__(f"{message} at {param_name}={param:.17g}, {where}")


class IntegrationError(BlowupError):
    """The right-hand side failed before a single step completed."""

    exit_code = ExitCode.SINGULAR_TRANSFORM


class EstimationError(BlowupError):
    """Blow-up point or singularity fit could not be computed."""

    exit_code = ExitCode.ESTIMATION


class TooFewSamplesError(EstimationError):
    pass


class NonMonotoneTailError(EstimationError):
    pass


class OutputError(BlowupError):
    """Writing a result file failed."""

    exit_code = ExitCode.IO
