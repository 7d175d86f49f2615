#!/usr/bin/env python3  src/blowup_solver/core/odecore.py
"""
Fixed-step Integration
======================
Classical fourth-order Runge-Kutta for small first-order systems
(dimension 2 or 3 here), with stopping rules suited to singularity-free
reformulations of blow-up problems: the x-component derivative decays to
zero as the new parameter grows, so "x stopped moving" is a stop condition.

States are plain tuples inside the step loop; samples are accumulated in
``array('d')`` buffers and handed out as numpy arrays.
"""

import math
import time
from array import array
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from blowup_solver.core.codes import TerminationReason, translate_code
from blowup_solver.core.errors import (
    ConfigurationError,
    EvaluationError,
    IntegrationError,
)
from blowup_solver.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_MAX_STEPS = 10**7
DEFAULT_EPS_STOP = 1e-8

Vector = Tuple[float, ...]
Rhs = Callable[[float, Sequence[float]], Sequence[float]]

# failures a right-hand side may raise; user-supplied callables can throw plain arithmetic errors
_RHS_FAILURES = (EvaluationError, ArithmeticError, ValueError)


@dataclass(frozen=True)
class OdeSystem:
    """A first-order system u' = rhs(p, u) started at ``p = start``."""

    names: Tuple[str, ...]
    rhs: Rhs
    start: float
    initial: Vector
    parameter_name: str = "p"

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "initial", tuple(float(v) for v in self.initial))
        object.__setattr__(self, "start", float(self.start))
        if len(self.names) != len(self.initial):
            raise ConfigurationError(
                f"{len(self.names)} component names for a state of length {len(self.initial)}"
            )
        if len(set(self.names)) != len(self.names):
            raise ConfigurationError(f"component names must be unique: {self.names}")
        if not all(math.isfinite(v) for v in self.initial):
            raise ConfigurationError(f"initial state is not finite: {self.initial}")

    @property
    def dimension(self) -> int:
        return len(self.names)

    @property
    def x_index(self) -> int:
        return self.names.index("x") if "x" in self.names else 0

    def derivative(self, p: float, state: Sequence[float]) -> Vector:
        values = tuple(self.rhs(p, state))
        if len(values) != self.dimension:
            raise ConfigurationError(
                f"right-hand side returned {len(values)} values for dimension {self.dimension}"
            )
        return values


@dataclass(frozen=True)
class StopRule:
    """When to stop integrating.

    ``eps_stop`` applies to |x'| at the start of each step; the non-finite
    guard is always active.
    """

    max_steps: int = DEFAULT_MAX_STEPS
    max_param: Optional[float] = None
    eps_stop: float = DEFAULT_EPS_STOP

    def __post_init__(self):
        if self.max_steps is None or int(self.max_steps) < 1:
            raise ConfigurationError("max_steps must be a positive integer")
        if self.max_param is not None and not math.isfinite(self.max_param):
            raise ConfigurationError("max_param must be finite when given")
        if not self.eps_stop >= 0.0:
            raise ConfigurationError("eps_stop must be >= 0")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Every accepted sample of one integration run."""

    names: Tuple[str, ...]
    parameter_name: str
    params: np.ndarray
    states: np.ndarray  # shape (samples, dimension)
    reason: TerminationReason
    step: float
    error: Optional[str] = None
    elapsed: float = field(default=0.0, compare=False)

    def __len__(self) -> int:
        return len(self.params)

    @property
    def steps(self) -> int:
        return len(self.params) - 1

    def component(self, name: str) -> np.ndarray:
        try:
            return self.states[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"trajectory has no component '{name}' (has {self.names})") from None

    @property
    def x(self) -> np.ndarray:
        return self.component("x")

    @property
    def y(self) -> np.ndarray:
        return self.component("y")

    @property
    def final_param(self) -> float:
        return float(self.params[-1])

    @property
    def final_state(self) -> Vector:
        return tuple(float(v) for v in self.states[-1])


def rk4_step(
    sys: OdeSystem,
    p: float,
    state: Sequence[float],
    h: float,
    k1: Optional[Sequence[float]] = None,
) -> Vector:
    """Advance ``state`` by one classical RK4 step (weights 1/6, 1/3, 1/3, 1/6).

    ``k1`` may be passed when the caller already evaluated the right-hand side at
    ``(p, state)``. Errors from the right-hand side propagate unchanged.
    """
    if not h > 0.0:
        raise ConfigurationError(f"step must be positive, got {h!r}")
    half = 0.5 * h
    if k1 is None:
        k1 = sys.derivative(p, state)
    k2 = sys.derivative(p + half, tuple(u + half * k for u, k in zip(state, k1)))
    k3 = sys.derivative(p + half, tuple(u + half * k for u, k in zip(state, k2)))
    k4 = sys.derivative(p + h, tuple(u + h * k for u, k in zip(state, k3)))
    sixth = h / 6.0
    return tuple(
        u + sixth * (a + 2.0 * b + 2.0 * c + d) for u, a, b, c, d in zip(state, k1, k2, k3, k4)
    )


def _step_limit(start: float, h: float, stop: StopRule) -> Tuple[int, TerminationReason]:
    limit, reason = int(stop.max_steps), TerminationReason.STEP_BUDGET
    if stop.max_param is not None:
        # tolerance so that e.g. 14 / 0.2 counts as 70 steps
        by_param = max(int(math.floor((stop.max_param - start) / h + 1e-9)), 0)
        if by_param <= limit:
            limit, reason = by_param, TerminationReason.PARAMETER_BOUND
    return limit, reason


def integrate(sys: OdeSystem, h: float, stop: Optional[StopRule] = None) -> Trajectory:
    """Apply :func:`rk4_step` until a stop condition fires.

    Parameter values are ``start + k*h`` for k = 0..steps. A failing right-hand side
    ends the run with reason RHS_ERROR and the partial trajectory.

    Raises:
        IntegrationError: the right-hand side failed before any step completed
    """
    if not h > 0.0:
        raise ConfigurationError(f"step must be positive, got {h!r}")
    stop = stop or StopRule()
    started = time.perf_counter()
    limit, limit_reason = _step_limit(sys.start, h, stop)
    x_index = sys.x_index
    eps_stop = stop.eps_stop

    params = array("d", [sys.start])
    columns = [array("d", [v]) for v in sys.initial]
    state = sys.initial
    steps = 0
    error = None

    while True:
        if steps >= limit:
            reason = limit_reason
            break
        p = sys.start + steps * h
        try:
            k1 = sys.derivative(p, state)
            if abs(k1[x_index]) < eps_stop:
                reason = TerminationReason.DERIVATIVE_DECAY
                break
            new_state = rk4_step(sys, p, state, h, k1)
            if not all(math.isfinite(v) for v in new_state):
                raise EvaluationError(
                    f"non-finite state after step from {sys.parameter_name}={p!r}"
                )
        except ConfigurationError:
            raise
        except _RHS_FAILURES as exc:
            if steps == 0:
                raise IntegrationError(
                    f"right-hand side failed at the initial point: {exc}"
                ) from exc
            reason, error = TerminationReason.RHS_ERROR, str(exc)
            break
        steps += 1
        params.append(sys.start + steps * h)
        for column, value in zip(columns, new_state):
            column.append(value)
        state = new_state

    trajectory = Trajectory(
        names=sys.names,
        parameter_name=sys.parameter_name,
        params=np.frombuffer(params, dtype=np.float64),
        states=np.column_stack([np.frombuffer(c, dtype=np.float64) for c in columns]),
        reason=reason,
        step=h,
        error=error,
        elapsed=time.perf_counter() - started,
    )
    logger.info(
        "integration.finished",
        parameter=sys.parameter_name,
        steps=steps,
        final_param=trajectory.final_param,
        reason=translate_code(reason),
        error=error,
        elapsed=round(trajectory.elapsed, 6),
    )
    return trajectory
