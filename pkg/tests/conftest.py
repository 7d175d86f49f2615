"""Shared fixtures for the blow-up solver test-suite."""

import logging

import numpy as np
import pytest
import structlog

from blowup_solver.core.codes import TerminationReason, TransformKind
from blowup_solver.core.odecore import StopRule, Trajectory, integrate
from blowup_solver.core.problems import get_problem


@pytest.fixture(autouse=True)
def _reset_logging():
    """Undo the handlers installed by the CLI so later tests start clean."""
    yield
    structlog.reset_defaults()
    logging.getLogger().handlers.clear()


@pytest.fixture
def make_trajectory():
    """Build a Trajectory from plain x (and optionally y, params) samples."""

    def _make(x, y=None, params=None, step=0.2, reason=TerminationReason.PARAMETER_BOUND):
        x = np.asarray(x, dtype=float)
        y = np.ones_like(x) if y is None else np.asarray(y, dtype=float)
        params = step * np.arange(len(x)) if params is None else np.asarray(params, dtype=float)
        return Trajectory(
            names=("x", "y"),
            parameter_name="p",
            params=params,
            states=np.column_stack([x, y]),
            reason=reason,
            step=step,
        )

    return _make


@pytest.fixture(scope="session")
def ex1():
    return get_problem("ex1", 1.0)


@pytest.fixture(scope="session")
def ex1_differential_run(ex1):
    """ex1 through the differential transform, h = 0.2, up to t = 10^4."""
    system = ex1.transform(TransformKind.DIFFERENTIAL)
    return system, integrate(system.system, 0.2, StopRule(max_param=1e4))


@pytest.fixture(scope="session")
def ex2_nonlocal_run():
    """ex1 through the non-local transform with g = f/y, h = 0.2, up to xi = 14."""
    tp = get_problem("ex2-form", 1.0)
    system = tp.transform()
    return system, integrate(system.system, 0.2, StopRule(max_param=14.0))
