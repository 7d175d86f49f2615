"""End-to-end runs on the worked examples at the classical setup (RK4, h = 0.2)."""

import math

import numpy as np
import pytest

from blowup_solver.cli.main import Side, compare_methods, solve, sweep_steps
from blowup_solver.config import ProblemSource, RunConfig
from blowup_solver.core.blowup import characterize, estimate_x_star
from blowup_solver.core.codes import EstimateMethod, TerminationReason, TransformKind
from blowup_solver.core.odecore import StopRule, integrate
from blowup_solver.core.problems import get_problem


def run(identifier, method=None, param_max=None, a=1.0, p=2.0, step=0.2, **kwargs):
    flag = None
    if param_max is not None:
        flag = "t" if method == TransformKind.DIFFERENTIAL else "xi"
    cfg = RunConfig(
        source=ProblemSource(problem_id=identifier, a=a, p=p),
        method=method,
        step=step,
        param_max=param_max,
        param_flag=flag,
        **kwargs,
    )
    return solve(cfg)


class TestDifferentialFirstOrder:
    """y' = y^2, y(0) = 1 through t = y'."""

    def test_blowup_point(self):
        """t up to 10^4: x* within 1e-3 of 1/a, and a first-order pole."""
        result = run("ex1", TransformKind.DIFFERENTIAL, 1e4)
        assert result.trajectory.reason == TerminationReason.PARAMETER_BOUND
        assert result.estimate.method == EstimateMethod.AITKEN_LOG
        assert abs(result.estimate.x_star - 1.0) <= 1e-3
        assert result.estimate.beta == pytest.approx(1.0, abs=2e-2)

    @pytest.mark.slow
    def test_blowup_point_long_run(self):
        """The full run to t = 10^6."""
        system = get_problem("ex1").transform(TransformKind.DIFFERENTIAL)
        traj = integrate(system.system, 0.2, StopRule(max_param=1e6, eps_stop=0.0))
        assert traj.final_param == pytest.approx(1e6)
        assert abs(estimate_x_star(traj).x_star - 1.0) <= 1e-3

    def test_scaled_initial_value(self):
        """a = 2 moves the pole to 1/2."""
        result = run("ex1", TransformKind.DIFFERENTIAL, 1e4, a=2.0)
        assert abs(result.estimate.x_star - 0.5) <= 1e-3


class TestNonlocalFirstOrder:
    """The same problem with g = f/y, xi up to 14."""

    def test_blowup_point(self):
        """Exponential approach: x* to 1e-4 with a tight uncertainty."""
        result = run("ex2-form", param_max=14.0)
        assert result.trajectory.steps == 70
        assert result.estimate.method == EstimateMethod.AITKEN
        assert abs(result.estimate.x_star - 1.0) <= 1e-4
        assert result.estimate.uncertainty <= 1e-5

    def test_tracks_exponential(self, ex2_nonlocal_run):
        """y(xi) = e^xi through xi = 2."""
        _, traj = ex2_nonlocal_run
        early = traj.params <= 2.0 + 1e-12
        np.testing.assert_allclose(traj.y[early], np.exp(traj.params[early]), rtol=1e-4)

    def test_characterization(self, ex2_nonlocal_run):
        """A = 1 and beta = 1 for the first-order pole."""
        _, traj = ex2_nonlocal_run
        estimate = characterize(traj)
        assert estimate.A == pytest.approx(1.0, abs=2e-2)
        assert estimate.beta == pytest.approx(1.0, abs=2e-2)


class TestEffectiveness:
    """Equal step budgets: the non-local x ends closer to x*."""

    @pytest.mark.parametrize("identifier", ["ex1", "ex3"])
    def test_nonlocal_closer(self, identifier):
        """100 steps at h = 0.2 on each side."""
        tp = get_problem(identifier)
        sides = [
            Side("differential", TransformKind.DIFFERENTIAL),
            Side("nonlocal", TransformKind.NONLOCAL, tp.g),
        ]
        _, summary = compare_methods(tp.problem, sides, h=0.2, steps=100, exact=tp)
        assert summary["nonlocal"]["final_error"] < summary["differential"]["final_error"]


class TestSecondOrder:
    """y'' = 2y^3, y(0) = y'(0) = 1."""

    @pytest.mark.parametrize("method", [TransformKind.DIFFERENTIAL, TransformKind.NONLOCAL])
    def test_blowup_point_in_100_steps(self, method):
        """Both transforms land within 2e-2 of x* = 1."""
        result = run("ex3", method, max_steps=100, eps_stop=0.0)
        assert result.trajectory.steps == 100
        assert abs(result.estimate.x_star - 1.0) <= 2e-2

    def test_nonlocal_large_g_is_not_singular(self):
        """ex4-form keeps all 100 steps while f = 2y^3 outgrows g = t/y."""
        result = run("ex4-form", max_steps=100, eps_stop=0.0)
        traj = result.trajectory
        assert traj.steps == 100
        assert traj.reason == TerminationReason.STEP_BUDGET
        assert traj.params[-1] == pytest.approx(20.0)

    def test_nonlocal_runs_to_derivative_decay(self):
        """With the default eps_stop the run ends on |x'| < 1e-8, near xi = 18.4."""
        result = run("ex4-form")
        assert result.trajectory.reason == TerminationReason.DERIVATIVE_DECAY
        assert 18.0 <= result.trajectory.params[-1] <= 19.0
        assert abs(result.estimate.x_star - 1.0) <= 1e-3

    def test_nonlocal_closed_form(self):
        """(1 - e^-xi, e^xi, e^2xi) through xi = 2."""
        result = run("ex4-form", param_max=2.0)
        traj = result.trajectory
        xi = traj.params
        np.testing.assert_allclose(traj.component("x"), 1.0 - np.exp(-xi), atol=1e-4)
        np.testing.assert_allclose(traj.y, np.exp(xi), rtol=1e-4)
        np.testing.assert_allclose(traj.component("t"), np.exp(2.0 * xi), rtol=1e-3)


class TestRk4Order:
    """Empirical order against the closed form."""

    def test_nonlocal_sweep(self):
        """h in {0.2, 0.1, 0.05} to xi = 2."""
        tp = get_problem("ex2-form")
        rows = sweep_steps(tp, TransformKind.NONLOCAL, [0.2, 0.1, 0.05], max_param=2.0)
        assert [r["steps"] for r in rows] == [10, 20, 40]
        for row in rows[1:]:
            assert row["order"] == pytest.approx(4.0, abs=0.3)


class TestPowerFamily:
    """y' = y^p: beta = 1/(p - 1)."""

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_exponent(self, p):
        """Non-local run to xi = 8/(p - 1) at h = 0.05; beta within 2%."""
        tp = get_problem("power", 1.0, p)
        result = run("power", p=p, step=0.05, param_max=8.0 / (p - 1.0))
        assert result.estimate.x_star == pytest.approx(tp.x_star, rel=1e-4)
        assert result.estimate.beta == pytest.approx(tp.beta, rel=2e-2)
        assert result.estimate.A == pytest.approx(tp.amplitude, rel=2e-2)

    def test_exponent_formula(self):
        """The exact exponents themselves."""
        assert [get_problem("power", 1.0, p).beta for p in (1.5, 2.0, 3.0)] == [2.0, 1.0, 0.5]
        assert math.isclose(get_problem("power", 1.0, 3.0).x_star, 0.5)
