"""Tests for the fixed-step RK4 integrator and its stop rules."""

import math

import numpy as np
import pytest

from blowup_solver.core.codes import TerminationReason
from blowup_solver.core.errors import ConfigurationError, IntegrationError
from blowup_solver.core.odecore import OdeSystem, StopRule, integrate, rk4_step


def exponential(start=0.0, value=1.0):
    """x' = x."""
    return OdeSystem(("x",), lambda p, u: (u[0],), start, (value,))


class TestRk4Step:
    """Test a single step."""

    def test_matches_taylor_polynomial(self):
        """On x' = x one step is the degree-4 Taylor polynomial of exp(h)."""
        h = 0.1
        (value,) = rk4_step(exponential(), 0.0, (1.0,), h)
        assert value == pytest.approx(1 + h + h**2 / 2 + h**3 / 6 + h**4 / 24, rel=1e-15)

    def test_rejects_non_positive_step(self):
        """The step must be positive."""
        with pytest.raises(ConfigurationError):
            rk4_step(exponential(), 0.0, (1.0,), 0.0)

    def test_fourth_order(self):
        """Halving h divides the error at p = 1 by about 16."""
        errors = []
        for h in (0.1, 0.05):
            traj = integrate(exponential(), h, StopRule(max_param=1.0, eps_stop=0.0))
            errors.append(abs(traj.x[-1] - math.e))
        assert 14.0 < errors[0] / errors[1] < 18.0


class TestStopRules:
    """Each stop condition and the reason it reports."""

    def test_parameter_bound(self):
        """max_param 14 with h = 0.2 takes exactly 70 steps."""
        traj = integrate(exponential(), 0.2, StopRule(max_param=14.0, eps_stop=0.0))
        assert traj.steps == 70
        assert traj.reason == TerminationReason.PARAMETER_BOUND
        assert traj.final_param == pytest.approx(14.0)
        np.testing.assert_allclose(traj.params, 0.2 * np.arange(71))

    def test_parameters_offset_by_start(self):
        """Parameters are start + k*h."""
        traj = integrate(exponential(start=1.0), 0.5, StopRule(max_param=3.0))
        np.testing.assert_allclose(traj.params, [1.0, 1.5, 2.0, 2.5, 3.0])

    def test_step_budget(self):
        """max_steps wins when it is reached first."""
        traj = integrate(exponential(), 0.1, StopRule(max_steps=5, max_param=100.0))
        assert traj.steps == 5
        assert traj.reason == TerminationReason.STEP_BUDGET

    def test_derivative_decay(self):
        """x' = exp(-p) stops once |x'| < eps_stop at the start of a step."""
        system = OdeSystem(("x",), lambda p, u: (math.exp(-p),), 0.0, (0.0,))
        traj = integrate(system, 0.1, StopRule(eps_stop=1e-3))
        assert traj.reason == TerminationReason.DERIVATIVE_DECAY
        assert traj.steps == 70
        assert traj.x[-1] == pytest.approx(1.0 - math.exp(-7.0), rel=1e-6)

    def test_decay_watches_x_component(self):
        """Only the x component's derivative counts."""
        system = OdeSystem(
            ("y", "x"), lambda p, u: (1.0, math.exp(-p)), 0.0, (0.0, 0.0), parameter_name="t"
        )
        traj = integrate(system, 0.1, StopRule(eps_stop=1e-3, max_param=100.0))
        assert traj.reason == TerminationReason.DERIVATIVE_DECAY
        assert traj.y[-1] == pytest.approx(traj.final_param)


class TestFailures:
    """Right-hand side failures end the run or raise."""

    def test_rhs_error_keeps_partial_trajectory(self):
        """A failure after the first step returns the samples so far."""

        def rhs(p, u):
            if p > 0.6:
                raise ArithmeticError("outside the model")
            return (1.0,)

        traj = integrate(OdeSystem(("x",), rhs, 0.0, (0.0,)), 0.25, StopRule(max_param=2.0))
        assert traj.reason == TerminationReason.RHS_ERROR
        assert traj.steps == 2
        assert "outside the model" in traj.error

    def test_non_finite_state_is_an_rhs_error(self):
        """Past the pole of x' = x^2 the numeric state overflows."""
        system = OdeSystem(("x",), lambda p, u: (u[0] * u[0],), 0.0, (1.0,))
        traj = integrate(system, 0.1, StopRule(max_param=5.0, eps_stop=0.0))
        assert traj.reason == TerminationReason.RHS_ERROR
        assert np.all(np.isfinite(traj.states))

    def test_failure_at_first_point_raises(self):
        """Nothing to return when the initial point already fails."""

        def rhs(p, u):
            raise ZeroDivisionError("division by zero")

        with pytest.raises(IntegrationError, match="initial point"):
            integrate(OdeSystem(("x",), rhs, 0.0, (0.0,)), 0.1)

    def test_wrong_dimension_propagates(self):
        """A right-hand side of the wrong length is a configuration error."""
        system = OdeSystem(("x",), lambda p, u: (1.0, 2.0), 0.0, (0.0,))
        with pytest.raises(ConfigurationError):
            integrate(system, 0.1, StopRule(max_steps=3))


class TestConfiguration:
    """Invalid systems and stop rules."""

    @pytest.mark.parametrize(
        "kwargs",
        [{"max_steps": 0}, {"max_param": float("inf")}, {"eps_stop": -1.0}],
    )
    def test_bad_stop_rule(self, kwargs):
        """Stop rules validate on construction."""
        with pytest.raises(ConfigurationError):
            StopRule(**kwargs)

    def test_bad_system(self):
        """Names and initial state must agree."""
        with pytest.raises(ConfigurationError):
            OdeSystem(("x", "y"), lambda p, u: u, 0.0, (1.0,))
        with pytest.raises(ConfigurationError):
            OdeSystem(("x", "x"), lambda p, u: u, 0.0, (1.0, 2.0))
        with pytest.raises(ConfigurationError):
            OdeSystem(("x",), lambda p, u: u, 0.0, (float("nan"),))

    def test_bad_step(self):
        """integrate rejects h <= 0."""
        with pytest.raises(ConfigurationError):
            integrate(exponential(), -0.1)

    def test_unknown_component(self):
        """Asking for a missing component names the available ones."""
        traj = integrate(exponential(), 0.1, StopRule(max_steps=2))
        with pytest.raises(KeyError, match="no component 'y'"):
            traj.component("y")
