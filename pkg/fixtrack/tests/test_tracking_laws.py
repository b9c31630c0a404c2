# fixtrack/tests/test_tracking_laws.py

import numpy as np
import pytest

from fixtrack.core.exceptions import BarrierDomainError, ContractViolation, DomainError
from fixtrack.core.fixed_time_law import psi_vec_regularized
from fixtrack.core.problem_model import feasibility_margin, relaxed_derivatives
from fixtrack.core.tracking_laws import (
    CoupledState, CoupledSystem, TrackingConfig, TrackingLaw, coupled_rhs, ec_udot, fc_udot,
    gradient_trajectory_closed_form, initial_gradient, law_udot, validate_initial_control,
)


def _gradient_rate(problem, s, udot, h=1e-6):
    """Central difference of grad_u J~ along (x', u', 1)."""
    xdot = problem.plant.state_derivative(s.x, s.u)
    ahead = relaxed_derivatives(problem, s.u + h * udot, s.x + h * xdot, s.t + h).grad_u
    behind = relaxed_derivatives(problem, s.u - h * udot, s.x - h * xdot, s.t - h).grad_u
    return (ahead - behind) / (2 * h)


class TestTrackingConfig:
    def test_defaults(self):
        config = TrackingConfig()
        assert config.law is TrackingLaw.FC
        assert config.tau == 3.0
        np.testing.assert_array_equal(config.gain_matrix(2), np.eye(2))
        assert config.ec_alpha(2) == 1.0

    def test_law_from_string(self):
        assert TrackingConfig(law='EC').law is TrackingLaw.EC
        with pytest.raises(ValueError):
            TrackingConfig(law='pid')

    @pytest.mark.parametrize("tau", [0.0, -1.0, float('inf')])
    def test_rejects_bad_tau_for_fc(self, tau):
        with pytest.raises(DomainError):
            TrackingConfig(law='fc', tau=tau)

    def test_gain_must_be_positive_definite(self):
        with pytest.raises(DomainError):
            TrackingConfig(law='ec', ec_gain=np.diag([1.0, -1.0]))
        with pytest.raises(DomainError):
            TrackingConfig(law='ec', ec_gain=np.array([[1.0, 0.5], [0.0, 1.0]]))
        with pytest.raises(ContractViolation):
            TrackingConfig(law='ec', ec_gain=np.ones((2, 3)))

    def test_gain_dimension_checked_against_problem(self):
        config = TrackingConfig(law='ec', ec_gain=np.diag([2.0, 5.0]))
        assert config.ec_alpha(2) == pytest.approx(2.0)
        with pytest.raises(ContractViolation):
            config.gain_matrix(3)

    def test_deadband_must_be_positive(self):
        with pytest.raises(DomainError):
            TrackingConfig(deadband_eps=0.0)


class TestGradientDynamics:
    """Along the closed loop the gradient obeys d/dt grad = -C(grad)."""

    def test_fc_identity_at_x0(self, case_problem, fc_tracking, case_x0, case_u0):
        s = CoupledState(case_x0, case_u0, 0.0)
        udot = fc_udot(case_problem, fc_tracking, s)
        d = relaxed_derivatives(case_problem, s.u, s.x, s.t)
        xdot = case_problem.plant.state_derivative(s.x, s.u)
        rate = d.hess_uu @ udot + d.mixed_ux @ xdot + d.mixed_ut
        np.testing.assert_allclose(rate, -psi_vec_regularized(d.grad_u, fc_tracking.tau), rtol=1e-10)

    def test_fc_rate_by_finite_differences(self, case_problem, fc_tracking, random_feasible_points):
        deep = [(u, x) for u, x in random_feasible_points if feasibility_margin(case_problem, u, x) < -0.5]
        for u, x in deep[:20]:
            s = CoupledState(x, u, 0.4)
            udot = fc_udot(case_problem, fc_tracking, s)
            grad = relaxed_derivatives(case_problem, u, x, 0.4).grad_u
            expected = -psi_vec_regularized(grad, fc_tracking.tau)
            np.testing.assert_allclose(_gradient_rate(case_problem, s, udot), expected,
                                       rtol=1e-4, atol=1e-4 * max(1.0, np.abs(expected).max()))

    def test_ec_identity(self, case_problem, case_x0, case_u0):
        gain = np.diag([2.0, 0.5])
        config = TrackingConfig(law='ec', ec_gain=gain)
        s = CoupledState(case_x0, case_u0, 0.0)
        udot = ec_udot(case_problem, config, s)
        d = relaxed_derivatives(case_problem, s.u, s.x, s.t)
        xdot = case_problem.plant.state_derivative(s.x, s.u)
        rate = d.hess_uu @ udot + d.mixed_ux @ xdot + d.mixed_ut
        np.testing.assert_allclose(rate, -gain @ d.grad_u, rtol=1e-10)

    def test_law_udot_follows_config(self, case_problem, case_x0, case_u0):
        s = CoupledState(case_x0, case_u0, 0.0)
        fc = TrackingConfig(law='fc', tau=3.0)
        ec = TrackingConfig(law='ec')
        np.testing.assert_array_equal(law_udot(case_problem, fc, s), fc_udot(case_problem, fc, s))
        np.testing.assert_array_equal(law_udot(case_problem, ec, s), ec_udot(case_problem, ec, s))

    def test_fc_and_ec_differ(self, case_problem, case_x0, case_u0):
        s = CoupledState(case_x0, case_u0, 0.0)
        fc = fc_udot(case_problem, TrackingConfig(law='fc'), s)
        ec = ec_udot(case_problem, TrackingConfig(law='ec'), s)
        assert not np.allclose(fc, ec)

    def test_scalar_plant(self, scalar_problem):
        config = TrackingConfig(law='fc', tau=1.0)
        s = CoupledState(np.array([2.0]), np.array([-4.0]), 0.0)
        udot = fc_udot(scalar_problem, config, s)
        grad = relaxed_derivatives(scalar_problem, s.u, s.x, s.t).grad_u
        np.testing.assert_allclose(_gradient_rate(scalar_problem, s, udot),
                                   -psi_vec_regularized(grad, 1.0), rtol=1e-4)


class TestCoupledSystem:
    def test_rhs_stacks_plant_and_controller(self, case_problem, fc_tracking, case_x0, case_u0):
        s = CoupledState(case_x0, case_u0, 0.0)
        rhs = coupled_rhs(case_problem, fc_tracking, s)
        np.testing.assert_allclose(rhs[:3], [-40.0, 114.0, -37.0])
        np.testing.assert_allclose(rhs[3:], fc_udot(case_problem, fc_tracking, s))

    def test_evaluations_counted(self, case_problem, fc_tracking, case_x0, case_u0):
        system = CoupledSystem(case_problem, fc_tracking)
        y = np.concatenate([case_x0, case_u0])
        system.rhs(0.0, y)
        system.rhs(0.1, y)
        assert system.evaluations == 2
        assert system.dimension == 5

    def test_margin(self, case_problem, fc_tracking, case_x0, case_u0):
        system = CoupledSystem(case_problem, fc_tracking)
        assert system.margin(0.0, np.concatenate([case_x0, case_u0])) == pytest.approx(-237.51)
        assert system.margin(0.0, np.array([np.nan, 0, 0, 0, 0])) == np.inf

    def test_state_round_trip(self, case_x0, case_u0):
        s = CoupledState.from_vector(np.concatenate([case_x0, case_u0]), 3, t=1.5)
        np.testing.assert_array_equal(s.x, case_x0)
        np.testing.assert_array_equal(s.u, case_u0)
        assert s.t == 1.5

    def test_infeasible_state_raises(self, case_problem, fc_tracking, case_x0):
        with pytest.raises(BarrierDomainError):
            coupled_rhs(case_problem, fc_tracking, CoupledState(case_x0, np.array([-100.0, -100.0])))


class TestInitialValues:
    def test_initial_gradient(self, case_problem, case_x0, case_u0):
        zeta0 = initial_gradient(case_problem, case_x0, case_u0)
        assert np.linalg.norm(zeta0) == pytest.approx(26.4, abs=0.01)

    def test_validate_initial_control(self, case_problem, case_x0, case_u0):
        assert validate_initial_control(case_problem, case_x0, case_u0) == pytest.approx(-237.51)
        with pytest.raises(BarrierDomainError):
            validate_initial_control(case_problem, case_x0, np.array([-100.0, -100.0]))

    def test_closed_form_trajectory(self):
        zeta0 = np.array([16.0, 21.0])
        np.testing.assert_array_equal(gradient_trajectory_closed_form(zeta0, 3.0, 0.0), zeta0)
        np.testing.assert_array_equal(gradient_trajectory_closed_form(zeta0, 3.0, 3.0), [0.0, 0.0])
        mid = gradient_trajectory_closed_form(zeta0, 3.0, 1.0)
        assert np.all((mid > 0) & (mid < zeta0))
