# fixtrack/tests/test_case_study_run.py

"""
Properties of one full FC run of the case study (tau = 3, t_end = 6,
samples every 0.01 s). The run is integrated once per module.
"""

from dataclasses import dataclass

import numpy as np
import pytest

from fixtrack.core.built_ins.scenarios import (
    build_problem, build_tracking_config, resolve_initial_values,
)
from fixtrack.core.fixed_time_law import psi
from fixtrack.core.integrator import IntegratorConfig, Trajectory, integrate
from fixtrack.core.oracle_solver import brute_force_ustar, final_grid_resolution, tracking_error
from fixtrack.core.problem_model import (
    RelaxedProblem, grad_u_relaxed, hess_uu_relaxed, phi, relaxed_cost,
)
from fixtrack.core.run_config import ScenarioConfig
from fixtrack.core.tracking_laws import gradient_trajectory_closed_form, initial_gradient

pytestmark = pytest.mark.slow

TAU = 3.0
SAMPLE_DT = 1e-2


@dataclass
class CaseRun:
    problem: RelaxedProblem
    trajectory: Trajectory
    x0: np.ndarray
    zeta0: np.ndarray

    def predicted_gradient_norm(self, t: float) -> float:
        return float(np.linalg.norm(gradient_trajectory_closed_form(self.zeta0, TAU, t)))


@pytest.fixture(scope='module')
def fc_run():
    cfg = ScenarioConfig(scenario='case_study', tau=TAU,
                         integrator=IntegratorConfig(dt=1e-3, sample_dt=SAMPLE_DT, t_end=6.0))
    problem = build_problem(cfg)
    x0, u0 = resolve_initial_values(cfg, problem)
    trajectory = integrate(problem, build_tracking_config(cfg), cfg.integrator, x0, u0,
                           oracle_config=cfg.oracle)
    return CaseRun(problem, trajectory, x0, initial_gradient(problem, x0, u0))


def five_point_rate(values: np.ndarray, k: int, h: float) -> float:
    return (-values[k + 2] + 8 * values[k + 1] - 8 * values[k - 1] + values[k - 2]) / (12 * h)


class TestFixedTimeConvergence:
    def test_sample_grid(self, fc_run):
        assert len(fc_run.trajectory) == 601
        np.testing.assert_array_equal(fc_run.trajectory.records[0].grad, fc_run.zeta0)

    def test_settled_from_tau_on(self, fc_run):
        after = [r for r in fc_run.trajectory.records if r.t >= TAU - 1e-9]
        assert len(after) == 301
        for r in after:
            assert r.grad_norm <= 1e-4, r.t
            assert r.err <= 1e-3, r.t

    def test_feasible_everywhere(self, fc_run):
        assert all(r.phi_minus_gamma < 0 for r in fc_run.trajectory.records)
        assert fc_run.trajectory.metadata['step_statistics']['guard_rejections'] == 0

    def test_state_stabilized(self, fc_run):
        final = fc_run.trajectory.records[-1].x
        assert np.linalg.norm(final) < 0.05 * np.linalg.norm(fc_run.x0)

    def test_lyapunov_nonincreasing_while_constraint_holds(self, fc_run):
        problem = fc_run.problem
        records = fc_run.trajectory.records
        checked = 0
        for a, b in zip(records, records[1:]):
            if phi(problem, a.u, a.x) <= 0 and phi(problem, b.u, b.x) <= 0:
                assert problem.lyap.V(b.x) <= problem.lyap.V(a.x) + 1e-12, b.t
                checked += 1
        assert checked > 10


class TestGradientDynamics:
    def test_gradient_norm_follows_closed_form(self, fc_run):
        for r in fc_run.trajectory.records:
            assert abs(r.grad_norm - fc_run.predicted_gradient_norm(r.t)) <= 1e-3, r.t

    def test_gradient_rate_is_minus_psi(self, fc_run):
        grads = fc_run.trajectory.gradients()
        checked = 0
        for k in range(2, len(grads) - 2):
            for i in range(grads.shape[1]):
                window = grads[k - 2:k + 3, i]
                if np.min(np.abs(window)) < 1e-3:
                    continue
                expected = -psi(grads[k, i], TAU)
                assert five_point_rate(grads[:, i], k, SAMPLE_DT) == pytest.approx(expected, rel=1e-3)
                checked += 1
        assert checked > 200


class TestErrorBounds:
    def test_tracking_error_bound(self, fc_run):
        m_J = fc_run.problem.m_J
        for r in fc_run.trajectory.records:
            bound = fc_run.predicted_gradient_norm(r.t) / m_J
            assert r.err <= bound + 1e-6, r.t

    def test_suboptimality_bound(self, fc_run):
        problem = fc_run.problem
        for r in fc_run.trajectory.records:
            gap = r.cost - relaxed_cost(problem, r.u_star, r.x, r.t)
            bound = fc_run.predicted_gradient_norm(r.t) ** 2 / problem.m_J
            assert -1e-10 <= gap <= bound + 1e-6, r.t

    def test_hessian_bounded_below(self, fc_run):
        problem = fc_run.problem
        for r in fc_run.trajectory.records:
            smallest = np.linalg.eigvalsh(hess_uu_relaxed(problem, r.u, r.x, r.t))[0]
            assert smallest >= problem.m_J - 1e-9, r.t


class TestOracleAlongRun:
    def test_first_order_optimality(self, fc_run):
        problem = fc_run.problem
        for r in fc_run.trajectory.records:
            assert np.linalg.norm(grad_u_relaxed(problem, r.u_star, r.x, r.t)) <= 1e-10, r.t

    def test_newton_agrees_with_brute_force(self, fc_run):
        problem = fc_run.problem
        points = fc_run.trajectory.records[::12][:50]
        assert len(points) == 50
        for r in points:
            grid = brute_force_ustar(problem, r.x, r.t)
            assert tracking_error(grid, r.u_star) <= 2 * final_grid_resolution(problem, r.x), r.t
