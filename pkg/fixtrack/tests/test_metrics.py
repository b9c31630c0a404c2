# fixtrack/tests/test_metrics.py

import math

import numpy as np
import pandas as pd
import pytest

from fixtrack.core.exceptions import ContractViolation
from fixtrack.core.integrator import integrate
from fixtrack.core.metrics import (
    DEFAULT_TOL_SETTLE, compute_summary_metrics, metrics_from_frame, summary_from_csv,
)


def make_frame(grad_norm, dt=0.5, margin=-1.0):
    times = np.arange(len(grad_norm)) * dt
    return pd.DataFrame({
        't': times,
        'x1': np.linspace(3.0, 0.0, len(grad_norm)),
        'x2': np.linspace(4.0, 0.0, len(grad_norm)),
        'u1': 0.0,
        'err': np.asarray(grad_norm) / 2,
        'phi_minus_gamma': margin,
        'grad_norm': grad_norm,
        'cost': np.linspace(10.0, 1.0, len(grad_norm)),
    })


class TestMetricsFromFrame:
    def test_values_at_tau(self):
        metrics = metrics_from_frame(make_frame([4.0, 2.0, 1e-6, 0.0, 0.0]), tau=1.0)
        assert metrics.err_at_tau == pytest.approx(5e-7)
        assert metrics.grad_norm_at_tau == 1e-6
        assert metrics.max_grad_norm_after_tau == 1e-6
        assert metrics.settle_time_measured == 1.0
        assert metrics.settled_by_tau
        assert metrics.final_state_norm == 0.0
        assert metrics.final_cost == 1.0
        assert metrics.tol_settle == DEFAULT_TOL_SETTLE

    def test_settle_after_tau(self):
        metrics = metrics_from_frame(make_frame([4.0, 2.0, 1.0, 0.5, 0.0]), tau=1.0)
        assert metrics.settle_time_measured == 2.0
        assert not metrics.settled_by_tau

    def test_never_settles(self):
        metrics = metrics_from_frame(make_frame([4.0, 2.0, 1.0]), tau=0.5)
        assert math.isnan(metrics.settle_time_measured)
        assert not metrics.settled_by_tau

    def test_settled_from_start(self):
        metrics = metrics_from_frame(make_frame([0.0, 0.0]), tau=0.5)
        assert metrics.settle_time_measured == 0.0

    def test_tau_beyond_horizon(self):
        metrics = metrics_from_frame(make_frame([4.0, 2.0]), tau=10.0)
        assert math.isnan(metrics.err_at_tau)
        assert math.isnan(metrics.max_grad_norm_after_tau)

    def test_feasibility(self):
        assert metrics_from_frame(make_frame([1.0, 0.0]), tau=0.5).feasible
        assert not metrics_from_frame(make_frame([1.0, 0.0], margin=0.0), tau=0.5).feasible

    def test_as_dict_keys(self):
        data = metrics_from_frame(make_frame([1.0, 0.0]), tau=0.5).as_dict()
        assert list(data)[:3] == ['tau', 'tol_settle', 'err_at_tau']
        assert data['dt_tightened'] is False

    def test_empty_table(self):
        with pytest.raises(ContractViolation):
            metrics_from_frame(make_frame([]), tau=1.0)

    def test_header_only_csv(self, temp_dir):
        path = temp_dir / 'empty.csv'
        make_frame([]).to_csv(path, index=False)
        with pytest.raises(ContractViolation):
            summary_from_csv(path, tau=1.0)


class TestTrajectoryMetrics:
    def test_from_trajectory(self, case_problem, fc_tracking, short_integrator, case_x0, case_u0):
        trajectory = integrate(case_problem, fc_tracking, short_integrator, case_x0, case_u0)
        metrics = compute_summary_metrics(trajectory, tau=0.3, dt_tightened=True)
        assert metrics.accepted_steps == trajectory.metadata['step_statistics']['accepted_steps']
        assert metrics.dt_tightened
        assert metrics.feasible
        assert metrics.grad_norm_at_tau == pytest.approx(trajectory.records[3].grad_norm)

    def test_csv_recomputation_matches(self, temp_dir, case_problem, fc_tracking, short_integrator,
                                       case_x0, case_u0):
        from fixtrack.core.services.output_writer import emit_csv

        trajectory = integrate(case_problem, fc_tracking, short_integrator, case_x0, case_u0)
        path = emit_csv(trajectory, temp_dir / 'run.csv')
        in_memory = compute_summary_metrics(trajectory, tau=0.3)
        from_disk = summary_from_csv(path, tau=0.3)
        for key in ('err_at_tau', 'grad_norm_at_tau', 'max_phi_minus_gamma', 'final_state_norm',
                    'final_cost', 'settle_time_measured'):
            a, b = getattr(in_memory, key), getattr(from_disk, key)
            assert (math.isnan(a) and math.isnan(b)) or a == pytest.approx(b, rel=1e-14)
