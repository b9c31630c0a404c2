# fixtrack/tests/test_selftest.py

import pytest

from fixtrack.core.problem_model import feasibility_margin
from fixtrack.core.selftest import (
    CLOSED_FORM_CASES, SELFTEST_CHECKS, CheckResult, SelftestReport, check_analytic_vs_fd,
    check_dual_vs_analytic, check_fixed_time_closed_form, check_gradient_trajectory,
    check_strong_convexity, run_selftest, sample_feasible_points,
)


class TestChecks:
    def test_fixed_time_closed_form(self):
        result = check_fixed_time_closed_form(cases=((-10.0, 1.0), (0.1, 0.5)))
        assert result.tolerance == 1e-6
        assert result.passed, result.detail

    @pytest.mark.slow
    def test_fixed_time_closed_form_full_grid(self):
        assert len(CLOSED_FORM_CASES) == 32
        result = check_fixed_time_closed_form()
        assert result.passed, result.detail
        assert result.max_error <= 1e-6

    def test_fixed_time_closed_form_reports_excess(self):
        result = check_fixed_time_closed_form(cases=((1.0, 1.0),), tolerance=1e-300)
        assert not result.passed
        assert result.detail.startswith('z0=1, tau=1')

    def test_analytic_vs_fd(self):
        result = check_analytic_vs_fd(samples=10)
        assert result.passed, result.max_error

    def test_dual_vs_analytic(self):
        result = check_dual_vs_analytic(samples=10)
        assert result.passed, result.max_error

    def test_strong_convexity(self):
        result = check_strong_convexity(samples=50)
        assert result.passed
        assert 'm_J = 1' in result.detail

    @pytest.mark.slow
    def test_gradient_trajectory(self):
        result = check_gradient_trajectory()
        assert result.passed, result.detail

    def test_sample_points_are_feasible_and_reproducible(self, case_problem):
        first = sample_feasible_points(case_problem, 20)
        second = sample_feasible_points(case_problem, 20)
        assert len(first) == 20
        for (u, x, t), (u2, x2, t2) in zip(first, second):
            assert feasibility_margin(case_problem, u, x) <= -1e-2
            assert (u == u2).all() and (x == x2).all() and t == t2
            assert 0.0 <= t <= 6.0


class TestRunSelftest:
    def test_selected_checks(self):
        report = run_selftest(['strong_convexity', 'dual_vs_analytic'])
        assert [c.name for c in report.checks] == ['strong_convexity', 'dual_vs_analytic']
        assert report.passed
        assert all(c.duration > 0 for c in report.checks)

    def test_unknown_check(self):
        with pytest.raises(ValueError):
            run_selftest(['nonsense'])

    def test_registry(self):
        assert set(SELFTEST_CHECKS) == {
            'fixed_time_closed_form', 'gradient_trajectory', 'analytic_vs_fd',
            'dual_vs_analytic', 'strong_convexity',
        }


class TestReport:
    def test_failures_and_lines(self):
        report = SelftestReport([
            CheckResult('a', True, 1e-9, 1e-5),
            CheckResult('b', False, 1e-3, 1e-5, detail='z0=2'),
        ])
        assert not report.passed
        assert [c.name for c in report.failures] == ['b']
        lines = report.format_lines()
        assert lines[0].startswith('PASS  a')
        assert lines[1].startswith('FAIL  b') and lines[1].endswith('(z0=2)')
        assert lines[-1] == '1/2 checks passed'

    def test_dataframe(self):
        frame = SelftestReport([CheckResult('a', True, 1e-9, 1e-5)]).to_dataframe()
        assert frame.columns.tolist() == ['check', 'passed', 'max_error', 'tolerance', 'detail',
                                          'duration_s']
