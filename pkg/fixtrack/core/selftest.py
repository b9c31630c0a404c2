"""
Built-in verification suite behind `fixtrack selftest`.

Checks:
    fixed_time_closed_form   numerically integrated z' = -psi(z) against the
                             closed-form solution and its settling time
    gradient_trajectory      grad_u J~ along an FC case-study run against the
                             per-component closed form
    analytic_vs_fd           analytic partials of J~ against central
                             differences of the cost and gradient
    dual_vs_analytic         hyper-dual partials against analytic partials
    strong_convexity         smallest eigenvalue of hess_uu J~ >= m_J
"""

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from shared_utils.logger import get_logger, log_performance
from .built_ins.scenarios import build_problem, build_tracking_config, resolve_initial_values
from .dual_engine import dual_derivative_engine
from .fixed_time_law import closed_form_solution, psi_regularized, settling_time_of
from .integrator import IntegratorConfig, integrate_ode
from .problem_model import (
    RelaxedProblem, analytic_derivatives, feasibility_margin, finite_difference_jacobian,
    relaxed_cost, relaxed_derivatives,
)
from .run_config import ScenarioConfig
from .tracking_laws import CoupledSystem, initial_gradient

logger = get_logger('fixtrack.selftest')

SELFTEST_SEED = 20240601
CLOSED_FORM_Z0 = (-100.0, -10.0, -1.0, -0.1, 0.1, 1.0, 10.0, 100.0)
CLOSED_FORM_TAUS = (0.5, 1.0, 3.0, 5.0)
CLOSED_FORM_CASES = tuple((z0, tau) for tau in CLOSED_FORM_TAUS for z0 in CLOSED_FORM_Z0)
SETTLING_MARGIN = 0.01   # fraction of tau excluded around each settling instant


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_error: float
    tolerance: float
    detail: str = ''
    duration: float = 0.0


@dataclass
class SelftestReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame([{
            'check': c.name, 'passed': c.passed, 'max_error': c.max_error,
            'tolerance': c.tolerance, 'detail': c.detail, 'duration_s': c.duration,
        } for c in self.checks])

    def format_lines(self) -> List[str]:
        lines = []
        for c in self.checks:
            status = 'PASS' if c.passed else 'FAIL'
            lines.append(f"{status}  {c.name:<26} max_error={c.max_error:.3e}  tol={c.tolerance:.1e}"
                         + (f"  ({c.detail})" if c.detail else ''))
        lines.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed")
        return lines


def check_fixed_time_closed_form(cases: Sequence = CLOSED_FORM_CASES,
                                 tolerance: float = 1e-6) -> CheckResult:
    """
    RK4 with dt = 2e-4 tau on z' = -psi(z). Away from the settling instant
    the numerical and closed-form solutions agree; after it |z| stays small,
    in particular at t = tau.
    """
    worst = 0.0
    worst_case = ''
    for z0, tau in cases:
        config = IntegratorConfig(dt=2e-4 * tau, sample_dt=0.01 * tau, t_end=1.5 * tau)
        solution = integrate_ode(lambda t, y: np.array([-psi_regularized(y[0], tau)]),
                                 [z0], config)
        settle = settling_time_of(z0, tau)
        delta = SETTLING_MARGIN * tau
        for t, z in zip(solution.times, solution.states[:, 0]):
            if t <= settle - delta:
                error = abs(z - closed_form_solution(z0, tau, t))
            elif t >= settle + delta:
                error = abs(z)
            else:
                continue
            if error > worst:
                worst, worst_case = error, f"z0={z0:g}, tau={tau:g}, t={t:.3g}"
    return CheckResult('fixed_time_closed_form', worst <= tolerance, worst, tolerance, worst_case)


def check_gradient_trajectory(cfg: Optional[ScenarioConfig] = None,
                              relative_tolerance: float = 1e-4,
                              settle_tolerance: float = 1e-4) -> CheckResult:
    """
    Integrate the coupled FC system to tau and compare grad_u J~ with the
    closed form of every component.
    """
    cfg = cfg or ScenarioConfig()
    problem = build_problem(cfg)
    tracking = build_tracking_config(cfg)
    x0, u0 = resolve_initial_values(cfg, problem)
    zeta0 = initial_gradient(problem, x0, u0)
    tau = cfg.tau
    scale = max(1.0, float(np.linalg.norm(zeta0)))
    system = CoupledSystem(problem, tracking)
    n = problem.n

    worst_track = worst_settle = 0.0
    settle_times = [settling_time_of(z, tau) for z in zeta0]
    delta = SETTLING_MARGIN * tau

    def on_sample(t, y):
        nonlocal worst_track, worst_settle
        grad = relaxed_derivatives(problem, y[n:], y[:n], t).grad_u
        for i, z0 in enumerate(zeta0):
            if t <= settle_times[i] - delta:
                worst_track = max(worst_track, abs(grad[i] - closed_form_solution(z0, tau, t)) / scale)
        if t >= tau:
            worst_settle = max(worst_settle, float(np.linalg.norm(grad)))

    config = IntegratorConfig(dt=cfg.integrator.dt, sample_dt=0.05, t_end=tau + 0.5)
    integrate_ode(system.rhs, np.concatenate([x0, u0]), config, margin=system.margin,
                  on_sample=on_sample)
    passed = worst_track <= relative_tolerance and worst_settle <= settle_tolerance
    return CheckResult('gradient_trajectory', passed, worst_track, relative_tolerance,
                       f"max grad_norm after tau = {worst_settle:.3e}")


def sample_feasible_points(problem: RelaxedProblem, count: int, seed: int = SELFTEST_SEED,
                           state_scale: float = 3.0, control_noise: float = 0.5,
                           min_depth: float = 1e-2):
    """Random (u, x, t) with phi - gamma <= -min_depth, u near kappa(x)."""
    rng = np.random.default_rng(seed)
    points = []
    attempts = 0
    while len(points) < count and attempts < 100 * count:
        attempts += 1
        x = rng.uniform(-state_scale, state_scale, problem.n)
        u = np.asarray(problem.lyap.kappa(x), dtype=float) + rng.normal(0.0, control_noise, problem.m)
        if feasibility_margin(problem, u, x) <= -min_depth:
            points.append((u, x, float(rng.uniform(0.0, 6.0))))
    return points


def _relative_error(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def check_analytic_vs_fd(cfg: Optional[ScenarioConfig] = None, samples: int = 50,
                         tolerance: float = 1e-5) -> CheckResult:
    problem = build_problem(cfg or ScenarioConfig())
    worst = 0.0
    for u, x, t in sample_feasible_points(problem, samples):
        d = analytic_derivatives(problem, u, x, t)

        def grad_u_of(uu, xx=x, tt=t):
            return analytic_derivatives(problem, uu, xx, tt).grad_u

        fd_grad = finite_difference_jacobian(lambda uu: np.array([relaxed_cost(problem, uu, x, t)]), u)[0]
        fd_hess = finite_difference_jacobian(grad_u_of, u)
        fd_mixed_ux = finite_difference_jacobian(lambda xx: grad_u_of(u, xx), x)
        fd_mixed_ut = finite_difference_jacobian(lambda tt: grad_u_of(u, x, tt[0]), np.array([t]))[:, 0]
        worst = max(worst,
                    _relative_error(d.grad_u, fd_grad),
                    _relative_error(d.hess_uu, fd_hess),
                    _relative_error(d.mixed_ux, fd_mixed_ux),
                    _relative_error(d.mixed_ut, fd_mixed_ut))
    return CheckResult('analytic_vs_fd', worst <= tolerance, worst, tolerance, f"{samples} points")


def check_dual_vs_analytic(cfg: Optional[ScenarioConfig] = None, samples: int = 50,
                           tolerance: float = 1e-9) -> CheckResult:
    problem = build_problem(cfg or ScenarioConfig())
    worst = 0.0
    for u, x, t in sample_feasible_points(problem, samples, seed=SELFTEST_SEED + 1):
        exact = analytic_derivatives(problem, u, x, t)
        dual = dual_derivative_engine(problem, u, x, t)
        worst = max(worst,
                    _relative_error(dual.grad_u, exact.grad_u),
                    _relative_error(dual.hess_uu, exact.hess_uu),
                    _relative_error(dual.mixed_ux, exact.mixed_ux),
                    _relative_error(dual.mixed_ut, exact.mixed_ut))
    return CheckResult('dual_vs_analytic', worst <= tolerance, worst, tolerance, f"{samples} points")


def check_strong_convexity(cfg: Optional[ScenarioConfig] = None, samples: int = 200) -> CheckResult:
    problem = build_problem(cfg or ScenarioConfig())
    smallest = math.inf
    for u, x, t in sample_feasible_points(problem, samples, seed=SELFTEST_SEED + 2):
        hess = analytic_derivatives(problem, u, x, t).hess_uu
        smallest = min(smallest, float(np.linalg.eigvalsh(hess)[0]))
    shortfall = max(0.0, problem.m_J - smallest)
    return CheckResult('strong_convexity', shortfall <= 1e-12, shortfall, 1e-12,
                       f"min eigenvalue {smallest:.6g}, m_J = {problem.m_J:g}")


SELFTEST_CHECKS: Dict[str, Callable[[], CheckResult]] = {
    'fixed_time_closed_form': check_fixed_time_closed_form,
    'gradient_trajectory': check_gradient_trajectory,
    'analytic_vs_fd': check_analytic_vs_fd,
    'dual_vs_analytic': check_dual_vs_analytic,
    'strong_convexity': check_strong_convexity,
}


def run_selftest(names: Optional[Sequence[str]] = None) -> SelftestReport:
    """Run the named checks (all by default) and collect their results."""
    names = list(names) if names else list(SELFTEST_CHECKS)
    unknown = [n for n in names if n not in SELFTEST_CHECKS]
    if unknown:
        raise ValueError(f"Unknown selftest checks {unknown}. Available: {sorted(SELFTEST_CHECKS)}")

    report = SelftestReport()
    with log_performance("selftest", logger=logger, checks=len(names)):
        for name in names:
            started = time.perf_counter()
            result = SELFTEST_CHECKS[name]()
            result.duration = time.perf_counter() - started
            report.checks.append(result)
            if result.passed:
                logger.info("Check passed", check=name, max_error=result.max_error)
            else:
                logger.warning("Check failed", check=name, max_error=result.max_error,
                               tolerance=result.tolerance, detail=result.detail)
    return report
