"""
Feasibility-guarded explicit Runge-Kutta integration.

Two methods share one stepping routine:
    rk4   classical fixed-step fourth order
    rk45  Runge-Kutta-Fehlberg 4(5) with embedded error control

Every stage point and the proposed endpoint are checked against the
barrier domain before the right-hand side is evaluated there. A step that
would leave the domain (or come within guard tolerance of its edge) is
rejected and retried with half the step.

integrate_ode drives any right-hand side and reports states on a uniform
sample grid; integrate specializes it to the coupled plant + tracking law
and fills in oracle measurements at each sample.
"""

import logging
import math
import time
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from shared_utils.logger import get_logger
from shared_utils.progress import BaseProgressReporter, NullProgressReporter

from .exceptions import BarrierDomainError, IntegrationFailure, OracleFailure
from .oracle_solver import OracleConfig, solve_ustar, tracking_error
from .problem_model import RelaxedProblem, feasibility_margin, relaxed_cost, relaxed_derivatives
from .tracking_laws import (
    CoupledSystem, TrackingConfig, TrackingLaw, validate_initial_control,
)

logger = get_logger(__name__)

MIN_STEP = 1e-15


class IntegrationMethod(Enum):
    """Explicit Runge-Kutta variants"""
    RK4 = 'rk4'      # fixed step
    RK45 = 'rk45'    # adaptive Fehlberg 4(5)

    @classmethod
    def from_string(cls, value):
        """Create enum from case-insensitive string ('RK4-fixed' and 'RK45-adaptive' accepted)"""
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace('-fixed', '').replace('-adaptive', '')
        try:
            return cls(key)
        except ValueError:
            valid_options = [e.value for e in cls]
            raise ValueError(f"Invalid integration method: '{value}'. Valid options: {valid_options}")


@dataclass(frozen=True)
class ButcherTableau:
    c: Tuple[float, ...]
    a: Tuple[Tuple[float, ...], ...]
    b: Tuple[float, ...]
    b_high: Optional[Tuple[float, ...]] = None   # embedded higher-order weights
    order: int = 4

RK4_TABLEAU = ButcherTableau(
    c=(0.0, 0.5, 0.5, 1.0),
    a=((), (0.5,), (0.0, 0.5), (0.0, 0.0, 1.0)),
    b=(1 / 6, 1 / 3, 1 / 3, 1 / 6),
)

RKF45_TABLEAU = ButcherTableau(
    c=(0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2),
    a=(
        (),
        (1 / 4,),
        (3 / 32, 9 / 32),
        (1932 / 2197, -7200 / 2197, 7296 / 2197),
        (439 / 216, -8.0, 3680 / 513, -845 / 4104),
        (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
    ),
    b=(25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0),
    b_high=(16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55),
)

TABLEAUS = {
    IntegrationMethod.RK4: RK4_TABLEAU,
    IntegrationMethod.RK45: RKF45_TABLEAU,
}


@dataclass
class IntegratorConfig:
    """
    Stepper settings.

    dt is the fixed step for rk4 and the initial step for rk45. guard_eta
    is scaled by |gamma| to give the absolute guard tolerance.
    """

    method: IntegrationMethod = IntegrationMethod.RK4
    dt: float = 1e-3
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    t_end: float = 6.0
    sample_dt: float = 1e-2
    max_step_rejections: int = 50
    guard_eta: float = 1e-12

    def __post_init__(self):
        self.method = IntegrationMethod.from_string(self.method)
        if not 0 < self.dt <= self.sample_dt <= self.t_end:
            raise ValueError(
                f"need 0 < dt <= sample_dt <= t_end, got dt={self.dt}, "
                f"sample_dt={self.sample_dt}, t_end={self.t_end}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_step_rejections < 1:
            raise ValueError(f"max_step_rejections must be at least 1, got {self.max_step_rejections}")
        if self.guard_eta < 0:
            raise ValueError(f"guard_eta must be nonnegative, got {self.guard_eta}")

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.t_end / self.sample_dt + 1e-9)) + 1

    def sample_times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.sample_dt


@dataclass
class StepStatistics:
    accepted_steps: int = 0
    guard_rejections: int = 0
    error_rejections: int = 0
    rhs_evaluations: int = 0
    min_step: float = math.inf
    max_step: float = 0.0

    @property
    def total_rejections(self) -> int:
        return self.guard_rejections + self.error_rejections

    def record_accept(self, h: float):
        self.accepted_steps += 1
        self.min_step = min(self.min_step, h)
        self.max_step = max(self.max_step, h)

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['total_rejections'] = self.total_rejections
        if math.isinf(self.min_step):
            data['min_step'] = None
        return data


@dataclass
class StepOutcome:
    state: Tuple[float, np.ndarray]
    accepted: bool
    suggested_h: float
    reason: str = 'ok'            # ok | guard | error
    evaluations: int = 0


def _inside(margin: Optional[Callable], t: float, y: np.ndarray, tolerance: float) -> bool:
    if not np.all(np.isfinite(y)):
        return False
    if margin is None:
        return True
    return margin(t, y) < -tolerance


def step_with_feasibility_guard(rhs: Callable, state: Tuple[float, np.ndarray], h: float,
                                margin: Optional[Callable] = None, guard_tolerance: float = 0.0,
                                method: IntegrationMethod = IntegrationMethod.RK4,
                                rel_tol: float = 1e-9, abs_tol: float = 1e-12) -> StepOutcome:
    """
    One Runge-Kutta step from a feasible state.

    Rejected with h halved when a stage point or the endpoint fails
    margin(t, y) < -guard_tolerance (or the right-hand side refuses the
    point). rk45 additionally rejects on the embedded error estimate.
    """
    method = IntegrationMethod.from_string(method)
    tableau = TABLEAUS[method]
    t, y = state
    y = np.asarray(y, dtype=float)
    stages: List[np.ndarray] = []

    def reject(reason: str, new_h: float) -> StepOutcome:
        return StepOutcome(state, False, new_h, reason, len(stages))

    for c_i, a_i in zip(tableau.c, tableau.a):
        y_stage = y + h * sum((a_ij * k_j for a_ij, k_j in zip(a_i, stages)), np.zeros_like(y))
        if stages and not _inside(margin, t + c_i * h, y_stage, guard_tolerance):
            return reject('guard', 0.5 * h)
        try:
            k = np.asarray(rhs(t + c_i * h, y_stage), dtype=float)
        except BarrierDomainError:
            return reject('guard', 0.5 * h)
        if not np.all(np.isfinite(k)):
            return reject('guard', 0.5 * h)
        stages.append(k)

    y_new = y + h * sum(b_i * k_i for b_i, k_i in zip(tableau.b, stages))
    if not _inside(margin, t + h, y_new, guard_tolerance):
        return reject('guard', 0.5 * h)

    if tableau.b_high is None:
        return StepOutcome((t + h, y_new), True, h, 'ok', len(stages))

    y_high = y + h * sum(b_i * k_i for b_i, k_i in zip(tableau.b_high, stages))
    scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_high))
    error = float(np.max(np.abs(y_high - y_new) / scale))
    factor = 4.0 if error == 0.0 else min(4.0, max(0.1, 0.84 * error ** (-1.0 / tableau.order)))
    if error > 1.0:
        return reject('error', h * factor)
    return StepOutcome((t + h, y_new), True, h * factor, 'ok', len(stages))


@dataclass
class OdeSolution:
    times: np.ndarray
    states: np.ndarray
    stats: StepStatistics


def integrate_ode(rhs: Callable, y0, config: IntegratorConfig, margin: Optional[Callable] = None,
                  guard_tolerance: float = 0.0, on_sample: Optional[Callable] = None,
                  progress: Optional[BaseProgressReporter] = None) -> OdeSolution:
    """
    Integrate y' = rhs(t, y) from t = 0 and report y on the sample grid.

    on_sample(t, y) is called at every sample time, including t = 0, as
    soon as the state there is known. rk4 subdivides each sample interval
    into equal steps no longer than dt; rk45 carries its adapted step
    across intervals.
    """
    y = np.array(y0, dtype=float)
    stats = StepStatistics()
    sample_times = config.sample_times()
    states = np.empty((sample_times.size, y.size))
    adaptive = config.method is IntegrationMethod.RK45
    h_adaptive = config.dt

    states[0] = y
    if on_sample:
        on_sample(0.0, y)
    if progress:
        progress.update_time(0.0)

    t = 0.0
    for index in range(1, sample_times.size):
        t_next = float(sample_times[index])
        interval = t_next - t
        if adaptive:
            h = h_adaptive
        else:
            h_nominal = interval / math.ceil(interval / config.dt - 1e-9)
            h = h_nominal
        consecutive_rejections = 0

        while t < t_next:
            remaining = t_next - t
            landing = h >= remaining - 1e-12 * max(1.0, abs(t_next))
            h_step = remaining if landing else h
            outcome = step_with_feasibility_guard(
                rhs, (t, y), h_step, margin=margin, guard_tolerance=guard_tolerance,
                method=config.method, rel_tol=config.rel_tol, abs_tol=config.abs_tol)
            stats.rhs_evaluations += outcome.evaluations

            if outcome.accepted:
                stats.record_accept(h_step)
                t = t_next if landing else outcome.state[0]
                y = outcome.state[1]
                consecutive_rejections = 0
                h = outcome.suggested_h if adaptive else h_nominal
                if adaptive and not landing:
                    h_adaptive = h
                continue

            if outcome.reason == 'guard':
                stats.guard_rejections += 1
                logger.debug("Step rejected by feasibility guard", t=t, h=h_step)
            else:
                stats.error_rejections += 1
            consecutive_rejections += 1
            h = outcome.suggested_h
            if consecutive_rejections > config.max_step_rejections:
                raise IntegrationFailure(
                    f"{consecutive_rejections} consecutive step rejections at t={t:.6g}",
                    last_state=(t, y.copy()))
            if h < MIN_STEP:
                raise IntegrationFailure(f"step size underflow ({h:.3e}) at t={t:.6g}",
                                         last_state=(t, y.copy()))

        states[index] = y
        if on_sample:
            on_sample(t_next, y)
        if progress:
            progress.update_time(t_next)
        if logger.is_enabled_for(logging.DEBUG):
            logger.debug("Sample reached", t=t_next, accepted_steps=stats.accepted_steps,
                         rejections=stats.total_rejections)

    return OdeSolution(sample_times, states, stats)


@dataclass
class TrajectoryRecord:
    """One sample of a tracking run."""

    t: float
    x: np.ndarray
    u: np.ndarray
    u_star: np.ndarray
    grad: np.ndarray
    err: float
    err_sq: float
    phi_minus_gamma: float
    grad_norm: float
    cost: float


@dataclass
class Trajectory:
    """Sampled run with provenance metadata."""

    n: int
    m: int
    records: List[TrajectoryRecord] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)
    failed: bool = False
    failure_time: Optional[float] = None
    failure_reason: Optional[str] = None

    def __len__(self) -> int:
        return len(self.records)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def states(self) -> np.ndarray:
        return np.array([r.x for r in self.records]).reshape(len(self.records), self.n)

    def controls(self) -> np.ndarray:
        return np.array([r.u for r in self.records]).reshape(len(self.records), self.m)

    def optimal_controls(self) -> np.ndarray:
        return np.array([r.u_star for r in self.records]).reshape(len(self.records), self.m)

    def gradients(self) -> np.ndarray:
        return np.array([r.grad for r in self.records]).reshape(len(self.records), self.m)

    def index_at(self, t: float) -> int:
        """Index of the first record with time >= t (within rounding)."""
        times = self.times
        hits = np.nonzero(times >= t - 1e-9)[0]
        if hits.size == 0:
            raise IndexError(f"no record at or after t={t}")
        return int(hits[0])

    def column_names(self, include_gradient: bool = False) -> List[str]:
        names = (['t'] + [f'x{i + 1}' for i in range(self.n)]
                 + [f'u{i + 1}' for i in range(self.m)]
                 + [f'ustar{i + 1}' for i in range(self.m)]
                 + ['err', 'err_sq', 'phi_minus_gamma', 'grad_norm', 'cost'])
        if include_gradient:
            names += [f'grad{i + 1}' for i in range(self.m)]
        return names

    def to_dataframe(self, include_gradient: bool = False) -> pd.DataFrame:
        rows = []
        for r in self.records:
            row = ([r.t] + list(r.x) + list(r.u) + list(r.u_star)
                   + [r.err, r.err_sq, r.phi_minus_gamma, r.grad_norm, r.cost])
            if include_gradient:
                row += list(r.grad)
            rows.append(row)
        return pd.DataFrame(rows, columns=self.column_names(include_gradient), dtype=float)


def integrate(problem: RelaxedProblem, tracking_config: TrackingConfig,
              integ_config: IntegratorConfig, x0, u0,
              oracle_config: Optional[OracleConfig] = None,
              metadata: Optional[Dict[str, Any]] = None,
              progress: Optional[BaseProgressReporter] = None,
              label: str = 'run') -> Trajectory:
    """
    Integrate plant and tracking law from (x0, u0) and record every sample.

    u0 must be strictly feasible at x0. The oracle minimizer is computed at
    sample times only, warm-started from the previous sample.
    """
    x0 = np.asarray(x0, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    oracle_config = oracle_config or OracleConfig()
    progress = progress or NullProgressReporter()
    validate_initial_control(problem, x0, u0)

    system = CoupledSystem(problem, tracking_config)
    n = problem.n
    trajectory = Trajectory(n=problem.n, m=problem.m)
    trajectory.metadata.update(metadata or {})
    trajectory.metadata.update({
        'label': label,
        'law': tracking_config.law.name,
        'tau': tracking_config.tau,
        'deadband_eps': tracking_config.deadband_eps,
        'method': integ_config.method.value,
        'dt': integ_config.dt,
        'sample_dt': integ_config.sample_dt,
        't_end': integ_config.t_end,
        'derivative_source': problem.resolved_derivative_source.value,
        'm_J': problem.m_J,
    })
    if tracking_config.law is TrackingLaw.EC:
        trajectory.metadata['ec_alpha'] = tracking_config.ec_alpha(problem.m)

    previous_ustar: List[Optional[np.ndarray]] = [None]

    def record(t: float, y: np.ndarray):
        x, u = y[:n].copy(), y[n:].copy()
        margin = feasibility_margin(problem, u, x)
        if not margin < 0:
            trajectory.failed = True
            trajectory.failure_time = t
            trajectory.failure_reason = 'infeasible sample'
            raise IntegrationFailure(f"sample at t={t:.6g} left the barrier domain",
                                     last_state=(t, y.copy()))
        derivs = relaxed_derivatives(problem, u, x, t)
        u_star = solve_ustar(problem, x, t, warm_start=previous_ustar[0], cfg=oracle_config)
        previous_ustar[0] = u_star
        err = tracking_error(u, u_star)
        trajectory.records.append(TrajectoryRecord(
            t=t, x=x, u=u, u_star=u_star, grad=derivs.grad_u, err=err, err_sq=err * err,
            phi_minus_gamma=margin, grad_norm=float(np.linalg.norm(derivs.grad_u)),
            cost=relaxed_cost(problem, u, x, t),
        ))

    progress.start_run(label, integ_config.t_end)
    started = time.perf_counter()
    try:
        solution = integrate_ode(
            system.rhs, np.concatenate([x0, u0]), integ_config, margin=system.margin,
            guard_tolerance=integ_config.guard_eta * abs(problem.gamma),
            on_sample=record, progress=progress)
    except (IntegrationFailure, OracleFailure) as e:
        trajectory.failed = True
        if trajectory.failure_time is None:
            trajectory.failure_time = e.last_state[0] if getattr(e, 'last_state', None) else None
        trajectory.failure_reason = trajectory.failure_reason or str(e)
        trajectory.metadata['wall_clock_s'] = time.perf_counter() - started
        e.trajectory = trajectory
        progress.complete_run(label, ok=False)
        logger.error("Integration failed", exception=e, label=label, samples=len(trajectory))
        raise

    trajectory.metadata['wall_clock_s'] = time.perf_counter() - started
    trajectory.metadata['step_statistics'] = solution.stats.as_dict()
    trajectory.metadata['rhs_evaluations'] = system.evaluations
    progress.complete_run(label, ok=True)
    logger.info("Integration complete", label=label, samples=len(trajectory),
                accepted_steps=solution.stats.accepted_steps,
                rejections=solution.stats.total_rejections,
                duration=trajectory.metadata['wall_clock_s'])
    return trajectory
