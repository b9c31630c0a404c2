"""
Controller dynamics that track the minimizer of the relaxed objective.

Both laws solve

    hess_uu J~ u' + d2J~/du dx x' + d/dt grad_u J~ = -C(grad_u J~)

for u', where C is the deadband-regularized fixed-time law Psi (FC) or a
constant positive definite gain A (EC). Along solutions the gradient then
obeys d/dt grad_u J~ = -C(grad_u J~): it vanishes by tau for FC and decays
exponentially for EC.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .exceptions import BarrierDomainError, ContractViolation, DomainError
from .fixed_time_law import (
    DEFAULT_DEADBAND_EPS, SettlingTime, closed_form_solution, psi_vec_regularized,
)
from .problem_model import (
    RelaxedDerivatives, RelaxedProblem, feasibility_margin, relaxed_derivatives,
)


class TrackingLaw(Enum):
    """Correction rule applied to the gradient"""
    FC = 'fc'   # fixed-time convergent
    EC = 'ec'   # exponentially convergent baseline

    @classmethod
    def from_string(cls, value):
        """Create enum from case-insensitive string"""
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            valid_options = [e.name for e in cls]
            raise ValueError(f"Invalid tracking law: '{value}'. Valid options: {valid_options}")


@dataclass
class TrackingConfig:
    """
    Law selection and its parameters.

    ec_gain is the EC matrix A; None means the identity of the problem's
    input dimension.
    """

    law: TrackingLaw = TrackingLaw.FC
    tau: float = 3.0
    ec_gain: Optional[np.ndarray] = None
    deadband_eps: float = DEFAULT_DEADBAND_EPS

    def __post_init__(self):
        self.law = TrackingLaw.from_string(self.law)
        if self.deadband_eps <= 0:
            raise DomainError(f"deadband_eps must be positive, got {self.deadband_eps}")
        if self.law is TrackingLaw.FC:
            SettlingTime(self.tau)
        if self.ec_gain is not None:
            gain = np.atleast_2d(np.asarray(self.ec_gain, dtype=float))
            if gain.shape[0] != gain.shape[1]:
                raise ContractViolation(f"ec_gain must be square, got shape {gain.shape}")
            if not np.allclose(gain, gain.T):
                raise DomainError("ec_gain must be symmetric")
            if np.linalg.eigvalsh(gain).min() <= 0:
                raise DomainError("ec_gain must be positive definite")
            self.ec_gain = gain

    def gain_matrix(self, m: int) -> np.ndarray:
        if self.ec_gain is None:
            return np.eye(m)
        if self.ec_gain.shape != (m, m):
            raise ContractViolation(f"ec_gain must be ({m}, {m}), got {self.ec_gain.shape}")
        return self.ec_gain

    def ec_alpha(self, m: int) -> float:
        """Largest alpha with alpha I <= A."""
        return float(np.linalg.eigvalsh(self.gain_matrix(m)).min())


@dataclass(frozen=True)
class CoupledState:
    """Plant state x, controller state u, time t."""

    x: np.ndarray
    u: np.ndarray
    t: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.u])

    @classmethod
    def from_vector(cls, y, n: int, t: float = 0.0) -> "CoupledState":
        y = np.asarray(y, dtype=float)
        return cls(x=y[:n], u=y[n:], t=t)


def _correction(config: TrackingConfig, law: TrackingLaw, grad_u: np.ndarray) -> np.ndarray:
    if law is TrackingLaw.FC:
        return psi_vec_regularized(grad_u, config.tau, config.deadband_eps)
    return config.gain_matrix(grad_u.size) @ grad_u


def _solve_udot(problem: RelaxedProblem, config: TrackingConfig, s: CoupledState,
                law: TrackingLaw) -> Tuple[np.ndarray, np.ndarray, RelaxedDerivatives]:
    derivs = relaxed_derivatives(problem, s.u, s.x, s.t)
    xdot = problem.plant.state_derivative(s.x, s.u)
    bracket = _correction(config, law, derivs.grad_u) + derivs.mixed_ut + derivs.mixed_ux @ xdot
    try:
        factor = cho_factor(derivs.hess_uu)
    except LinAlgError as e:
        raise ContractViolation(f"hess_uu is not positive definite at t={s.t}: {e}") from e
    return -cho_solve(factor, bracket), xdot, derivs


def fc_udot(problem: RelaxedProblem, config: TrackingConfig, s: CoupledState) -> np.ndarray:
    """Fixed-time tracking law."""
    return _solve_udot(problem, config, s, TrackingLaw.FC)[0]


def ec_udot(problem: RelaxedProblem, config: TrackingConfig, s: CoupledState) -> np.ndarray:
    """Exponential baseline: the fixed-time correction replaced by A grad_u J~."""
    return _solve_udot(problem, config, s, TrackingLaw.EC)[0]


def law_udot(problem: RelaxedProblem, config: TrackingConfig, s: CoupledState) -> np.ndarray:
    return _solve_udot(problem, config, s, config.law)[0]


def coupled_rhs(problem: RelaxedProblem, config: TrackingConfig, s: CoupledState) -> np.ndarray:
    """Stacked (x', u') for the plant under the configured law."""
    udot, xdot, _ = _solve_udot(problem, config, s, config.law)
    return np.concatenate([xdot, udot])


def gradient_trajectory_closed_form(zeta0, tau, t: float) -> np.ndarray:
    """Predicted grad_u J~ along an FC trajectory started with gradient zeta0."""
    return np.array([closed_form_solution(z, tau, t) for z in np.atleast_1d(zeta0)])


def initial_gradient(problem: RelaxedProblem, x0, u0) -> np.ndarray:
    """zeta0 = grad_u J~(u0, x0, 0)."""
    return relaxed_derivatives(problem, np.asarray(u0, dtype=float),
                               np.asarray(x0, dtype=float), 0.0).grad_u


def validate_initial_control(problem: RelaxedProblem, x0, u0) -> float:
    """Return phi(u0, x0) - gamma, raising when u0 is not strictly feasible."""
    margin = feasibility_margin(problem, u0, x0)
    if not margin < 0:
        raise BarrierDomainError("initial control is not strictly feasible", margin)
    return margin


@dataclass
class CoupledSystem:
    """The plant and controller as one ODE y' = F(t, y) with y = (x, u)."""

    problem: RelaxedProblem
    config: TrackingConfig
    evaluations: int = field(default=0, init=False)

    @property
    def dimension(self) -> int:
        return self.problem.n + self.problem.m

    def state(self, t: float, y) -> CoupledState:
        return CoupledState.from_vector(y, self.problem.n, t)

    def rhs(self, t: float, y) -> np.ndarray:
        self.evaluations += 1
        return coupled_rhs(self.problem, self.config, self.state(t, y))

    def margin(self, t: float, y) -> float:
        """phi - gamma at y; the integrator keeps this strictly negative."""
        n = self.problem.n
        y = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(y)):
            return np.inf
        return feasibility_margin(self.problem, y[n:], y[:n])
