"""
Plant, CLF constraint and barrier-relaxed objective.

For an input-affine plant x' = f(x) + g(x) u with control Lyapunov function V
and decay rate w, the CLF constraint function is

    phi(u, x) = grad_V(x) . (f(x) + g(x) u) + w(x)

which is affine in u. The relaxed objective folds phi <= gamma into the cost
through a barrier B weighted by a decreasing schedule mu(t):

    J~(u, x, t) = J(u, x) + mu(t) * B(phi(u, x) - gamma)

This module evaluates phi and J~ and supplies every partial the tracking
laws consume: grad_u J~, hess_uu J~, the (m x n) mixed block d2J~/du dx and
the mixed time partial d/dt grad_u J~. Missing model derivatives (hess_V,
grad_w, jac_f, jac_g) are synthesized by central differences.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from . import hyperdual as hd
from .exceptions import BarrierDomainError, ContractViolation, DomainError, INFEASIBLE_COST


def finite_difference_jacobian(func: Callable, x, step: Optional[float] = None) -> np.ndarray:
    """
    Central-difference derivative of func at x.

    Scalar func gives the gradient (n,); vector func the Jacobian (k, n);
    matrix func an array whose last axis is the differentiation axis.
    The default step is 1e-6 * (1 + ||x||).
    """
    x = np.asarray(x, dtype=float)
    h = step if step is not None else 1e-6 * (1.0 + np.linalg.norm(x))
    columns = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        forward = np.asarray(func(x + e), dtype=float)
        backward = np.asarray(func(x - e), dtype=float)
        columns.append((forward - backward) / (2.0 * h))
    return np.stack(columns, axis=-1)


class DerivativeSource(Enum):
    """Where the partials of the relaxed objective come from"""
    AUTO = 'auto'           # analytic when the scenario supplies every override, else dual
    ANALYTIC = 'analytic'   # closed-form chain rule (synthesizing missing pieces)
    DUAL = 'dual'           # hyper-dual forward mode over J~

    @classmethod
    def from_string(cls, value: str):
        """Create enum from case-insensitive string"""
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            valid_options = [e.value for e in cls]
            raise ValueError(f"Invalid derivative source: '{value}'. Valid options: {valid_options}")


@dataclass(frozen=True)
class PlantModel:
    """Input-affine dynamics x' = f(x) + g(x) u."""

    n: int
    m: int
    f: Callable
    g: Callable
    jac_f: Optional[Callable] = None
    jac_g_cols: Optional[Sequence[Callable]] = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ContractViolation(f"plant dimensions must be positive, got n={self.n}, m={self.m}")
        if self.jac_g_cols is not None and len(self.jac_g_cols) != self.m:
            raise ContractViolation(f"jac_g_cols needs {self.m} entries, got {len(self.jac_g_cols)}")

    def drift(self, x) -> np.ndarray:
        return np.asarray(self.f(x))

    def input_matrix(self, x) -> np.ndarray:
        return np.asarray(self.g(x)).reshape(self.n, self.m)

    def state_derivative(self, x, u) -> np.ndarray:
        return self.drift(x) + self.input_matrix(x) @ u

    def drift_jacobian(self, x) -> np.ndarray:
        if self.jac_f is not None:
            return np.asarray(self.jac_f(x), dtype=float)
        return finite_difference_jacobian(self.f, x)

    def input_column_jacobian(self, x, j: int) -> np.ndarray:
        """(n x n) matrix of d(g(x) e_j)/dx."""
        if self.jac_g_cols is not None:
            return np.asarray(self.jac_g_cols[j](x), dtype=float)
        return finite_difference_jacobian(lambda y: self.input_matrix(y)[:, j], x)

    @property
    def has_analytic_jacobians(self) -> bool:
        return self.jac_f is not None and self.jac_g_cols is not None


@dataclass(frozen=True)
class LyapunovSpec:
    """CLF V with decay rate w and a known stabilizing feedback kappa."""

    V: Callable
    grad_V: Callable
    w: Callable
    kappa: Callable
    hess_V: Optional[Callable] = None
    grad_w: Optional[Callable] = None

    def hessian(self, x) -> np.ndarray:
        if self.hess_V is not None:
            return np.asarray(self.hess_V(x), dtype=float)
        return finite_difference_jacobian(self.grad_V, x)

    def decay_gradient(self, x) -> np.ndarray:
        if self.grad_w is not None:
            return np.asarray(self.grad_w(x), dtype=float)
        return finite_difference_jacobian(self.w, x)

    @property
    def has_analytic_derivatives(self) -> bool:
        return self.hess_V is not None and self.grad_w is not None


@dataclass(frozen=True)
class BarrierSpec:
    """Convex barrier on z < 0 with its first two derivatives."""

    B: Callable
    B1: Callable
    B2: Callable
    name: str = "custom"

    @classmethod
    def inverse(cls) -> "BarrierSpec":
        """B(z) = -1/z."""
        return cls(
            B=lambda z: -1.0 / z,
            B1=lambda z: 1.0 / (z * z),
            B2=lambda z: -2.0 / (z * z * z),
            name="inverse",
        )


@dataclass(frozen=True)
class CostSpec:
    """Strongly convex running cost J(u, x) with optional analytic derivatives."""

    J: Callable
    grad_u: Optional[Callable] = None
    hess_uu: Optional[Callable] = None
    mixed_ux: Optional[Callable] = None

    def gradient(self, u, x) -> np.ndarray:
        if self.grad_u is not None:
            return np.asarray(self.grad_u(u, x), dtype=float)
        return finite_difference_jacobian(lambda v: self.J(v, x), u)

    def hessian(self, u, x) -> np.ndarray:
        if self.hess_uu is not None:
            return np.asarray(self.hess_uu(u, x), dtype=float)
        return finite_difference_jacobian(lambda v: self.gradient(v, x), u)

    def mixed(self, u, x) -> np.ndarray:
        """(m x n) block d2J/du dx."""
        if self.mixed_ux is not None:
            return np.asarray(self.mixed_ux(u, x), dtype=float)
        return finite_difference_jacobian(lambda y: self.gradient(u, y), x)

    @property
    def has_analytic_derivatives(self) -> bool:
        return self.grad_u is not None and self.hess_uu is not None and self.mixed_ux is not None


@dataclass(frozen=True)
class WeightSchedule:
    """Barrier weight mu(t) > 0 with derivative mu_dot(t) < 0."""

    mu: Callable
    mu_dot: Callable
    rate: Optional[float] = None

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "WeightSchedule":
        """mu(t) = exp(-rate * t)."""
        if not rate > 0:
            raise DomainError(f"mu_rate must be positive, got {rate}")
        return cls(
            mu=lambda t: hd.exp(-rate * t),
            mu_dot=lambda t: -rate * hd.exp(-rate * t),
            rate=rate,
        )


@dataclass(frozen=True)
class RelaxedProblem:
    """
    Everything needed to evaluate J~ and its partials.

    m_J is the strong-convexity parameter of J in u (smallest eigenvalue of
    hess_uu J). Instances are immutable and safe to share across threads.
    """

    plant: PlantModel
    lyap: LyapunovSpec
    cost: CostSpec
    barrier: BarrierSpec
    weight: WeightSchedule
    gamma: float
    m_J: float
    derivative_source: DerivativeSource = DerivativeSource.AUTO
    name: str = ""

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if not self.m_J > 0:
            raise DomainError(f"m_J must be positive, got {self.m_J}")
        if not float(self.weight.mu(0.0)) > 0 or not float(self.weight.mu_dot(0.0)) < 0:
            raise DomainError("weight schedule must satisfy mu(0) > 0 and mu_dot(0) < 0")
        object.__setattr__(self, 'derivative_source',
                           DerivativeSource.from_string(self.derivative_source))

    @property
    def n(self) -> int:
        return self.plant.n

    @property
    def m(self) -> int:
        return self.plant.m

    @property
    def has_analytic_derivatives(self) -> bool:
        return (self.cost.has_analytic_derivatives and self.lyap.has_analytic_derivatives
                and self.plant.has_analytic_jacobians)

    @property
    def resolved_derivative_source(self) -> DerivativeSource:
        if self.derivative_source is DerivativeSource.AUTO:
            return DerivativeSource.ANALYTIC if self.has_analytic_derivatives else DerivativeSource.DUAL
        return self.derivative_source

    def with_settings(self, **changes) -> "RelaxedProblem":
        return replace(self, **changes)


@dataclass(frozen=True)
class RelaxedDerivatives:
    """All partials of J~ at one (u, x, t)."""

    grad_u: np.ndarray       # (m,)
    hess_uu: np.ndarray      # (m, m)
    mixed_ux: np.ndarray     # (m, n), entry (i, j) = d2J~/du_i dx_j
    mixed_ut: np.ndarray     # (m,)
    phi_minus_gamma: float


def _check_dims(problem: RelaxedProblem, u=None, x=None):
    if u is not None and np.shape(u) != (problem.m,):
        raise ContractViolation(f"u must have shape ({problem.m},), got {np.shape(u)}")
    if x is not None and np.shape(x) != (problem.n,):
        raise ContractViolation(f"x must have shape ({problem.n},), got {np.shape(x)}")


def phi(problem: RelaxedProblem, u, x) -> float:
    """CLF constraint function grad_V(x) . (f(x) + g(x) u) + w(x)."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_dims(problem, u, x)
    xdot = problem.plant.state_derivative(x, u)
    return float(np.dot(problem.lyap.grad_V(x), xdot) + problem.lyap.w(x))


def grad_u_phi(problem: RelaxedProblem, x) -> np.ndarray:
    """g(x)^T grad_V(x); phi is affine in u so this is independent of u."""
    x = np.asarray(x, dtype=float)
    return problem.plant.input_matrix(x).T @ np.asarray(problem.lyap.grad_V(x), dtype=float)


def grad_x_phi(problem: RelaxedProblem, u, x) -> np.ndarray:
    """hess_V (f + g u) + (jac_f + sum_j u_j jac_g_j)^T grad_V + grad_w."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    plant, lyap = problem.plant, problem.lyap
    jac_xdot = plant.drift_jacobian(x)
    for j in range(problem.m):
        if u[j] != 0.0:
            jac_xdot = jac_xdot + u[j] * plant.input_column_jacobian(x, j)
    grad_v = np.asarray(lyap.grad_V(x), dtype=float)
    return (lyap.hessian(x) @ plant.state_derivative(x, u)
            + jac_xdot.T @ grad_v + lyap.decay_gradient(x))


def state_jacobian_of_grad_u_phi(problem: RelaxedProblem, x) -> np.ndarray:
    """(m x n) matrix D_x(g(x)^T grad_V(x))."""
    x = np.asarray(x, dtype=float)
    plant = problem.plant
    grad_v = np.asarray(problem.lyap.grad_V(x), dtype=float)
    out = plant.input_matrix(x).T @ problem.lyap.hessian(x)
    for j in range(problem.m):
        out[j] += plant.input_column_jacobian(x, j).T @ grad_v
    return out


def feasibility_margin(problem: RelaxedProblem, u, x) -> float:
    """phi(u, x) - gamma; strictly negative inside the barrier domain."""
    return phi(problem, u, x) - problem.gamma


def _require_feasible(problem: RelaxedProblem, u, x) -> float:
    z = feasibility_margin(problem, u, x)
    if not z < 0:
        raise BarrierDomainError("derivative requested outside the barrier domain", z)
    return z


def relaxed_cost(problem: RelaxedProblem, u, x, t: float) -> float:
    """J(u, x) + mu(t) B(phi - gamma), or INFEASIBLE_COST when phi >= gamma."""
    z = feasibility_margin(problem, u, x)
    if not z < 0:
        return INFEASIBLE_COST
    return float(problem.cost.J(np.asarray(u, dtype=float), np.asarray(x, dtype=float))
                 + float(problem.weight.mu(t)) * problem.barrier.B(z))


def grad_u_relaxed(problem: RelaxedProblem, u, x, t: float) -> np.ndarray:
    z = _require_feasible(problem, u, x)
    mu = float(problem.weight.mu(t))
    return problem.cost.gradient(u, x) + mu * problem.barrier.B1(z) * grad_u_phi(problem, x)


def hess_uu_relaxed(problem: RelaxedProblem, u, x, t: float) -> np.ndarray:
    z = _require_feasible(problem, u, x)
    a = grad_u_phi(problem, x)
    mu = float(problem.weight.mu(t))
    return problem.cost.hessian(u, x) + mu * problem.barrier.B2(z) * np.outer(a, a)


def mixed_ut_relaxed(problem: RelaxedProblem, u, x, t: float) -> np.ndarray:
    """Only the barrier weight depends on t: mu_dot(t) B1(phi - gamma) grad_u phi."""
    z = _require_feasible(problem, u, x)
    return float(problem.weight.mu_dot(t)) * problem.barrier.B1(z) * grad_u_phi(problem, x)


def mixed_ux_relaxed(problem: RelaxedProblem, u, x, t: float) -> np.ndarray:
    """(m x n) block d2J/du dx + mu [B2 a (grad_x phi)^T + B1 D_x a], a = grad_u phi."""
    z = _require_feasible(problem, u, x)
    mu = float(problem.weight.mu(t))
    a = grad_u_phi(problem, x)
    barrier = problem.barrier
    return (problem.cost.mixed(u, x)
            + mu * (barrier.B2(z) * np.outer(a, grad_x_phi(problem, u, x))
                    + barrier.B1(z) * state_jacobian_of_grad_u_phi(problem, x)))


def analytic_derivatives(problem: RelaxedProblem, u, x, t: float) -> RelaxedDerivatives:
    """All four partials from the closed-form chain rule, sharing intermediate terms."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    z = _require_feasible(problem, u, x)
    a = grad_u_phi(problem, x)
    mu = float(problem.weight.mu(t))
    b1 = problem.barrier.B1(z)
    b2 = problem.barrier.B2(z)
    cost = problem.cost
    return RelaxedDerivatives(
        grad_u=cost.gradient(u, x) + mu * b1 * a,
        hess_uu=cost.hessian(u, x) + mu * b2 * np.outer(a, a),
        mixed_ux=cost.mixed(u, x) + mu * (b2 * np.outer(a, grad_x_phi(problem, u, x))
                                          + b1 * state_jacobian_of_grad_u_phi(problem, x)),
        mixed_ut=float(problem.weight.mu_dot(t)) * b1 * a,
        phi_minus_gamma=z,
    )


def relaxed_derivatives(problem: RelaxedProblem, u, x, t: float) -> RelaxedDerivatives:
    """Partials of J~ from the problem's configured derivative source."""
    if problem.resolved_derivative_source is DerivativeSource.DUAL:
        from .dual_engine import dual_derivative_engine
        return dual_derivative_engine(problem, u, x, t)
    return analytic_derivatives(problem, u, x, t)
