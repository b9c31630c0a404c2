"""
Scalar fixed-time stable law and its closed-form solution.

The law

    z' = -(pi/tau) * (|z|^0.5 + |z|^1.5) * sign(z)

drives any initial value to exactly zero no later than tau seconds. Its
solution is known in closed form and is the reference every integrator and
tracking test is measured against.

Near zero the right-hand side is not Lipschitz. For numerical integration
the regularized variants replace it on |z| < eps by the straight line through
the origin that meets the law at +/-eps.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import DomainError

DEFAULT_DEADBAND_EPS = 1e-12


@dataclass(frozen=True)
class SettlingTime:
    """User-chosen settling time in seconds; must be strictly positive."""

    tau: float

    def __post_init__(self):
        if not math.isfinite(self.tau) or self.tau <= 0:
            raise DomainError(f"settling time must be positive and finite, got {self.tau}")

    def __float__(self) -> float:
        return float(self.tau)


TauLike = Union[float, SettlingTime]


def _tau_value(tau: TauLike) -> float:
    if isinstance(tau, SettlingTime):
        return tau.tau
    return float(SettlingTime(float(tau)))


def _require_finite(z: float, name: str = "z"):
    if not math.isfinite(z):
        raise DomainError(f"{name} must be finite, got {z}")


def psi(z: float, tau: TauLike) -> float:
    """(pi/tau)(|z|^0.5 + |z|^1.5) sign(z)"""
    tau_s = _tau_value(tau)
    z = float(z)
    _require_finite(z)
    a = abs(z)
    return math.copysign((math.pi / tau_s) * (math.sqrt(a) + a * math.sqrt(a)), z) if a > 0 else 0.0


def psi_vec(v, tau: TauLike) -> np.ndarray:
    """Componentwise psi."""
    tau_s = _tau_value(tau)
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise DomainError(f"all components must be finite, got {v}")
    a = np.abs(v)
    return np.sign(v) * (math.pi / tau_s) * (np.sqrt(a) + a * np.sqrt(a))


def psi_regularized(z: float, tau: TauLike, eps: float = DEFAULT_DEADBAND_EPS) -> float:
    """psi with the linear deadband psi(eps) * z / eps on |z| < eps."""
    if eps <= 0:
        raise DomainError(f"deadband eps must be positive, got {eps}")
    z = float(z)
    _require_finite(z)
    if abs(z) < eps:
        return psi(eps, tau) * z / eps
    return psi(z, tau)


def psi_vec_regularized(v, tau: TauLike, eps: float = DEFAULT_DEADBAND_EPS) -> np.ndarray:
    """Componentwise psi_regularized."""
    if eps <= 0:
        raise DomainError(f"deadband eps must be positive, got {eps}")
    v = np.asarray(v, dtype=float)
    out = psi_vec(v, tau)
    inside = np.abs(v) < eps
    if np.any(inside):
        out[inside] = psi(eps, tau) * v[inside] / eps
    return out


def settling_time_of(z0: float, tau: TauLike) -> float:
    """Exact time at which the trajectory from z0 reaches zero: (2 tau/pi) arctan(sqrt|z0|)."""
    tau_s = _tau_value(tau)
    return (2.0 * tau_s / math.pi) * math.atan(math.sqrt(abs(float(z0))))


def closed_form_solution(z0: float, tau: TauLike, t: float) -> float:
    """
    Solution of the fixed-time law from z0 at time t.

    Returns exactly 0.0 from the settling instant on; the unclamped tan^2
    expression grows again past its zero and is never returned there.
    """
    tau_s = _tau_value(tau)
    z0 = float(z0)
    t = float(t)
    _require_finite(z0, "z0")
    _require_finite(t, "t")
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if z0 == 0.0 or t >= settling_time_of(z0, tau_s):
        return 0.0
    angle = math.atan(math.sqrt(abs(z0))) - math.pi * t / (2.0 * tau_s)
    return math.copysign(math.tan(angle) ** 2, z0)
