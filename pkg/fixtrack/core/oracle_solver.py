"""
Ground-truth minimizer u*(x, t) of the relaxed objective.

Damped Newton inside the barrier domain gives u* to near machine precision;
a shrinking-lattice search over J~ gives an independent cross-check for
two-input problems. Neither is used by the tracking dynamics themselves,
only to measure how far the tracked control is from the optimum.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from shared_utils.logger import get_logger

from .exceptions import ContractViolation, OracleFailure
from .problem_model import (
    RelaxedProblem, feasibility_margin, relaxed_cost, relaxed_derivatives,
)

logger = get_logger(__name__)

MIN_STEP_FRACTION = 1e-20
GRID_REFINEMENTS = 4
GRID_SHRINK = 0.1


@dataclass
class OracleConfig:
    """
    Newton and lattice-search settings.

    grid_half_width None means max(1, ||kappa(x)||) at each solve.
    """

    newton_tol: float = 1e-10
    max_iters: int = 100
    backtrack_ratio: float = 0.5
    grid_half_width: Optional[float] = None
    grid_points: int = 41

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ValueError(f"newton_tol must be positive, got {self.newton_tol}")
        if not 0 < self.backtrack_ratio < 1:
            raise ValueError(f"backtrack_ratio must be in (0, 1), got {self.backtrack_ratio}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.grid_points < 3:
            raise ValueError(f"grid_points must be at least 3, got {self.grid_points}")
        if self.grid_half_width is not None and not self.grid_half_width > 0:
            raise ValueError(f"grid_half_width must be positive, got {self.grid_half_width}")


@dataclass
class NewtonResult:
    u: np.ndarray
    iterations: int
    grad_norm: float
    converged: bool


def newton_minimize(problem: RelaxedProblem, x, t: float, u_start,
                    cfg: Optional[OracleConfig] = None) -> NewtonResult:
    """
    Damped Newton on u -> J~(u, x, t) from a strictly feasible start.

    A trial step is shortened by backtrack_ratio until it is strictly
    feasible and either lowers J~ or lowers ||grad_u J~||; the second
    condition lets the iteration finish when the cost has flattened to
    rounding level.
    """
    cfg = cfg or OracleConfig()
    x = np.asarray(x, dtype=float)
    u = np.array(u_start, dtype=float)
    if not feasibility_margin(problem, u, x) < 0:
        raise OracleFailure("Newton start is not strictly feasible", last_iterate=u)

    derivs = relaxed_derivatives(problem, u, x, t)
    grad_norm = float(np.linalg.norm(derivs.grad_u))
    for iteration in range(cfg.max_iters + 1):
        if grad_norm <= cfg.newton_tol:
            return NewtonResult(u, iteration, grad_norm, True)
        if iteration == cfg.max_iters:
            break

        try:
            direction = -cho_solve(cho_factor(derivs.hess_uu), derivs.grad_u)
        except LinAlgError as e:
            raise ContractViolation(f"hess_uu not positive definite during Newton solve: {e}") from e

        cost = relaxed_cost(problem, u, x, t)
        step = 1.0
        while True:
            trial = u + step * direction
            trial_cost = relaxed_cost(problem, trial, x, t)
            if math.isfinite(trial_cost):
                trial_derivs = relaxed_derivatives(problem, trial, x, t)
                trial_norm = float(np.linalg.norm(trial_derivs.grad_u))
                if trial_cost < cost or trial_norm < grad_norm:
                    break
            step *= cfg.backtrack_ratio
            if step < MIN_STEP_FRACTION:
                raise OracleFailure(
                    f"line search stalled at t={t} with ||grad|| = {grad_norm:.3e}", last_iterate=u)
        u, derivs, grad_norm = trial, trial_derivs, trial_norm

    raise OracleFailure(
        f"Newton did not reach ||grad|| <= {cfg.newton_tol:g} in {cfg.max_iters} iterations "
        f"(||grad|| = {grad_norm:.3e})", last_iterate=u)


def solve_ustar(problem: RelaxedProblem, x, t: float, warm_start=None,
                cfg: Optional[OracleConfig] = None) -> np.ndarray:
    """Unique minimizer of J~(., x, t), warm-started when a feasible guess is given."""
    x = np.asarray(x, dtype=float)
    start = None
    if warm_start is not None:
        warm_start = np.asarray(warm_start, dtype=float)
        if feasibility_margin(problem, warm_start, x) < 0:
            start = warm_start
        else:
            logger.debug("Warm start infeasible, falling back to kappa(x)", t=t)
    if start is None:
        start = np.asarray(problem.lyap.kappa(x), dtype=float)
    return newton_minimize(problem, x, t, start, cfg).u


def grid_half_width_for(problem: RelaxedProblem, x, cfg: OracleConfig) -> float:
    if cfg.grid_half_width is not None:
        return cfg.grid_half_width
    return max(1.0, float(np.linalg.norm(problem.lyap.kappa(np.asarray(x, dtype=float)))))


def final_grid_resolution(problem: RelaxedProblem, x, cfg: Optional[OracleConfig] = None) -> float:
    """Lattice spacing of the last refinement of brute_force_ustar."""
    cfg = cfg or OracleConfig()
    half = grid_half_width_for(problem, x, cfg) * GRID_SHRINK ** GRID_REFINEMENTS
    return 2.0 * half / (cfg.grid_points - 1)


def brute_force_ustar(problem: RelaxedProblem, x, t: float,
                      cfg: Optional[OracleConfig] = None) -> np.ndarray:
    """
    Lattice search for u* on two-input problems.

    Starts on a grid_points x grid_points lattice centred at kappa(x), then
    recentres on the best point and shrinks the half-width tenfold, four
    times. Infeasible lattice points score +inf.
    """
    cfg = cfg or OracleConfig()
    if problem.m != 2:
        raise ContractViolation(f"brute_force_ustar supports m = 2 only, got m = {problem.m}")
    x = np.asarray(x, dtype=float)
    center = np.asarray(problem.lyap.kappa(x), dtype=float)
    half = grid_half_width_for(problem, x, cfg)
    offsets = np.linspace(-1.0, 1.0, cfg.grid_points)

    for _ in range(GRID_REFINEMENTS + 1):
        best_cost, best_point = math.inf, None
        for du1 in offsets * half:
            for du2 in offsets * half:
                candidate = center + np.array([du1, du2])
                cost = relaxed_cost(problem, candidate, x, t)
                if cost < best_cost:
                    best_cost, best_point = cost, candidate
        if best_point is None:
            raise OracleFailure(f"every lattice point is infeasible at t={t}", last_iterate=center)
        center = best_point
        half *= GRID_SHRINK
    return center


def tracking_error(u, u_star) -> float:
    """||u - u*||."""
    u = np.asarray(u, dtype=float)
    u_star = np.asarray(u_star, dtype=float)
    if u.shape != u_star.shape:
        raise ContractViolation(f"shape mismatch {u.shape} vs {u_star.shape}")
    return float(np.linalg.norm(u - u_star))


def tracking_error_squared(u, u_star) -> float:
    """||u - u*||^2."""
    return tracking_error(u, u_star) ** 2
