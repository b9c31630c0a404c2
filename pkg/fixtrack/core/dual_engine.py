"""
Forward-mode derivative engine for the relaxed objective.

Seeds v = (u, x, t) as hyper-dual variables and evaluates J~ once; the
gradient and Hessian carried by the result contain every partial the
tracking laws need. Scenario callables only have to be written with
ordinary arithmetic (and fixtrack.core.hyperdual.exp/log/sqrt where
transcendental functions appear); no derivative code is required.
"""

import numpy as np

from . import hyperdual as hd
from .problem_model import (
    RelaxedDerivatives, RelaxedProblem, _check_dims, _require_feasible,
)


def relaxed_cost_expression(problem: RelaxedProblem, u, x, t):
    """J~ evaluated with whatever number type u, x, t carry."""
    plant, lyap = problem.plant, problem.lyap
    xdot = np.asarray(plant.f(x), dtype=object) + hd.matvec(np.asarray(plant.g(x)).reshape(plant.n, plant.m), u)
    phi_value = hd.dot(lyap.grad_V(x), xdot) + lyap.w(x)
    return problem.cost.J(u, x) + problem.weight.mu(t) * problem.barrier.B(phi_value - problem.gamma)


def dual_derivative_engine(problem: RelaxedProblem, u, x, t: float) -> RelaxedDerivatives:
    """grad_u, hess_uu, mixed_ux and mixed_ut of J~ from one hyper-dual evaluation."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_dims(problem, u, x)
    z = _require_feasible(problem, u, x)

    m, n = problem.m, problem.n
    seeds = hd.seed_variables(np.concatenate([u, x, [float(t)]]))
    value = relaxed_cost_expression(problem, seeds[:m], seeds[m:m + n], seeds[m + n])
    grad, hess = value.grad, value.hess

    return RelaxedDerivatives(
        grad_u=grad[:m].copy(),
        hess_uu=0.5 * (hess[:m, :m] + hess[:m, :m].T),
        mixed_ux=hess[:m, m:m + n].copy(),
        mixed_ut=hess[:m, m + n].copy(),
        phi_minus_gamma=z,
    )
