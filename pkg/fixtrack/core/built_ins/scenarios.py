"""
Built-in scenarios.

Each entry bundles a plant, CLF, decay rate, cost and the stabilizing
feedbacks known for it, together with default initial state and the
strong-convexity parameter m_J of the cost.

    case_study       three-state nonlinear plant with two inputs, analytic
                     derivative overrides for every model term
    scalar_unstable  x' = x + u, no overrides; derivatives come from the
                     hyper-dual engine and finite-difference synthesis
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Dict, Tuple

import numpy as np

from .. import hyperdual as hd
from ..problem_model import (
    BarrierSpec, CostSpec, LyapunovSpec, PlantModel, RelaxedProblem, WeightSchedule,
)
from ..tracking_laws import TrackingConfig

if TYPE_CHECKING:
    from ..run_config import ScenarioConfig

# V' = -x^T P x under either case-study feedback
CASE_STUDY_P = np.array([
    [1.0, 0.5, 0.0],
    [0.5, 1.0, 0.5],
    [0.0, 0.5, 1.0],
])

_CASE_STUDY_G = np.array([
    [0.0, 0.0],
    [1.0, 0.0],
    [0.0, 1.0],
])


@dataclass(frozen=True)
class ScenarioDefinition:
    """Model pieces of a registered scenario."""

    key: str
    description: str
    n: int
    m: int
    plant: PlantModel
    lyap_factory: Callable[[Callable], LyapunovSpec]
    cost: CostSpec
    feedbacks: Dict[str, Callable]
    default_feedback: str
    default_x0: Tuple[float, ...]
    m_J: float

    def lyapunov(self, feedback: str = None) -> LyapunovSpec:
        return self.lyap_factory(self.feedbacks[feedback or self.default_feedback])


def _case_study_f(x):
    return np.array([
        -x[0] - x[1] ** 2,
        x[0] * x[1] + x[1] * x[2],
        -x[1] ** 2 - x[2],
    ])


def _case_study_jac_f(x):
    return np.array([
        [-1.0, -2.0 * x[1], 0.0],
        [x[1], x[0] + x[2], x[1]],
        [0.0, -2.0 * x[1], -1.0],
    ])


def _kappa1(x):
    return np.array([-(x[0] + x[1]), -x[1]])


def _kappa2(x):
    return np.array([-(x[0] + x[1] + x[2]), 0.0])


def _case_study_lyapunov(kappa: Callable) -> LyapunovSpec:
    return LyapunovSpec(
        V=lambda x: 0.5 * hd.dot(x, x),
        grad_V=lambda x: x,
        w=lambda x: 0.1 * hd.dot(x, x),
        kappa=kappa,
        hess_V=lambda x: np.eye(3),
        grad_w=lambda x: 0.2 * np.asarray(x, dtype=float),
    )


CASE_STUDY = ScenarioDefinition(
    key='case_study',
    description='Three-state nonlinear plant, J = (u1^2 + 3 u2^2)/2, V = |x|^2/2, w = 0.1 |x|^2',
    n=3,
    m=2,
    plant=PlantModel(
        n=3, m=2,
        f=_case_study_f,
        g=lambda x: _CASE_STUDY_G,
        jac_f=_case_study_jac_f,
        jac_g_cols=(lambda x: np.zeros((3, 3)), lambda x: np.zeros((3, 3))),
    ),
    lyap_factory=_case_study_lyapunov,
    cost=CostSpec(
        J=lambda u, x: 0.5 * (u[0] * u[0] + 3.0 * u[1] * u[1]),
        grad_u=lambda u, x: np.array([u[0], 3.0 * u[1]]),
        hess_uu=lambda u, x: np.diag([1.0, 3.0]),
        mixed_ux=lambda u, x: np.zeros((2, 3)),
    ),
    feedbacks={'kappa1': _kappa1, 'kappa2': _kappa2},
    default_feedback='kappa1',
    default_x0=(-9.0, -7.0, -5.0),
    m_J=1.0,
)


def _scalar_lyapunov(kappa: Callable) -> LyapunovSpec:
    return LyapunovSpec(
        V=lambda x: 0.5 * x[0] * x[0],
        grad_V=lambda x: x,
        w=lambda x: 0.1 * x[0] * x[0],
        kappa=kappa,
    )


SCALAR_UNSTABLE = ScenarioDefinition(
    key='scalar_unstable',
    description="Unstable scalar plant x' = x + u, J = u^2/2, V = x^2/2, w = 0.1 x^2",
    n=1,
    m=1,
    plant=PlantModel(
        n=1, m=1,
        f=lambda x: x,
        g=lambda x: np.ones((1, 1)),
    ),
    lyap_factory=_scalar_lyapunov,
    cost=CostSpec(J=lambda u, x: 0.5 * u[0] * u[0]),
    feedbacks={'kappa': lambda x: -2.0 * np.asarray(x, dtype=float)},
    default_feedback='kappa',
    default_x0=(2.0,),
    m_J=1.0,
)


BUILTIN_SCENARIOS: Dict[str, ScenarioDefinition] = {
    CASE_STUDY.key: CASE_STUDY,
    SCALAR_UNSTABLE.key: SCALAR_UNSTABLE,
}


def get_scenario(key: str) -> ScenarioDefinition:
    try:
        return BUILTIN_SCENARIOS[key]
    except KeyError:
        raise KeyError(f"Unknown scenario '{key}'. Available: {sorted(BUILTIN_SCENARIOS)}") from None


def build_problem(cfg: "ScenarioConfig") -> RelaxedProblem:
    """RelaxedProblem for a scenario config (inverse barrier, exponential weight)."""
    definition = get_scenario(cfg.scenario)
    return RelaxedProblem(
        plant=definition.plant,
        lyap=definition.lyapunov(cfg.kappa),
        cost=definition.cost,
        barrier=BarrierSpec.inverse(),
        weight=WeightSchedule.exponential(cfg.mu_rate),
        gamma=cfg.gamma,
        m_J=definition.m_J,
        derivative_source=cfg.derivatives,
        name=definition.key,
    )


def build_tracking_config(cfg: "ScenarioConfig") -> TrackingConfig:
    gain = None if cfg.ec_gain_diag is None else np.diag(cfg.ec_gain_diag)
    return TrackingConfig(law=cfg.law, tau=cfg.tau, ec_gain=gain, deadband_eps=cfg.deadband_eps)


def resolve_initial_values(cfg: "ScenarioConfig", problem: RelaxedProblem):
    """(x0, u0) for a config: scenario default x0 unless overridden, u0 from u0_mode."""
    definition = get_scenario(cfg.scenario)
    x0 = np.asarray(cfg.x0 if cfg.x0 is not None else definition.default_x0, dtype=float)
    u0 = cfg.u0_mode.resolve(problem.lyap.kappa(x0))
    return x0, u0
