"""
Core package for fixtrack.

Provides the fixed-time law, the relaxed problem model and its derivative
engines, the FC/EC tracking laws, the guarded integrator, the oracle and
the experiment runner.
"""

from .exceptions import (
    BarrierDomainError, ConfigValidationError, ContractViolation, DomainError,
    FixtrackError, IntegrationFailure, OracleFailure,
)
from .problem_model import RelaxedProblem
from .tracking_laws import TrackingConfig, TrackingLaw
from .integrator import IntegratorConfig, Trajectory, integrate
from .oracle_solver import OracleConfig, solve_ustar
from .metrics import SummaryMetrics
from .run_config import ScenarioConfig
from .experiment_runner import ExperimentRunner

__all__ = [
    'BarrierDomainError',
    'ConfigValidationError',
    'ContractViolation',
    'DomainError',
    'FixtrackError',
    'IntegrationFailure',
    'OracleFailure',
    'RelaxedProblem',
    'TrackingConfig',
    'TrackingLaw',
    'IntegratorConfig',
    'Trajectory',
    'integrate',
    'OracleConfig',
    'solve_ustar',
    'SummaryMetrics',
    'ScenarioConfig',
    'ExperimentRunner',
]
