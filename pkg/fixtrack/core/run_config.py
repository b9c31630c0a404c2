"""
Scenario configuration objects.

A ScenarioConfig names a registered scenario and overrides the parameters a
run needs: law, settling time, barrier margin and weight rate, initial
values and the integrator/oracle blocks. The defaults are the settings of
the reference case study.
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConfigValidationError
from .integrator import IntegratorConfig
from .metrics import DEFAULT_TOL_SETTLE
from .oracle_solver import OracleConfig
from .problem_model import DerivativeSource
from .tracking_laws import TrackingLaw
from .fixed_time_law import DEFAULT_DEADBAND_EPS

_SCALED = re.compile(r'^scaled\(\s*([^)]+?)\s*\)$', re.IGNORECASE)
_EXPLICIT = re.compile(r'^explicit\(\s*([^)]*?)\s*\)$', re.IGNORECASE)


class U0Kind(Enum):
    KAPPA = 'kappa'
    SCALED = 'scaled'
    EXPLICIT = 'explicit'


@dataclass(frozen=True)
class U0Mode:
    """How u(0) is chosen: kappa(x0), factor * kappa(x0) or explicit values."""

    kind: U0Kind = U0Kind.KAPPA
    factor: float = 1.0
    values: Optional[Tuple[float, ...]] = None

    @classmethod
    def parse(cls, text) -> "U0Mode":
        """Parse 'kappa', 'scaled(<f>)' or 'explicit(<a>, <b>, ...)'."""
        if isinstance(text, cls):
            return text
        raw = str(text).strip()
        if raw.lower() == 'kappa':
            return cls()
        match = _SCALED.match(raw)
        if match:
            try:
                return cls(U0Kind.SCALED, factor=float(match.group(1)))
            except ValueError:
                raise ConfigValidationError(f"invalid scale factor in '{raw}'", field='u0_mode')
        match = _EXPLICIT.match(raw)
        if match:
            try:
                values = tuple(float(v) for v in match.group(1).split(',') if v.strip())
            except ValueError:
                raise ConfigValidationError(f"invalid explicit values in '{raw}'", field='u0_mode')
            if not values:
                raise ConfigValidationError("explicit() needs at least one value", field='u0_mode')
            return cls(U0Kind.EXPLICIT, values=values)
        raise ConfigValidationError(
            f"unknown u0_mode '{raw}'; expected kappa, scaled(<factor>) or explicit(<values>)",
            field='u0_mode')

    def resolve(self, kappa_x0: Sequence[float]) -> np.ndarray:
        kappa_x0 = np.asarray(kappa_x0, dtype=float)
        if self.kind is U0Kind.KAPPA:
            return kappa_x0.copy()
        if self.kind is U0Kind.SCALED:
            return self.factor * kappa_x0
        values = np.asarray(self.values, dtype=float)
        if values.shape != kappa_x0.shape:
            raise ConfigValidationError(
                f"explicit u0 needs {kappa_x0.size} values, got {values.size}", field='u0_mode')
        return values

    def __str__(self) -> str:
        if self.kind is U0Kind.KAPPA:
            return 'kappa'
        if self.kind is U0Kind.SCALED:
            return f'scaled({self.factor!r})'
        return 'explicit(' + ', '.join(repr(v) for v in self.values) + ')'


@dataclass
class ScenarioConfig:
    """
    Everything one run needs.

    Example:
        cfg = ScenarioConfig(scenario='case_study', law='EC', u0_mode='scaled(0.5)')
    """

    scenario: str = 'case_study'
    law: TrackingLaw = TrackingLaw.FC
    tau: float = 3.0
    gamma: float = 0.01
    mu_rate: float = 1.0
    x0: Optional[List[float]] = None
    kappa: Optional[str] = None
    u0_mode: U0Mode = field(default_factory=U0Mode)
    ec_gain_diag: Optional[List[float]] = None
    deadband_eps: float = DEFAULT_DEADBAND_EPS
    derivatives: DerivativeSource = DerivativeSource.AUTO
    tol_settle: float = DEFAULT_TOL_SETTLE
    output_path: str = 'results'
    label: Optional[str] = None
    plot_script: bool = False
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)

    def __post_init__(self):
        """Normalize enums and validate scalar invariants"""
        try:
            self.law = TrackingLaw.from_string(self.law)
        except ValueError as e:
            raise ConfigValidationError(str(e), field='law')
        try:
            self.derivatives = DerivativeSource.from_string(self.derivatives)
        except ValueError as e:
            raise ConfigValidationError(str(e), field='derivatives')
        self.u0_mode = U0Mode.parse(self.u0_mode)

        for name in ('tau', 'gamma', 'mu_rate', 'deadband_eps', 'tol_settle'):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
                raise ConfigValidationError(f"{name} must be a positive number, got {value!r}", field=name)
            setattr(self, name, float(value))

        from .built_ins.scenarios import BUILTIN_SCENARIOS
        if self.scenario not in BUILTIN_SCENARIOS:
            raise ConfigValidationError(
                f"unknown scenario '{self.scenario}'. Available: {sorted(BUILTIN_SCENARIOS)}",
                field='scenario')
        definition = BUILTIN_SCENARIOS[self.scenario]

        if self.x0 is not None:
            self.x0 = [float(v) for v in self.x0]
            if len(self.x0) != definition.n:
                raise ConfigValidationError(
                    f"x0 needs {definition.n} values for '{self.scenario}', got {len(self.x0)}", field='x0')
        if self.kappa is not None and self.kappa not in definition.feedbacks:
            raise ConfigValidationError(
                f"unknown feedback '{self.kappa}' for '{self.scenario}'. "
                f"Available: {sorted(definition.feedbacks)}", field='kappa')
        if self.ec_gain_diag is not None:
            self.ec_gain_diag = [float(v) for v in self.ec_gain_diag]
            if len(self.ec_gain_diag) != definition.m:
                raise ConfigValidationError(
                    f"ec_gain_diag needs {definition.m} values, got {len(self.ec_gain_diag)}",
                    field='ec_gain_diag')
            if min(self.ec_gain_diag) <= 0:
                raise ConfigValidationError("ec_gain_diag entries must be positive", field='ec_gain_diag')

    @property
    def run_label(self) -> str:
        return self.label or f"{self.scenario}_{self.law.name.lower()}"
