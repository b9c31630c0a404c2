"""
Exception hierarchy for fixtrack.

Exception Categories:
    FixtrackError: Base exception for everything raised by the library
    DomainError: Non-finite inputs or non-positive settling times
    ContractViolation: Dimension mismatches and failed SPD factorizations
    BarrierDomainError: Derivatives requested at an infeasible point
    IntegrationFailure: The stepper gave up; carries the last good state
    OracleFailure: The minimizer could not be computed
    ConfigValidationError: Scenario file parse or validation problems

Infeasibility of a cost evaluation is not an error: relaxed_cost returns
INFEASIBLE_COST so line searches can probe outside the barrier domain.
"""

import math
from typing import Any, Optional, Tuple

INFEASIBLE_COST = math.inf


class FixtrackError(Exception):
    """Base exception for fixtrack errors."""
    pass


class DomainError(FixtrackError, ValueError):
    """Raised for non-finite arguments or parameters outside their domain."""
    pass


class ContractViolation(FixtrackError):
    """Raised when a caller breaks a shape or positive-definiteness contract."""
    pass


class BarrierDomainError(FixtrackError):
    """Raised when a derivative is requested where phi(u, x) >= gamma."""

    def __init__(self, message: str, phi_minus_gamma: float):
        super().__init__(f"{message} (phi - gamma = {phi_minus_gamma:.6g})")
        self.phi_minus_gamma = phi_minus_gamma


class IntegrationFailure(FixtrackError):
    """Raised when the integrator cannot take another acceptable step."""

    def __init__(self, message: str, last_state: Optional[Tuple[float, Any]] = None,
                 trajectory: Any = None):
        super().__init__(message)
        self.last_state = last_state
        self.trajectory = trajectory


class OracleFailure(FixtrackError):
    """Raised when the minimizer solve does not converge or has no feasible start."""

    def __init__(self, message: str, last_iterate: Any = None, trajectory: Any = None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.trajectory = trajectory


class ConfigValidationError(FixtrackError, ValueError):
    """Raised for malformed or invalid scenario configurations."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        full = f"{message} ({', '.join(location)})" if location else message
        super().__init__(full)
        self.reason = message
        self.field = field
        self.line = line
