"""
Pass/fail summary of a tracking run.

Every metric is a function of the sampled columns alone, so a summary can
be recomputed from an emitted CSV without rerunning the integration.
"""

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from .exceptions import ContractViolation

DEFAULT_TOL_SETTLE = 1e-4


@dataclass
class SummaryMetrics:
    """Headline numbers for one run; NaN where a quantity is undefined."""

    tau: float
    tol_settle: float
    err_at_tau: float
    grad_norm_at_tau: float
    max_grad_norm_after_tau: float
    max_phi_minus_gamma: float
    settle_time_measured: float
    final_state_norm: float
    final_cost: float
    feasible: bool
    accepted_steps: Optional[int] = None
    guard_rejections: Optional[int] = None
    total_rejections: Optional[int] = None
    dt_tightened: bool = False

    @property
    def settled_by_tau(self) -> bool:
        return (not math.isnan(self.settle_time_measured)
                and self.settle_time_measured <= self.tau + 1e-9)

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _first_index_at_or_after(times: np.ndarray, t: float) -> Optional[int]:
    hits = np.nonzero(times >= t - 1e-9)[0]
    return int(hits[0]) if hits.size else None


def metrics_from_frame(frame: pd.DataFrame, tau: float,
                       tol_settle: float = DEFAULT_TOL_SETTLE) -> SummaryMetrics:
    """Summary metrics from a trajectory table with the CSV column schema."""
    if frame.empty:
        raise ContractViolation("trajectory table has no rows")
    times = frame['t'].to_numpy()
    err = frame['err'].to_numpy()
    grad_norm = frame['grad_norm'].to_numpy()
    margin = frame['phi_minus_gamma'].to_numpy()
    state_columns = [c for c in frame.columns if c.startswith('x') and c[1:].isdigit()]

    i_tau = _first_index_at_or_after(times, tau)
    if i_tau is None:
        err_at_tau = grad_at_tau = max_after = math.nan
    else:
        err_at_tau = float(err[i_tau])
        grad_at_tau = float(grad_norm[i_tau])
        max_after = float(np.max(grad_norm[i_tau:]))

    # first sample from which grad_norm stays within tolerance
    above = np.nonzero(grad_norm > tol_settle)[0]
    if above.size == 0:
        settle = float(times[0])
    elif above[-1] + 1 < times.size:
        settle = float(times[above[-1] + 1])
    else:
        settle = math.nan

    max_margin = float(np.max(margin))
    return SummaryMetrics(
        tau=float(tau),
        tol_settle=float(tol_settle),
        err_at_tau=err_at_tau,
        grad_norm_at_tau=grad_at_tau,
        max_grad_norm_after_tau=max_after,
        max_phi_minus_gamma=max_margin,
        settle_time_measured=settle,
        final_state_norm=float(np.linalg.norm(frame[state_columns].to_numpy()[-1])),
        final_cost=float(frame['cost'].to_numpy()[-1]),
        feasible=bool(max_margin < 0),
    )


def compute_summary_metrics(trajectory, tau: float, tol_settle: float = DEFAULT_TOL_SETTLE,
                            dt_tightened: bool = False) -> SummaryMetrics:
    """Summary metrics of an in-memory Trajectory, with its step statistics."""
    metrics = metrics_from_frame(trajectory.to_dataframe(), tau, tol_settle)
    metrics.feasible = metrics.feasible and not trajectory.failed
    stats = trajectory.metadata.get('step_statistics')
    if stats:
        metrics.accepted_steps = stats['accepted_steps']
        metrics.guard_rejections = stats['guard_rejections']
        metrics.total_rejections = stats['total_rejections']
    metrics.dt_tightened = dt_tightened
    return metrics


def summary_from_csv(path: Union[str, Path], tau: float,
                     tol_settle: float = DEFAULT_TOL_SETTLE) -> SummaryMetrics:
    """Recompute summary metrics from an emitted trajectory CSV."""
    return metrics_from_frame(pd.read_csv(path), tau, tol_settle)
