"""
Experiment orchestration: single runs, initial-value and settling-time
sweeps, and FC/EC comparisons.

Every run integrates its own trajectory and writes its own files, so sweeps
fan out on a thread pool over immutable problem definitions.
"""

import dataclasses
import math
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from shared_utils.logger import get_logger, log_performance
from shared_utils.progress import BaseProgressReporter, NullProgressReporter
from .built_ins.scenarios import build_problem, build_tracking_config, resolve_initial_values
from .exceptions import IntegrationFailure, OracleFailure
from .integrator import Trajectory, integrate
from .metrics import SummaryMetrics, compute_summary_metrics
from .problem_model import feasibility_margin
from .run_config import ScenarioConfig, U0Kind, U0Mode
from .services.output_writer import OutputWriter
from .tracking_laws import TrackingLaw

SHORT_TAU = 0.1
SHORT_TAU_MAX_DT = 1e-5
STEPS_PER_TAU = 3000

DEFAULT_U0_FACTORS = (0.25, 0.5, 1.0, 2.0)
DEFAULT_TAUS = (0.5, 1.0, 3.0, 5.0)

PathLike = Union[str, Path]


def step_size_too_coarse(tau: float, dt: float) -> bool:
    """Short settling times make the tracking ODE stiff near the settling instant."""
    return tau < SHORT_TAU and dt > SHORT_TAU_MAX_DT


def tighten_step_for_tau(dt: float, tau: float) -> Tuple[float, bool]:
    """
    Step size for a settling time: min(dt, tau/3000), and at most 1e-5 when
    tau < 0.1. Returns (dt, tightened).
    """
    tightened = min(dt, tau / STEPS_PER_TAU)
    if tau < SHORT_TAU:
        tightened = min(tightened, SHORT_TAU_MAX_DT)
    return tightened, tightened < dt


@dataclass
class RunResult:
    """Trajectory, metrics and written files of one run."""

    label: str
    trajectory: Trajectory
    metrics: SummaryMetrics
    csv_path: Optional[Path] = None
    summary_path: Optional[Path] = None
    script_path: Optional[Path] = None


@dataclass
class SweepEntry:
    """One point of a sweep; status is 'ok', 'skipped' (infeasible u0) or 'failed'."""

    parameter: str
    value: float
    label: str
    status: str
    metrics: Optional[SummaryMetrics] = None
    initial_phi_minus_gamma: float = math.nan
    message: str = ''
    result: Optional[RunResult] = None


@dataclass
class SweepResult:
    parameter: str
    entries: List[SweepEntry] = field(default_factory=list)
    table_path: Optional[Path] = None

    @property
    def failed(self) -> List[SweepEntry]:
        return [e for e in self.entries if e.status == 'failed']

    @property
    def skipped(self) -> List[SweepEntry]:
        return [e for e in self.entries if e.status == 'skipped']

    def to_dataframe(self) -> pd.DataFrame:
        metric_names = [f.name for f in dataclasses.fields(SummaryMetrics)
                        if f.name != 'tau' or self.parameter != 'tau']
        columns = [self.parameter, 'label', 'status', 'initial_phi_minus_gamma', *metric_names, 'message']
        rows = []
        for entry in self.entries:
            row: Dict[str, Any] = {
                self.parameter: entry.value,
                'label': entry.label,
                'status': entry.status,
                'initial_phi_minus_gamma': entry.initial_phi_minus_gamma,
            }
            metrics = entry.metrics.as_dict() if entry.metrics else {}
            for name in metric_names:
                row[name] = metrics.get(name, math.nan)
            row['message'] = entry.message
            rows.append(row)
        return pd.DataFrame(rows, columns=columns)


@dataclass
class ComparisonResult:
    """FC and EC runs of one config and their joint table."""

    fc: RunResult
    ec: RunResult
    frame: pd.DataFrame
    path: Optional[Path] = None


def joint_frame(fc: Trajectory, ec: Trajectory) -> pd.DataFrame:
    """t, then states, err and grad_norm of both laws prefixed fc_/ec_."""
    columns: Dict[str, np.ndarray] = {'t': fc.times}
    for prefix, trajectory in (('fc', fc), ('ec', ec)):
        count = min(len(fc), len(trajectory))
        states = trajectory.states()
        for i in range(trajectory.n):
            columns[f'{prefix}_x{i + 1}'] = _pad(states[:count, i], len(fc))
        columns[f'{prefix}_err'] = _pad(trajectory.column('err')[:count], len(fc))
        columns[f'{prefix}_grad_norm'] = _pad(trajectory.column('grad_norm')[:count], len(fc))
    return pd.DataFrame(columns)


def _pad(values: np.ndarray, length: int) -> np.ndarray:
    if values.size >= length:
        return values[:length]
    return np.concatenate([values, np.full(length - values.size, np.nan)])


class ExperimentRunner:
    """
    Runs scenario configs and writes their artifacts.

    Args:
        workers: thread pool size for sweeps (1 runs them in order)
        output_dir: overrides each config's output_path
        write_outputs: False keeps everything in memory
        table_format: 'csv' or 'xlsx' for sweep tables
    """

    def __init__(self, workers: int = 1, output_dir: Optional[PathLike] = None,
                 write_outputs: bool = True, table_format: str = 'csv'):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        if table_format not in ('csv', 'xlsx'):
            raise ValueError(f"table_format must be 'csv' or 'xlsx', got {table_format!r}")
        self.workers = workers
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.write_outputs = write_outputs
        self.table_format = table_format
        self._logger = get_logger('fixtrack.experiment_runner')
        self._progress: BaseProgressReporter = NullProgressReporter()
        self._writer = OutputWriter()

    def set_progress_reporter(self, progress_reporter: BaseProgressReporter):
        self._progress = progress_reporter

    def _output_dir(self, cfg: ScenarioConfig) -> Path:
        return self.output_dir if self.output_dir is not None else Path(cfg.output_path)

    def _execute(self, cfg: ScenarioConfig, progress: BaseProgressReporter,
                 dt_tightened: bool = False) -> RunResult:
        label = cfg.run_label
        if step_size_too_coarse(cfg.tau, cfg.integrator.dt):
            self._logger.warning("Step size too coarse for short settling time",
                                 label=label, tau=cfg.tau, dt=cfg.integrator.dt,
                                 max_dt=SHORT_TAU_MAX_DT)

        problem = build_problem(cfg)
        tracking = build_tracking_config(cfg)
        x0, u0 = resolve_initial_values(cfg, problem)
        metadata = {
            'scenario': cfg.scenario,
            'x0': x0.tolist(),
            'u0': u0.tolist(),
            'u0_mode': str(cfg.u0_mode),
            'gamma': cfg.gamma,
            'mu_rate': cfg.mu_rate,
            'dt_tightened': dt_tightened,
        }
        out_dir = self._output_dir(cfg)
        csv_path = out_dir / f'{label}.csv'

        try:
            trajectory = integrate(problem, tracking, cfg.integrator, x0, u0,
                                   oracle_config=cfg.oracle, metadata=metadata,
                                   progress=progress, label=label)
        except (IntegrationFailure, OracleFailure) as e:
            if self.write_outputs and e.trajectory is not None and len(e.trajectory):
                self._writer.emit_csv(e.trajectory, csv_path)
            raise

        metrics = compute_summary_metrics(trajectory, cfg.tau, cfg.tol_settle, dt_tightened)
        result = RunResult(label=label, trajectory=trajectory, metrics=metrics)
        if self.write_outputs:
            result.csv_path = self._writer.emit_csv(trajectory, csv_path)
            result.summary_path = self._writer.write_summary(
                metrics, out_dir / f'{label}_summary.txt', trajectory.metadata)
            if cfg.plot_script:
                result.script_path = self._writer.write_gnuplot_script(
                    csv_path, out_dir / f'{label}.gp', trajectory.column_names(),
                    tau=cfg.tau, title=label)

        self._logger.info("Run complete", label=label, err_at_tau=metrics.err_at_tau,
                          grad_norm_at_tau=metrics.grad_norm_at_tau,
                          max_phi_minus_gamma=metrics.max_phi_minus_gamma,
                          settle_time=metrics.settle_time_measured)
        return result

    def run_scenario(self, cfg: ScenarioConfig) -> RunResult:
        """Integrate one config, fill the oracle columns, write CSV and summary."""
        with log_performance("run_scenario", logger=self._logger, label=cfg.run_label):
            self._progress.start_batch(1)
            started = time.perf_counter()
            try:
                return self._execute(cfg, self._progress)
            finally:
                self._progress.complete_batch(time.perf_counter() - started)

    def _run_entries(self, parameter: str, jobs: List[Tuple[float, ScenarioConfig, bool]],
                     entries: List[SweepEntry]):
        """Run the feasible jobs (value, cfg, dt_tightened), appending their entries."""
        if not jobs:
            return

        def run_one(job, progress):
            value, cfg, tightened = job
            try:
                result = self._execute(cfg, progress, tightened)
            except (IntegrationFailure, OracleFailure) as e:
                self._logger.error("Sweep run failed", label=cfg.run_label, exception=e)
                return SweepEntry(parameter, value, cfg.run_label, 'failed', message=str(e))
            return SweepEntry(parameter, value, cfg.run_label, 'ok',
                              metrics=result.metrics, result=result)

        completed: Dict[int, SweepEntry] = {}
        if self.workers == 1 or len(jobs) == 1:
            for index, job in enumerate(jobs):
                completed[index] = run_one(job, self._progress)
        else:
            # per-run time bars would interleave; report completions only
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                futures = {pool.submit(run_one, job, NullProgressReporter()): index
                           for index, job in enumerate(jobs)}
                for future in as_completed(futures):
                    entry = future.result()
                    completed[futures[future]] = entry
                    self._progress.complete_run(entry.label, ok=entry.status == 'ok')
        entries.extend(completed[i] for i in range(len(jobs)))

    def _finish_sweep(self, sweep: SweepResult, base_cfg: ScenarioConfig, name: str) -> SweepResult:
        sweep.entries.sort(key=lambda e: e.value)
        if self.write_outputs:
            path = self._output_dir(base_cfg) / f'{base_cfg.run_label}_{name}.{self.table_format}'
            sweep.table_path = self._writer.write_table(sweep.to_dataframe(), path)
        self._logger.info("Sweep complete", sweep=name, runs=len(sweep.entries),
                          skipped=len(sweep.skipped), failed=len(sweep.failed))
        return sweep

    def sweep_initial_values(self, base_cfg: ScenarioConfig,
                             factors: Sequence[float] = DEFAULT_U0_FACTORS) -> SweepResult:
        """
        One run per u(0) = factor * kappa(x0). Factors whose u(0) is not
        strictly feasible are skipped and recorded with their phi - gamma.
        """
        sweep = SweepResult(parameter='factor')
        jobs = []
        margins: Dict[str, float] = {}
        with log_performance("sweep_initial_values", logger=self._logger,
                             factors=list(factors), workers=self.workers):
            for factor in factors:
                cfg = dataclasses.replace(
                    base_cfg, u0_mode=U0Mode(U0Kind.SCALED, factor=float(factor)),
                    label=f'{base_cfg.run_label}_u0x{factor:g}')
                problem = build_problem(cfg)
                x0, u0 = resolve_initial_values(cfg, problem)
                margin = feasibility_margin(problem, u0, x0)
                if not margin < 0:
                    self._logger.warning("Skipping infeasible initial control", factor=factor,
                                         u0=u0.tolist(), phi_minus_gamma=margin)
                    sweep.entries.append(SweepEntry(
                        'factor', float(factor), cfg.run_label, 'skipped',
                        initial_phi_minus_gamma=margin,
                        message=f'u0 infeasible (phi - gamma = {margin:.6g})'))
                    continue
                margins[cfg.run_label] = margin
                jobs.append((float(factor), cfg, False))

            self._progress.start_batch(len(jobs))
            started = time.perf_counter()
            entries: List[SweepEntry] = []
            self._run_entries('factor', jobs, entries)
            self._progress.complete_batch(time.perf_counter() - started)

            for entry in entries:
                entry.initial_phi_minus_gamma = margins[entry.label]
            sweep.entries.extend(entries)
        return self._finish_sweep(sweep, base_cfg, 'sweep_u0')

    def sweep_settling_times(self, base_cfg: ScenarioConfig,
                             taus: Sequence[float] = DEFAULT_TAUS) -> SweepResult:
        """
        One run per settling time. dt is tightened to min(dt, tau/3000) and
        t_end extended to cover tau with one second to spare.
        """
        sweep = SweepResult(parameter='tau')
        jobs = []
        with log_performance("sweep_settling_times", logger=self._logger,
                             taus=list(taus), workers=self.workers):
            for tau in taus:
                tau = float(tau)
                integ = base_cfg.integrator
                if step_size_too_coarse(tau, integ.dt):
                    self._logger.warning("Step size too coarse for short settling time",
                                         tau=tau, dt=integ.dt, max_dt=SHORT_TAU_MAX_DT)
                dt, tightened = tighten_step_for_tau(integ.dt, tau)
                if tightened:
                    self._logger.warning("Tightening step size", tau=tau, dt_from=integ.dt, dt_to=dt)
                t_end = integ.t_end if integ.t_end > tau else tau + 1.0
                integ = dataclasses.replace(integ, dt=dt, t_end=t_end,
                                            sample_dt=max(integ.sample_dt, dt))
                cfg = dataclasses.replace(base_cfg, tau=tau, integrator=integ,
                                          label=f'{base_cfg.run_label}_tau{tau:g}')
                jobs.append((tau, cfg, tightened))

            self._progress.start_batch(len(jobs))
            started = time.perf_counter()
            self._run_entries('tau', jobs, sweep.entries)
            self._progress.complete_batch(time.perf_counter() - started)
        return self._finish_sweep(sweep, base_cfg, 'sweep_tau')

    def compare_laws(self, cfg: ScenarioConfig) -> ComparisonResult:
        """Run cfg under FC and EC and write the joint table."""
        base = cfg.label or cfg.scenario
        configs = {
            law: dataclasses.replace(cfg, law=law, label=f'{base}_{law.name.lower()}')
            for law in (TrackingLaw.FC, TrackingLaw.EC)
        }
        with log_performance("compare_laws", logger=self._logger, label=base):
            self._progress.start_batch(2)
            started = time.perf_counter()
            try:
                if self.workers > 1:
                    with ThreadPoolExecutor(max_workers=2) as pool:
                        futures = {law: pool.submit(self._execute, c, NullProgressReporter())
                                   for law, c in configs.items()}
                        results = {law: f.result() for law, f in futures.items()}
                else:
                    results = {law: self._execute(c, self._progress) for law, c in configs.items()}
            finally:
                self._progress.complete_batch(time.perf_counter() - started)

        fc, ec = results[TrackingLaw.FC], results[TrackingLaw.EC]
        comparison = ComparisonResult(fc=fc, ec=ec, frame=joint_frame(fc.trajectory, ec.trajectory))
        if self.write_outputs:
            comparison.path = self._writer.write_frame(
                comparison.frame, self._output_dir(cfg) / f'{base}_compare.csv')
        self._logger.info("Comparison complete", label=base,
                          fc_err_at_tau=fc.metrics.err_at_tau, ec_err_at_tau=ec.metrics.err_at_tau)
        return comparison


def run_scenario(cfg: ScenarioConfig, output_dir: Optional[PathLike] = None,
                 write_outputs: bool = True) -> RunResult:
    return ExperimentRunner(output_dir=output_dir, write_outputs=write_outputs).run_scenario(cfg)


def sweep_initial_values(base_cfg: ScenarioConfig, factors: Sequence[float] = DEFAULT_U0_FACTORS,
                         workers: int = 1, output_dir: Optional[PathLike] = None,
                         write_outputs: bool = True) -> SweepResult:
    runner = ExperimentRunner(workers=workers, output_dir=output_dir, write_outputs=write_outputs)
    return runner.sweep_initial_values(base_cfg, factors)


def sweep_settling_times(base_cfg: ScenarioConfig, taus: Sequence[float] = DEFAULT_TAUS,
                         workers: int = 1, output_dir: Optional[PathLike] = None,
                         write_outputs: bool = True) -> SweepResult:
    runner = ExperimentRunner(workers=workers, output_dir=output_dir, write_outputs=write_outputs)
    return runner.sweep_settling_times(base_cfg, taus)


def compare_laws(cfg: ScenarioConfig, workers: int = 1, output_dir: Optional[PathLike] = None,
                 write_outputs: bool = True) -> ComparisonResult:
    runner = ExperimentRunner(workers=workers, output_dir=output_dir, write_outputs=write_outputs)
    return runner.compare_laws(cfg)
