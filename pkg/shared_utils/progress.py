# shared_utils/progress.py
"""
Progress reporting for simulation runs and parameter sweeps

A batch is a list of runs (one for `run`, several for a sweep); each run
advances through simulated time from 0 to its horizon. Reporters share one
interface so the integrator and the experiment runner never care whether
output goes to a terminal, a callback or nowhere.

Usage:
    from shared_utils.progress import CLIProgressReporter

    progress = CLIProgressReporter()
    progress.start_batch(total_runs=4)

    for label in labels:
        progress.start_run(label, t_end=6.0)
        # ... integrator calls progress.update_time(t) per sample ...
        progress.complete_run(label, ok=True)

    progress.complete_batch(elapsed=12.5)
"""

import sys
import time
import threading
from abc import ABC, abstractmethod
from typing import Optional, Callable, Any

try:
    from tqdm import tqdm
    TQDM_AVAILABLE = True
except ImportError:
    TQDM_AVAILABLE = False


class BaseProgressReporter(ABC):
    """Base class for progress reporting with consistent interface"""

    def __init__(self):
        self.current_run = None
        self.runs_completed = 0
        self.runs_failed = 0
        self.total_runs = 0
        self.sim_time = 0.0
        self.t_end = 0.0
        self.start_time = None
        self.lock = threading.Lock()

    @abstractmethod
    def start_batch(self, total_runs: int):
        """Initialize tracking for a batch of runs"""
        pass

    @abstractmethod
    def start_run(self, label: str, t_end: float):
        """Report the start of one integration"""
        pass

    @abstractmethod
    def update_time(self, t: float):
        """Report simulated time reached by the current run"""
        pass

    @abstractmethod
    def complete_run(self, label: str, ok: bool = True):
        """Report completion (or failure) of a run"""
        pass

    @abstractmethod
    def complete_batch(self, elapsed: float):
        """Report completion of the whole batch"""
        pass

    def _record_run_start(self, label: str, t_end: float):
        with self.lock:
            self.current_run = label
            self.sim_time = 0.0
            self.t_end = t_end

    def _record_run_end(self, ok: bool):
        with self.lock:
            if ok:
                self.runs_completed += 1
            else:
                self.runs_failed += 1

    def get_progress_summary(self) -> dict:
        """Get current progress statistics"""
        with self.lock:
            elapsed = time.time() - self.start_time if self.start_time else 0
            return {
                'runs_completed': self.runs_completed,
                'runs_failed': self.runs_failed,
                'total_runs': self.total_runs,
                'current_run': self.current_run,
                'sim_time': self.sim_time,
                'elapsed_time': elapsed,
            }


class CLIProgressReporter(BaseProgressReporter):
    """Terminal progress with tqdm bars, plain lines when tqdm is missing"""

    def __init__(self, use_tqdm: bool = None, stream=None):
        super().__init__()
        self.use_tqdm = use_tqdm if use_tqdm is not None else TQDM_AVAILABLE
        self.stream = stream or sys.stderr
        self.batch_bar = None
        self.time_bar = None

    def start_batch(self, total_runs: int):
        with self.lock:
            self.total_runs = total_runs
            self.runs_completed = 0
            self.runs_failed = 0
            self.start_time = time.time()

        if self.use_tqdm and total_runs > 1:
            self.batch_bar = tqdm(total=total_runs, desc="Runs", unit="run",
                                  position=0, leave=True, file=self.stream)
        elif not self.use_tqdm:
            print(f"Starting {total_runs} run(s)...", file=self.stream)

    def start_run(self, label: str, t_end: float):
        self._record_run_start(label, t_end)
        if self.use_tqdm:
            if self.time_bar:
                self.time_bar.close()
            self.time_bar = tqdm(total=t_end, desc=f"  {label}", unit="s",
                                 position=1 if self.batch_bar else 0,
                                 leave=False, file=self.stream,
                                 bar_format="{desc}: {percentage:3.0f}%|{bar}| t={n:.2f}/{total:.2f}s")
        else:
            print(f"Integrating {label} to t={t_end:g}s", file=self.stream)

    def update_time(self, t: float):
        with self.lock:
            advance = t - self.sim_time
            self.sim_time = t
        if self.time_bar and advance > 0:
            self.time_bar.update(advance)

    def complete_run(self, label: str, ok: bool = True):
        self._record_run_end(ok)
        if self.use_tqdm:
            if self.time_bar:
                self.time_bar.close()
                self.time_bar = None
            if self.batch_bar:
                self.batch_bar.update(1)
        else:
            status = "done" if ok else "FAILED"
            print(f"  {label}: {status}", file=self.stream)

    def complete_batch(self, elapsed: float):
        if self.batch_bar:
            self.batch_bar.close()
            self.batch_bar = None
        print(f"Completed {self.runs_completed}/{self.total_runs} run(s) "
              f"({self.runs_failed} failed) in {elapsed:.2f}s", file=self.stream)


class CallbackProgressReporter(BaseProgressReporter):
    """Progress reporter that forwards events to a callback"""

    def __init__(self, callback: Callable[[str, Any], None]):
        super().__init__()
        self.callback = callback

    def start_batch(self, total_runs: int):
        with self.lock:
            self.total_runs = total_runs
            self.start_time = time.time()
        self.callback('batch_start', total_runs)

    def start_run(self, label: str, t_end: float):
        self._record_run_start(label, t_end)
        self.callback('run_start', {'label': label, 't_end': t_end})

    def update_time(self, t: float):
        with self.lock:
            self.sim_time = t
            fraction = t / self.t_end if self.t_end > 0 else 1.0
        self.callback('percentage', 100.0 * fraction)

    def complete_run(self, label: str, ok: bool = True):
        self._record_run_end(ok)
        self.callback('run_complete', {'label': label, 'ok': ok})

    def complete_batch(self, elapsed: float):
        self.callback('complete', {
            'runs_completed': self.runs_completed,
            'runs_failed': self.runs_failed,
            'elapsed': elapsed,
        })


class NullProgressReporter(BaseProgressReporter):
    """Silent progress reporter for library use and testing"""

    def start_batch(self, total_runs: int):
        with self.lock:
            self.total_runs = total_runs
            self.start_time = time.time()

    def start_run(self, label: str, t_end: float):
        self._record_run_start(label, t_end)

    def update_time(self, t: float):
        with self.lock:
            self.sim_time = t

    def complete_run(self, label: str, ok: bool = True):
        self._record_run_end(ok)

    def complete_batch(self, elapsed: float):
        pass


def create_progress_reporter(mode: str = 'auto', **kwargs) -> BaseProgressReporter:
    """
    Factory function to create appropriate progress reporter

    Args:
        mode: 'cli', 'callback', 'null', or 'auto'
        **kwargs: Additional arguments passed to reporter constructor
    """
    if mode == 'auto':
        stream = sys.stderr
        mode = 'cli' if hasattr(stream, 'isatty') and stream.isatty() else 'null'

    if mode == 'cli':
        return CLIProgressReporter(**kwargs)
    elif mode == 'callback':
        if 'callback' not in kwargs:
            raise ValueError("Callback mode requires 'callback' parameter")
        return CallbackProgressReporter(kwargs['callback'])
    elif mode == 'null':
        return NullProgressReporter()
    else:
        raise ValueError(f"Unknown progress reporter mode: {mode}")
