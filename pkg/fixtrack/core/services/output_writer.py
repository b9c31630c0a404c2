"""
Output writing service for tracking runs.

Writes trajectory CSVs, key = value summary files, optional gnuplot
companion scripts and sweep/comparison tables (CSV or Excel).
"""

import math
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd

from shared_utils.logger import get_logger

CSV_FLOAT_FORMAT = '%.17g'

PathLike = Union[str, Path]


class OutputWriter:
    """
    Service for writing run artifacts.

    CSV output is byte-deterministic: fixed column order, 17 significant
    digits and '\\n' line endings on every platform.
    """

    def __init__(self):
        self._logger = get_logger('fixtrack.output_writer')

    def _prepare(self, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _failed(self, path: Path, error: OSError):
        self._logger.error("Failed to write output", output_file=str(path), exception=error)
        raise OSError(error.errno, f"cannot write {path}: {error.strerror or error}", str(path)) from error

    def emit_csv(self, trajectory, path: PathLike, include_gradient: bool = False) -> Path:
        """Write the trajectory with header t,x..,u..,ustar..,err,err_sq,phi_minus_gamma,grad_norm,cost."""
        frame = trajectory.to_dataframe(include_gradient=include_gradient)
        path = self.write_frame(frame, path)
        self._logger.info("Trajectory written", output_file=str(path), rows=len(frame))
        return path

    def write_frame(self, frame: pd.DataFrame, path: PathLike) -> Path:
        path = self._prepare(path)
        try:
            frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
        except OSError as e:
            self._failed(path, e)
        return path

    def write_table(self, frame: pd.DataFrame, path: PathLike) -> Path:
        """Sweep or comparison table; .xlsx paths go through openpyxl, everything else is CSV."""
        path = Path(path)
        if path.suffix.lower() == '.xlsx':
            path = self._prepare(path)
            try:
                frame.to_excel(path, index=False, engine='openpyxl')
            except OSError as e:
                self._failed(path, e)
        else:
            self.write_frame(frame, path)
        self._logger.info("Table written", output_file=str(path), rows=len(frame),
                          columns=len(frame.columns))
        return path

    def write_summary(self, metrics, path: PathLike,
                      metadata: Optional[Dict[str, Any]] = None) -> Path:
        """key = value text: selected run metadata first, then every metric."""
        lines = []
        for key in ('label', 'scenario', 'law', 'tau', 'method', 'dt', 'derivative_source'):
            if metadata and key in metadata:
                lines.append(f"{key} = {_format_value(metadata[key])}")
        for key, value in metrics.as_dict().items():
            lines.append(f"{key} = {_format_value(value)}")

        path = self._prepare(path)
        try:
            path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
        except OSError as e:
            self._failed(path, e)
        return path

    def write_gnuplot_script(self, csv_path: PathLike, script_path: PathLike,
                             columns, tau: Optional[float] = None,
                             title: str = '') -> Path:
        """
        Companion script plotting err and grad_norm (log scale) against t.

        columns is the CSV header in order; gnuplot addresses columns by
        1-based position.
        """
        columns = list(columns)
        csv_path = Path(csv_path)
        script_path = Path(script_path)
        image = script_path.with_suffix('.png').name
        plotted = [c for c in ('err', 'grad_norm') if c in columns]
        plot_terms = [
            f"'{csv_path.name}' using 1:{columns.index(c) + 1} with lines lw 2 title '{c}'"
            for c in plotted
        ]
        lines = [
            f"# {title}" if title else "# fixtrack run",
            "set datafile separator ','",
            "set terminal pngcairo size 900,600",
            f"set output '{image}'",
            "set logscale y",
            "set format y '10^{%L}'",
            "set xlabel 't [s]'",
            "set grid",
        ]
        if tau is not None:
            lines.append(f"set arrow from {tau!r}, graph 0 to {tau!r}, graph 1 nohead dashtype 2")
        lines.append("plot " + ", \\\n     ".join(plot_terms))

        script_path = self._prepare(script_path)
        try:
            script_path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
        except OSError as e:
            self._failed(script_path, e)
        return script_path


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return 'nan' if math.isnan(value) else repr(value)
    return str(value)


def emit_csv(trajectory, path: PathLike) -> Path:
    """Write a trajectory CSV with the default writer."""
    return OutputWriter().emit_csv(trajectory, path)
