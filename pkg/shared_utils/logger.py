"""
Structured logging for numerical experiment runs

Loggers accept keyword context alongside the message, so an integration
summary or a solver failure carries its numbers with it instead of having
them pasted into the message string. Console output renders the context as
key=value pairs; the optional JSON handler emits one object per record for
machine consumption.

Usage:
    from shared_utils.logger import set_up_logging, get_logger, log_performance

    set_up_logging(level='INFO', log_file='fixtrack.log')
    logger = get_logger(__name__)

    with log_performance("integration", scenario="case_study"):
        logger.info("Run complete", err_at_tau=3.1e-8, accepted_steps=6000)
        # Output: "[INFO] fixtrack.runner: Run complete | err_at_tau=3.1e-08 accepted_steps=6000"
"""

import logging
import logging.handlers
import json
import math
import time
import sys
import traceback
import threading
from typing import Optional, Dict, Any
from contextlib import contextmanager
from datetime import datetime

try:
    import psutil  # For memory monitoring
except ImportError:
    psutil = None


class PerformanceTracker:
    """Thread-safe wall-clock and memory tracking for named operations"""

    def __init__(self):
        self.metrics = {}
        self.lock = threading.Lock()
        self._counter = 0

    def start_operation(self, operation_name: str) -> str:
        """Start tracking an operation and return its unique ID"""
        with self.lock:
            self._counter += 1
            operation_id = f"{operation_name}_{self._counter}"
            self.metrics[operation_id] = {
                'name': operation_name,
                'start_time': time.perf_counter(),
                'start_memory': self._get_memory_usage(),
            }
        return operation_id

    def end_operation(self, operation_id: str, **extra_metrics) -> Optional[Dict[str, Any]]:
        """Stop tracking and return the collected metrics"""
        with self.lock:
            start_data = self.metrics.pop(operation_id, None)
        if start_data is None:
            return None

        return {
            'operation': start_data['name'],
            'duration': time.perf_counter() - start_data['start_time'],
            'memory_delta_mb': self._get_memory_usage() - start_data['start_memory'],
            **extra_metrics
        }

    def _get_memory_usage(self) -> float:
        """Resident memory in MB, 0.0 when psutil is unavailable"""
        if psutil is None:
            return 0.0
        try:
            return psutil.Process().memory_info().rss / 1024 / 1024
        except Exception:
            return 0.0


_performance_tracker = PerformanceTracker()


def format_value(value: Any) -> str:
    """Render a context value compactly (floats in short scientific form)"""
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return str(value)
        if value != 0.0 and (abs(value) < 1e-3 or abs(value) >= 1e5):
            return f"{value:.3e}"
        return f"{value:.6g}"
    if hasattr(value, 'tolist'):
        return format_value(value.tolist())
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    return str(value)


def format_duration(duration: float) -> str:
    """Format a duration with a unit matched to its size"""
    if duration < 0.001:
        return f"{duration * 1_000_000:.0f}us"
    if duration < 1:
        return f"{duration * 1000:.1f}ms"
    if duration < 60:
        return f"{duration:.2f}s"
    minutes = int(duration // 60)
    return f"{minutes}m{duration % 60:.1f}s"


class KeyValueFormatter(logging.Formatter):
    """
    Console/file formatter that appends structured context as key=value pairs.

    Durations are rendered with units; everything else goes through
    format_value so arrays and floats stay readable on one line.
    """

    def __init__(self, include_timestamp: bool = False):
        super().__init__()
        self.include_timestamp = include_timestamp

    def format(self, record: logging.LogRecord) -> str:
        parts = []
        if self.include_timestamp:
            parts.append(self.formatTime(record))
        parts.append(f"[{record.levelname}] {record.name}: {record.getMessage()}")
        line = " ".join(parts)

        extra_data = getattr(record, 'extra_data', None)
        if extra_data:
            rendered = []
            for key, value in extra_data.items():
                if key == 'duration' and isinstance(value, (int, float)):
                    rendered.append(f"{key}={format_duration(value)}")
                else:
                    rendered.append(f"{key}={format_value(value)}")
            line += " | " + " ".join(rendered)

        if record.exc_info:
            line += "\n" + "".join(traceback.format_exception(*record.exc_info)).rstrip()
        return line


class JSONFormatter(logging.Formatter):
    """JSON formatter for structured log files"""

    def format(self, record):
        log_entry = {
            'timestamp': datetime.fromtimestamp(record.created).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno,
        }

        if hasattr(record, 'extra_data'):
            log_entry.update(record.extra_data)

        if record.exc_info:
            log_entry['exception'] = {
                'type': record.exc_info[0].__name__,
                'message': str(record.exc_info[1]),
                'traceback': traceback.format_exception(*record.exc_info)
            }

        return json.dumps(log_entry, default=_json_default)


def _json_default(value: Any) -> Any:
    if hasattr(value, 'tolist'):
        return value.tolist()
    return str(value)


class StructuredLogger:
    """Logger wrapper that carries keyword context into each record"""

    def __init__(self, name: str):
        self.logger = logging.getLogger(name)
        self.name = name

    def debug(self, message: str, **kwargs):
        self._log(logging.DEBUG, message, **kwargs)

    def info(self, message: str, **kwargs):
        self._log(logging.INFO, message, **kwargs)

    def warning(self, message: str, **kwargs):
        self._log(logging.WARNING, message, **kwargs)

    def error(self, message: str, exception: Optional[BaseException] = None, **kwargs):
        if exception is not None:
            kwargs['exc_info'] = (type(exception), exception, exception.__traceback__)
        self._log(logging.ERROR, message, **kwargs)

    def critical(self, message: str, **kwargs):
        self._log(logging.CRITICAL, message, **kwargs)

    def is_enabled_for(self, level: int) -> bool:
        return self.logger.isEnabledFor(level)

    def _log(self, level: int, message: str, **kwargs):
        if not self.logger.isEnabledFor(level):
            return

        exc_info = kwargs.pop('exc_info', None)
        if 'exception' in kwargs and exc_info is None:
            exception = kwargs.pop('exception')
            exc_info = (type(exception), exception, exception.__traceback__)

        self.logger.log(level, message, exc_info=exc_info,
                        extra={'extra_data': kwargs} if kwargs else None,
                        stacklevel=3)


def set_up_logging(
    level: str = 'INFO',
    log_file: Optional[str] = None,
    json_file: Optional[str] = None,
    include_timestamp: bool = False,
    max_file_size: str = '10MB',
    backup_count: int = 5,
    stream=None,
):
    """
    Install console, text-file and JSON-file handlers on the root logger

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Path to rotating text log file
        json_file: Path to rotating JSON log file
        include_timestamp: Prefix console lines with a timestamp
        max_file_size: Maximum size of log files before rotation ('10MB', '500KB')
        backup_count: Number of rotated files to keep
        stream: Console stream (defaults to stderr so CSV on stdout stays clean)
    """
    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, level.upper()))
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler(stream or sys.stderr)
    console_handler.setFormatter(KeyValueFormatter(include_timestamp=include_timestamp))
    root_logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=parse_file_size(max_file_size),
            backupCount=backup_count
        )
        file_handler.setFormatter(KeyValueFormatter(include_timestamp=True))
        root_logger.addHandler(file_handler)

    if json_file:
        json_handler = logging.handlers.RotatingFileHandler(
            json_file,
            maxBytes=parse_file_size(max_file_size),
            backupCount=backup_count
        )
        json_handler.setFormatter(JSONFormatter())
        root_logger.addHandler(json_handler)


def get_logger(name: Optional[str] = None) -> StructuredLogger:
    """Get a structured logger; defaults to the calling module's name"""
    if name is None:
        import inspect
        frame = inspect.currentframe().f_back
        name = frame.f_globals.get('__name__', 'unknown')
    return StructuredLogger(name)


@contextmanager
def log_performance(operation_name: str, logger: Optional[StructuredLogger] = None, **context):
    """Time a block and log its completion or failure with the given context"""
    if logger is None:
        logger = get_logger('performance')

    logger.debug(f"Starting operation: {operation_name}", **context)
    operation_id = _performance_tracker.start_operation(operation_name)

    try:
        yield
    except Exception as e:
        metrics = _performance_tracker.end_operation(operation_id, success=False, **context)
        logger.error(f"Operation failed: {operation_name}", exception=e, **(metrics or {}))
        raise

    metrics = _performance_tracker.end_operation(operation_id, **context)
    if metrics:
        metrics.pop('operation', None)
        logger.info(f"Operation successful: {operation_name}", **metrics)


def parse_file_size(size_str: str) -> int:
    """Parse file size string like '10MB' to bytes"""
    size_str = size_str.upper()
    if size_str.endswith('KB'):
        return int(size_str[:-2]) * 1024
    elif size_str.endswith('MB'):
        return int(size_str[:-2]) * 1024 * 1024
    elif size_str.endswith('GB'):
        return int(size_str[:-2]) * 1024 * 1024 * 1024
    else:
        return int(size_str)
