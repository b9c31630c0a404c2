# fixtrack/ui/cli.py
"""
Command-line interface for fixtrack.

Subcommands:
    run        integrate one scenario file, write CSV + summary
    sweep-u0   one run per u(0) = factor * kappa(x0)
    sweep-tau  one run per settling time
    compare    FC and EC runs of one config plus a joint CSV
    selftest   closed-form, gradient and derivative checks
    summarize  recompute summary metrics from an emitted CSV

Exit codes: 0 success, 1 validation error, 2 integration/oracle/selftest
failure, 130 interrupted.

Usage:
    fixtrack run --config scenario.yaml --out results
    fixtrack sweep-u0 --config scenario.yaml --factors 0.25,0.5,1,2 --workers 4
    fixtrack sweep-tau --builtin case_study --taus 0.5,1,3,5
    fixtrack selftest
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from shared_utils.logger import get_logger
from shared_utils.progress import create_progress_reporter
from ..config.config_loader import load_config
from ..config.logging_config import LoggingConfig
from ..core.exceptions import ConfigValidationError, IntegrationFailure, OracleFailure
from ..core.experiment_runner import DEFAULT_TAUS, DEFAULT_U0_FACTORS, ExperimentRunner
from ..core.metrics import DEFAULT_TOL_SETTLE, summary_from_csv
from ..core.selftest import SELFTEST_CHECKS, run_selftest

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_FAILURE = 2
EXIT_INTERRUPTED = 130

BUILTIN_CONFIG_DIR = Path(__file__).resolve().parent.parent / 'core' / 'built_ins' / 'configs'


def parse_float_list(text: str) -> List[float]:
    """'0.25,0.5,1' -> [0.25, 0.5, 1.0]"""
    try:
        values = [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def builtin_config_path(name: str) -> Path:
    path = BUILTIN_CONFIG_DIR / f'{name}.yaml'
    if not path.exists():
        available = sorted(p.stem for p in BUILTIN_CONFIG_DIR.glob('*.yaml'))
        raise FileNotFoundError(f"No built-in config '{name}'. Available: {available}")
    return path


def add_config_arguments(parser: argparse.ArgumentParser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--config', help='Scenario YAML file')
    source.add_argument('--builtin', help='Name of a bundled scenario file (e.g. case_study)')
    parser.add_argument('--out', help='Output directory (overrides output_path in the config)')
    parser.add_argument('--plot-script', action='store_true',
                        help='Write a gnuplot companion script next to each CSV')


def add_progress_arguments(parser: argparse.ArgumentParser):
    """Add progress-related CLI arguments"""
    progress_group = parser.add_argument_group('progress options')
    progress_group.add_argument('--progress', action='store_true',
                                help='Show progress bars during integration')
    progress_group.add_argument('--no-progress', action='store_true',
                                help='Disable progress reporting (overrides --progress)')


def add_logging_arguments(parser: argparse.ArgumentParser):
    logging_group = parser.add_argument_group('logging options')
    logging_group.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                               type=str.upper, help='Console log level (default: INFO)')
    logging_group.add_argument('--log-file', help='Rotating text log file')
    logging_group.add_argument('--json-log', help='Rotating JSON-lines log file')
    logging_group.add_argument('--verbose', '-v', action='store_true',
                               help='Debug logging and tracebacks for unexpected errors')


def determine_progress_mode(args) -> str:
    if getattr(args, 'no_progress', False):
        return 'null'
    if getattr(args, 'progress', False):
        return 'cli'
    return 'auto'


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='fixtrack',
        description='Fixed-time tracking of barrier-relaxed CLF-constrained optimal controls',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s run --builtin case_study --out results
  %(prog)s sweep-u0 --config scenario.yaml --factors 0.25,0.5,1,2
  %(prog)s sweep-tau --config scenario.yaml --taus 0.5,1,3,5 --workers 4
  %(prog)s compare --config scenario.yaml
  %(prog)s selftest
        """
    )
    add_logging_arguments(parser)
    commands = parser.add_subparsers(dest='command', required=True)

    run = commands.add_parser('run', help='Integrate one scenario')
    add_config_arguments(run)
    add_progress_arguments(run)

    sweep_u0 = commands.add_parser('sweep-u0', help='Sweep u(0) = factor * kappa(x0)')
    add_config_arguments(sweep_u0)
    add_progress_arguments(sweep_u0)
    sweep_u0.add_argument('--factors', type=parse_float_list, default=list(DEFAULT_U0_FACTORS),
                          help='Comma-separated scale factors (default: 0.25,0.5,1,2)')

    sweep_tau = commands.add_parser('sweep-tau', help='Sweep the settling time')
    add_config_arguments(sweep_tau)
    add_progress_arguments(sweep_tau)
    sweep_tau.add_argument('--taus', type=parse_float_list, default=list(DEFAULT_TAUS),
                           help='Comma-separated settling times in seconds (default: 0.5,1,3,5)')

    for sweep in (sweep_u0, sweep_tau):
        sweep.add_argument('--workers', type=int, default=1, help='Parallel runs (default: 1)')
        sweep.add_argument('--table-format', choices=['csv', 'xlsx'], default='csv',
                           help='Sweep table format (default: csv)')

    compare = commands.add_parser('compare', help='FC vs EC on one config')
    add_config_arguments(compare)
    add_progress_arguments(compare)
    compare.add_argument('--workers', type=int, default=1, help='2 runs both laws in parallel')

    selftest = commands.add_parser('selftest', help='Run the built-in verification suite')
    selftest.add_argument('--check', action='append', choices=sorted(SELFTEST_CHECKS),
                          help='Run only this check (repeatable)')

    summarize = commands.add_parser('summarize', help='Summary metrics of an emitted trajectory CSV')
    summarize.add_argument('csv', help='Trajectory CSV')
    summarize.add_argument('--tau', type=float, required=True, help='Settling time of the run')
    summarize.add_argument('--tol-settle', type=float, default=DEFAULT_TOL_SETTLE,
                           help=f'grad_norm tolerance for "settled" (default: {DEFAULT_TOL_SETTLE:g})')
    return parser


def load_scenario(args):
    path = args.config if args.config else builtin_config_path(args.builtin)
    cfg = load_config(path)
    if args.plot_script:
        cfg.plot_script = True
    return cfg


def make_runner(args, workers: int = 1, table_format: str = 'csv') -> ExperimentRunner:
    runner = ExperimentRunner(workers=workers, output_dir=args.out, table_format=table_format)
    runner.set_progress_reporter(create_progress_reporter(mode=determine_progress_mode(args)))
    return runner


def print_metrics(label: str, metrics):
    print(f"{label}:")
    for key, value in metrics.as_dict().items():
        print(f"  {key:<26} {value}")


def command_run(args) -> int:
    cfg = load_scenario(args)
    result = make_runner(args).run_scenario(cfg)
    print_metrics(result.label, result.metrics)
    if result.csv_path:
        print(f"Trajectory written to: {result.csv_path}")
    return EXIT_OK


def _print_sweep(sweep) -> int:
    print(sweep.to_dataframe()[[sweep.parameter, 'status', 'grad_norm_at_tau', 'err_at_tau',
                                'settle_time_measured', 'max_phi_minus_gamma']].to_string(index=False))
    if sweep.table_path:
        print(f"Sweep table written to: {sweep.table_path}")
    return EXIT_FAILURE if sweep.failed else EXIT_OK


def command_sweep_u0(args) -> int:
    cfg = load_scenario(args)
    runner = make_runner(args, workers=args.workers, table_format=args.table_format)
    return _print_sweep(runner.sweep_initial_values(cfg, args.factors))


def command_sweep_tau(args) -> int:
    cfg = load_scenario(args)
    runner = make_runner(args, workers=args.workers, table_format=args.table_format)
    return _print_sweep(runner.sweep_settling_times(cfg, args.taus))


def command_compare(args) -> int:
    cfg = load_scenario(args)
    comparison = make_runner(args, workers=args.workers).compare_laws(cfg)
    print_metrics(comparison.fc.label, comparison.fc.metrics)
    print_metrics(comparison.ec.label, comparison.ec.metrics)
    if comparison.path:
        print(f"Joint table written to: {comparison.path}")
    return EXIT_OK


def command_selftest(args) -> int:
    report = run_selftest(args.check)
    for line in report.format_lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAILURE


def command_summarize(args) -> int:
    metrics = summary_from_csv(args.csv, args.tau, args.tol_settle)
    print_metrics(Path(args.csv).stem, metrics)
    return EXIT_OK


COMMANDS = {
    'run': command_run,
    'sweep-u0': command_sweep_u0,
    'sweep-tau': command_sweep_tau,
    'compare': command_compare,
    'selftest': command_selftest,
    'summarize': command_summarize,
}


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    level = 'DEBUG' if args.verbose else args.log_level
    LoggingConfig.setup_for_environment('cli', level=level, log_file=args.log_file,
                                        json_file=args.json_log)
    logger = get_logger('fixtrack.cli')
    logger.debug("Command started", command=args.command)

    try:
        return COMMANDS[args.command](args)
    except (ConfigValidationError, FileNotFoundError) as e:
        logger.error("Invalid configuration", error=str(e))
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IntegrationFailure, OracleFailure) as e:
        logger.error("Run failed", error=str(e))
        print(f"Run failed: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except KeyboardInterrupt:
        logger.info("Cancelled by user")
        return EXIT_INTERRUPTED
    except Exception as e:
        if args.verbose:
            logger.error("Unexpected error", exception=e)
        else:
            logger.error("Unexpected error", error=str(e))
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == '__main__':
    sys.exit(main())
