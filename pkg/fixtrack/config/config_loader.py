"""
Scenario file loader.

Scenario files are YAML documents: flat key/value pairs plus two nested
blocks, `integrator:` and `oracle:`. Comments are allowed.

    scenario: case_study          # required, registry key
    law: FC                       # FC | EC
    tau: 3.0
    gamma: 0.01
    mu_rate: 1.0
    x0: [-9, -7, -5]              # default: scenario default
    kappa: kappa1                 # default: scenario default feedback
    u0_mode: scaled(0.5)          # kappa | scaled(<f>) | explicit(<u1>, <u2>, ...)
    ec_gain_diag: [1.0, 1.0]
    deadband_eps: 1.0e-12
    derivatives: auto             # auto | analytic | dual
    tol_settle: 1.0e-4
    output_path: results
    label: my_run
    plot_script: false
    integrator:
      method: rk4                 # rk4 | rk45
      dt: 1.0e-3
      sample_dt: 1.0e-2
      t_end: 6.0
    oracle:
      newton_tol: 1.0e-10

Unknown keys, malformed values and infeasible initial controls raise
ConfigValidationError naming the field (and the line when it is known).
"""

import dataclasses
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from ..core.exceptions import ConfigValidationError
from ..core.integrator import IntegratorConfig
from ..core.oracle_solver import OracleConfig
from ..core.problem_model import feasibility_margin
from ..core.run_config import ScenarioConfig

TOP_LEVEL_KEYS = {
    'scenario', 'law', 'tau', 'gamma', 'mu_rate', 'x0', 'kappa', 'u0_mode',
    'ec_gain_diag', 'deadband_eps', 'derivatives', 'tol_settle', 'output_path',
    'label', 'plot_script', 'integrator', 'oracle',
}
FLOAT_KEYS = {'tau', 'gamma', 'mu_rate', 'deadband_eps', 'tol_settle'}
INTEGRATOR_FLOAT_KEYS = {'dt', 'rel_tol', 'abs_tol', 't_end', 'sample_dt', 'guard_eta'}
INTEGRATOR_INT_KEYS = {'max_step_rejections'}
ORACLE_FLOAT_KEYS = {'newton_tol', 'backtrack_ratio', 'grid_half_width'}
ORACLE_INT_KEYS = {'max_iters', 'grid_points'}


def _block_keys(config_class) -> set:
    return {f.name for f in dataclasses.fields(config_class)}


class ConfigLoader:
    """Loads scenario files and converts them to ScenarioConfig objects."""

    @staticmethod
    def read_text(config_path: Union[str, Path]) -> str:
        path = Path(config_path)
        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")
        return path.read_text(encoding='utf-8')

    @staticmethod
    def key_lines(text: str) -> Dict[str, int]:
        """1-based line of every key, nested keys as 'block.key'."""
        lines: Dict[str, int] = {}
        try:
            root = yaml.compose(text)
        except yaml.YAMLError:
            return lines
        if not isinstance(root, yaml.MappingNode):
            return lines
        for key_node, value_node in root.value:
            lines[str(key_node.value)] = key_node.start_mark.line + 1
            if isinstance(value_node, yaml.MappingNode):
                for sub_key, _ in value_node.value:
                    lines[f"{key_node.value}.{sub_key.value}"] = sub_key.start_mark.line + 1
        return lines

    @staticmethod
    def parse_document(text: str) -> Dict[str, Any]:
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, 'problem_mark', None)
            line = mark.line + 1 if mark is not None else None
            problem = getattr(e, 'problem', None) or str(e)
            raise ConfigValidationError(f"invalid YAML: {problem}", line=line) from e
        if data is None:
            raise ConfigValidationError("configuration document is empty")
        if not isinstance(data, dict):
            raise ConfigValidationError("configuration must be a key/value mapping", line=1)
        return data

    @staticmethod
    def _coerce(value: Any, kind: type, name: str, line: Optional[int]):
        if value is None and name.endswith('grid_half_width'):
            return None
        if isinstance(value, bool):
            raise ConfigValidationError(f"expected a number, got {value!r}", field=name, line=line)
        try:
            if kind is int:
                as_float = float(value)
                if not as_float.is_integer():
                    raise ValueError
                return int(as_float)
            return float(value)
        except (TypeError, ValueError):
            raise ConfigValidationError(f"expected a number, got {value!r}", field=name, line=line) from None

    @classmethod
    def _build_block(cls, config_class, data: Any, block: str, float_keys: set, int_keys: set,
                     lines: Dict[str, int]):
        if data is None:
            return config_class()
        if not isinstance(data, dict):
            raise ConfigValidationError(f"'{block}' must be a mapping", field=block, line=lines.get(block))
        allowed = _block_keys(config_class)
        kwargs = {}
        for key, value in data.items():
            name = f"{block}.{key}"
            if key not in allowed:
                raise ConfigValidationError(
                    f"unknown key; valid keys: {sorted(allowed)}", field=name, line=lines.get(name))
            if key in float_keys:
                value = cls._coerce(value, float, name, lines.get(name))
            elif key in int_keys:
                value = cls._coerce(value, int, name, lines.get(name))
            kwargs[key] = value
        try:
            return config_class(**kwargs)
        except ValueError as e:
            raise ConfigValidationError(str(e), field=block, line=lines.get(block)) from e

    @classmethod
    def config_from_dict(cls, data: Dict[str, Any], lines: Optional[Dict[str, int]] = None) -> ScenarioConfig:
        """Validate a parsed document and build the ScenarioConfig."""
        lines = lines or {}
        for key in data:
            if key not in TOP_LEVEL_KEYS:
                raise ConfigValidationError(
                    f"unknown key; valid keys: {sorted(TOP_LEVEL_KEYS)}", field=str(key), line=lines.get(key))
        if 'scenario' not in data:
            raise ConfigValidationError("missing required key", field='scenario')

        kwargs: Dict[str, Any] = {}
        for key, value in data.items():
            if key in ('integrator', 'oracle'):
                continue
            if key in FLOAT_KEYS:
                value = cls._coerce(value, float, key, lines.get(key))
            elif key in ('x0', 'ec_gain_diag'):
                if not isinstance(value, list):
                    raise ConfigValidationError("expected a list of numbers", field=key, line=lines.get(key))
                value = [cls._coerce(v, float, key, lines.get(key)) for v in value]
            elif key == 'plot_script':
                if not isinstance(value, bool):
                    raise ConfigValidationError("expected true or false", field=key, line=lines.get(key))
            elif value is not None:
                value = str(value)
            kwargs[key] = value

        kwargs['integrator'] = cls._build_block(IntegratorConfig, data.get('integrator'), 'integrator',
                                                INTEGRATOR_FLOAT_KEYS, INTEGRATOR_INT_KEYS, lines)
        kwargs['oracle'] = cls._build_block(OracleConfig, data.get('oracle'), 'oracle',
                                            ORACLE_FLOAT_KEYS, ORACLE_INT_KEYS, lines)
        try:
            cfg = ScenarioConfig(**kwargs)
        except ConfigValidationError as e:
            if e.line is None and e.field in lines:
                raise ConfigValidationError(e.reason, field=e.field, line=lines[e.field]) from e
            raise
        except ValueError as e:
            raise ConfigValidationError(str(e)) from e

        check_initial_feasibility(cfg, lines.get('u0_mode'))
        return cfg

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None, text: Optional[str] = None) -> ScenarioConfig:
        if (path is None) == (text is None):
            raise ValueError("provide exactly one of path or text")
        if path is not None:
            text = cls.read_text(path)
        data = cls.parse_document(text)
        return cls.config_from_dict(data, cls.key_lines(text))


def check_initial_feasibility(cfg: ScenarioConfig, line: Optional[int] = None) -> float:
    """phi(u0, x0) - gamma for the config, raising when u0 is not strictly feasible."""
    from ..core.built_ins.scenarios import build_problem, resolve_initial_values

    problem = build_problem(cfg)
    x0, u0 = resolve_initial_values(cfg, problem)
    margin = feasibility_margin(problem, u0, x0)
    if not margin < 0:
        raise ConfigValidationError(
            f"initial control {u0.tolist()} is infeasible at x0 (phi - gamma = {margin:.6g})",
            field='u0_mode', line=line)
    return margin


def load_config(path: Optional[Union[str, Path]] = None, text: Optional[str] = None) -> ScenarioConfig:
    """Load and validate a scenario from a file path or inline YAML text."""
    return ConfigLoader.load(path=path, text=text)


def config_to_dict(cfg: ScenarioConfig) -> Dict[str, Any]:
    """Canonical plain-data form of a config (inverse of config_from_dict)."""
    data: Dict[str, Any] = {
        'scenario': cfg.scenario,
        'law': cfg.law.name,
        'tau': cfg.tau,
        'gamma': cfg.gamma,
        'mu_rate': cfg.mu_rate,
    }
    if cfg.x0 is not None:
        data['x0'] = list(cfg.x0)
    if cfg.kappa is not None:
        data['kappa'] = cfg.kappa
    data['u0_mode'] = str(cfg.u0_mode)
    if cfg.ec_gain_diag is not None:
        data['ec_gain_diag'] = list(cfg.ec_gain_diag)
    data.update({
        'deadband_eps': cfg.deadband_eps,
        'derivatives': cfg.derivatives.value,
        'tol_settle': cfg.tol_settle,
        'output_path': cfg.output_path,
    })
    if cfg.label is not None:
        data['label'] = cfg.label
    data['plot_script'] = cfg.plot_script

    integrator = dataclasses.asdict(cfg.integrator)
    integrator['method'] = cfg.integrator.method.value
    data['integrator'] = integrator
    data['oracle'] = dataclasses.asdict(cfg.oracle)
    return data


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical YAML text; load_config(text=...) of it gives an equal config."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)
