# fixtrack/tests/test_config_loader.py

import pytest

from fixtrack.config.config_loader import (
    ConfigLoader, check_initial_feasibility, config_to_dict, load_config, serialize_config,
)
from fixtrack.core.exceptions import ConfigValidationError
from fixtrack.core.integrator import IntegrationMethod
from fixtrack.core.run_config import ScenarioConfig, U0Kind
from fixtrack.core.tracking_laws import TrackingLaw
from fixtrack.ui.cli import BUILTIN_CONFIG_DIR

FULL_DOCUMENT = """\
# EC comparison run
scenario: case_study
law: EC
tau: 2.5
gamma: 0.02
mu_rate: 0.5
x0: [-9, -7, -5]
kappa: kappa2
u0_mode: scaled(0.5)
ec_gain_diag: [2.0, 1.0]
derivatives: dual
label: full
plot_script: true
integrator:
  method: RK45-adaptive
  dt: 1.0e-4
  sample_dt: 0.05
  t_end: 4
oracle:
  newton_tol: 1.0e-12
  max_iters: 30
"""


class TestLoadConfig:
    def test_minimal_document_uses_defaults(self, yaml_minimal):
        cfg = load_config(text=yaml_minimal)
        assert cfg == ScenarioConfig()
        assert cfg.law is TrackingLaw.FC
        assert cfg.tau == 3.0
        assert cfg.integrator.t_end == 6.0

    def test_full_document(self):
        cfg = load_config(text=FULL_DOCUMENT)
        assert cfg.law is TrackingLaw.EC
        assert cfg.tau == 2.5
        assert cfg.x0 == [-9.0, -7.0, -5.0]
        assert cfg.kappa == 'kappa2'
        assert cfg.u0_mode.kind is U0Kind.SCALED
        assert cfg.ec_gain_diag == [2.0, 1.0]
        assert cfg.plot_script is True
        assert cfg.integrator.method is IntegrationMethod.RK45
        assert cfg.integrator.dt == 1e-4
        assert cfg.integrator.t_end == 4.0
        assert cfg.oracle.max_iters == 30

    def test_load_from_file(self, write_yaml):
        path = write_yaml("scenario: case_study\nu0_mode: scaled(0.25)\n")
        cfg = load_config(path=path)
        assert cfg.u0_mode.factor == 0.25

    def test_missing_file(self, temp_dir):
        with pytest.raises(FileNotFoundError):
            load_config(path=temp_dir / 'absent.yaml')

    def test_exactly_one_source(self, yaml_minimal):
        with pytest.raises(ValueError):
            ConfigLoader.load()
        with pytest.raises(ValueError):
            ConfigLoader.load(path='x.yaml', text=yaml_minimal)

    @pytest.mark.parametrize("name", ['case_study.yaml', 'case_study_ec.yaml', 'scalar_unstable.yaml'])
    def test_builtin_configs_load(self, name):
        cfg = load_config(path=BUILTIN_CONFIG_DIR / name)
        assert cfg.run_label.startswith(cfg.scenario)


class TestValidationErrors:
    def test_negative_tau_names_field_and_line(self):
        with pytest.raises(ConfigValidationError) as info:
            load_config(text="scenario: case_study\ntau: -1\n")
        assert info.value.field == 'tau'
        assert info.value.line == 2

    def test_unknown_key(self):
        with pytest.raises(ConfigValidationError) as info:
            load_config(text="scenario: case_study\n\nsettle: 3\n")
        assert info.value.field == 'settle'
        assert info.value.line == 3

    def test_unknown_nested_key(self):
        with pytest.raises(ConfigValidationError) as info:
            load_config(text="scenario: case_study\nintegrator:\n  step: 0.1\n")
        assert info.value.field == 'integrator.step'
        assert info.value.line == 3

    def test_non_numeric_value(self):
        with pytest.raises(ConfigValidationError) as info:
            load_config(text="scenario: case_study\ngamma: small\n")
        assert info.value.field == 'gamma'

    def test_bool_is_not_a_number(self):
        with pytest.raises(ConfigValidationError):
            load_config(text="scenario: case_study\ntau: true\n")

    def test_integer_keys(self):
        with pytest.raises(ConfigValidationError) as info:
            load_config(text="scenario: case_study\noracle:\n  max_iters: 2.5\n")
        assert info.value.field == 'oracle.max_iters'

    def test_block_constraints(self):
        with pytest.raises(ConfigValidationError) as info:
            load_config(text="scenario: case_study\nintegrator:\n  dt: 0.5\n  sample_dt: 0.1\n")
        assert info.value.field == 'integrator'
        assert info.value.line == 2

    def test_missing_scenario(self):
        with pytest.raises(ConfigValidationError) as info:
            load_config(text="law: FC\n")
        assert info.value.field == 'scenario'

    @pytest.mark.parametrize("text", ["", "- a\n- b\n", "scenario: [unclosed\n"])
    def test_malformed_documents(self, text):
        with pytest.raises(ConfigValidationError):
            load_config(text=text)

    def test_infeasible_initial_control(self):
        with pytest.raises(ConfigValidationError) as info:
            load_config(text="scenario: case_study\nu0_mode: scaled(-10)\n")
        assert info.value.field == 'u0_mode'
        assert info.value.line == 2

    def test_check_initial_feasibility(self, case_config):
        assert check_initial_feasibility(case_config) == pytest.approx(-237.51)


class TestSerialization:
    def test_round_trip(self):
        cfg = load_config(text=FULL_DOCUMENT)
        assert load_config(text=serialize_config(cfg)) == cfg

    def test_round_trip_defaults(self):
        cfg = ScenarioConfig(label='defaults')
        assert load_config(text=serialize_config(cfg)) == cfg

    def test_dict_form(self):
        data = config_to_dict(ScenarioConfig(u0_mode='scaled(0.5)'))
        assert data['law'] == 'FC'
        assert data['u0_mode'] == 'scaled(0.5)'
        assert data['integrator']['method'] == 'rk4'
        assert 'x0' not in data
