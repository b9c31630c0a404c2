# fixtrack/tests/conftest.py

"""
Shared fixtures for fixtrack tests.

Case-study fixtures use the reference parameters: x0 = (-9, -7, -5),
u0 = kappa1(x0) = (16, 7), gamma = 0.01, mu(t) = exp(-t), tau = 3.
"""

import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

# Add project root to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from fixtrack.core.built_ins.scenarios import build_problem, build_tracking_config
from fixtrack.core.integrator import IntegratorConfig
from fixtrack.core.run_config import ScenarioConfig

CASE_X0 = np.array([-9.0, -7.0, -5.0])
CASE_U0 = np.array([16.0, 7.0])


@pytest.fixture
def temp_dir():
    """Fresh temporary directory per test."""
    temp_path = Path(tempfile.mkdtemp(prefix="fixtrack_test_"))
    yield temp_path
    shutil.rmtree(temp_path)


@pytest.fixture
def case_x0():
    return CASE_X0.copy()


@pytest.fixture
def case_u0():
    return CASE_U0.copy()


@pytest.fixture
def case_config():
    return ScenarioConfig(scenario='case_study')


@pytest.fixture
def case_problem(case_config):
    return build_problem(case_config)


@pytest.fixture
def case_problem_dual():
    return build_problem(ScenarioConfig(scenario='case_study', derivatives='dual'))


@pytest.fixture
def scalar_problem():
    return build_problem(ScenarioConfig(scenario='scalar_unstable'))


@pytest.fixture
def fc_tracking(case_config):
    return build_tracking_config(case_config)


@pytest.fixture
def short_integrator():
    """Half a second of the case study with coarse samples."""
    return IntegratorConfig(dt=1e-3, sample_dt=0.1, t_end=0.5)


@pytest.fixture
def short_case_config(short_integrator):
    return ScenarioConfig(scenario='case_study', integrator=short_integrator, label='short')


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def random_feasible_points(case_problem, rng):
    """(u, x) pairs strictly inside the barrier domain, u near kappa1(x)."""
    from fixtrack.core.problem_model import feasibility_margin

    points = []
    while len(points) < 200:
        x = rng.uniform(-3.0, 3.0, 3)
        u = case_problem.lyap.kappa(x) + rng.normal(0.0, 0.5, 2)
        if feasibility_margin(case_problem, u, x) < -1e-2:
            points.append((u, x))
    return points


@pytest.fixture
def yaml_minimal():
    return "scenario: case_study\n"


@pytest.fixture
def write_yaml(temp_dir):
    """Write YAML text into the temp dir and return its path."""
    def _write(text: str, name: str = 'scenario.yaml') -> Path:
        path = temp_dir / name
        path.write_text(text, encoding='utf-8')
        return path
    return _write


@pytest.fixture
def restore_logging():
    """Undo root-logger changes made by set_up_logging."""
    import logging

    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)
