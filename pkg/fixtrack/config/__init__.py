"""
Configuration management for fixtrack.

Loads YAML scenario files into validated ScenarioConfig objects and applies
logging presets.
"""

from .config_loader import ConfigLoader, load_config, serialize_config
from .logging_config import LoggingConfig

__all__ = ['ConfigLoader', 'load_config', 'serialize_config', 'LoggingConfig']
