"""Registered scenarios and their bundled YAML files."""

from .scenarios import BUILTIN_SCENARIOS, get_scenario

__all__ = ['BUILTIN_SCENARIOS', 'get_scenario']
