"""
Logging presets for fixtrack.

Environments pick a level, console timestamping and rotation limits; the CLI
applies one preset and lets --log-level / --log-file / --json-log override it.
"""

from typing import Any, Dict, Optional

from shared_utils.logger import set_up_logging


class LoggingConfig:
    """Environment-specific logging setup."""

    ENVIRONMENTS: Dict[str, Dict[str, Any]] = {
        'development': {
            'level': 'DEBUG',
            'include_timestamp': True,
            'max_file_size': '10MB',
            'backup_count': 3,
        },
        'testing': {
            'level': 'WARNING',
            'include_timestamp': False,
            'max_file_size': '5MB',
            'backup_count': 2,
        },
        'cli': {
            'level': 'INFO',
            'include_timestamp': False,
            'max_file_size': '20MB',
            'backup_count': 5,
        },
    }

    @classmethod
    def get_environment_config(cls, environment: str) -> Dict[str, Any]:
        if environment not in cls.ENVIRONMENTS:
            raise ValueError(f"Unknown logging environment '{environment}'. "
                             f"Valid options: {sorted(cls.ENVIRONMENTS)}")
        return dict(cls.ENVIRONMENTS[environment])

    @classmethod
    def setup_for_environment(cls, environment: str = 'cli', level: Optional[str] = None,
                              log_file: Optional[str] = None, json_file: Optional[str] = None,
                              stream=None) -> Dict[str, Any]:
        """Install handlers for a preset; returns the settings actually applied."""
        settings = cls.get_environment_config(environment)
        if level:
            settings['level'] = level.upper()
        set_up_logging(
            level=settings['level'],
            log_file=log_file,
            json_file=json_file,
            include_timestamp=settings['include_timestamp'],
            max_file_size=settings['max_file_size'],
            backup_count=settings['backup_count'],
            stream=stream,
        )
        settings.update(log_file=log_file, json_file=json_file)
        return settings
