"""
Run configuration: YAML defaults merged with run files, environment and CLI flags.
"""

from .settings import build_run_config, load_config, merge

__all__ = [
    "build_run_config",
    "load_config",
    "merge",
]
