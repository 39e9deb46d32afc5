"""
Run configuration loader (base YAML + run file + env vars + CLI overrides)
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from core.exceptions import ConfigurationError
from models.enums import InstrumentLaw, OutcomeModel, TreatmentModel
from models.run_config import RunConfig
from utils.validators import Validators

load_dotenv()

logger = logging.getLogger(__name__)

BASE_CONFIG = Path(__file__).parent / "base_config.yaml"

# Keys handled by the CLI runtime rather than RunConfig
RUNTIME_KEYS = ("logging", "telemetry")


def merge(base: dict, override: dict) -> dict:
    """Recursively merge dictionaries; None values in the override are ignored."""
    result = base.copy()
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = merge(result[key], value)
        elif value is not None:
            result[key] = value
    return result


def _read(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}")
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Config file {path} is not valid YAML/JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must hold a mapping at the top level.")
    return data


def _env_overrides() -> Dict[str, Any]:
    workers = os.getenv("TABCF_WORKERS")
    if workers is not None:
        try:
            workers = int(workers)
        except ValueError:
            raise ConfigurationError(f"TABCF_WORKERS must be an integer (got '{workers}').")
    return {
        "workers": workers,
        "output_dir": os.getenv("TABCF_OUTPUT_DIR"),
        "logging": {"level": os.getenv("TABCF_LOG_LEVEL")},
        "telemetry": {
            "connection_string": os.getenv("APPLICATIONINSIGHTS_CONNECTION_STRING")
            or os.getenv("APPLICATION_INSIGHTS_CONNECTION_STRING"),
        },
    }


def load_config(
    path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """
    Load configuration from:
    1. base_config.yaml (every default)
    2. the run file, if given
    3. TABCF_* environment variables
    4. CLI flag overrides
    """
    with open(BASE_CONFIG, "r") as f:
        merged = yaml.safe_load(f)

    if path is not None:
        user = _read(path)
        # A run file that names a CSV replaces the synthetic default setting.
        if user.get("csv_path") and "setting" not in user:
            merged["setting"] = None
        # An explicit null setting must survive the None-skipping merge.
        if "setting" in user and user["setting"] is None:
            merged["setting"] = None
        merged = merge(merged, user)

    merged = merge(merged, _env_overrides())
    if overrides:
        merged = merge(merged, overrides)
    return merged


def _check_setting_names(setting: Optional[Dict[str, Any]]) -> None:
    if not isinstance(setting, dict):
        return
    for field, enum_type in (
        ("treatment", TreatmentModel),
        ("outcome", OutcomeModel),
        ("instrument_law", InstrumentLaw),
    ):
        if field in setting and setting[field] is not None:
            Validators.require(Validators.validate_choice(str(setting[field]), enum_type, field))


def build_run_config(raw: Dict[str, Any]) -> RunConfig:
    """Validate a merged mapping into RunConfig; schema errors become ConfigurationError."""
    _check_setting_names(raw.get("setting"))
    for entry in raw.get("sweep") or []:
        _check_setting_names(entry)

    grid = raw.get("grid") or {}
    Validators.require(Validators.validate_trim_quantiles(
        grid.get("lower_quantile", 0.05), grid.get("upper_quantile", 0.95)
    ))
    if raw.get("taus") is not None:
        Validators.require(Validators.validate_taus(raw["taus"]))

    fields = {key: value for key, value in raw.items() if key not in RUNTIME_KEYS}
    try:
        return RunConfig.model_validate(fields)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid run configuration:\n{e}") from e
