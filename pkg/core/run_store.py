"""
On-disk layout of a run: one directory holding a manifest, long-format CSVs
and JSON sidecars. Numeric CSVs are written with 17 significant digits and
'\\n' line endings so repeated runs produce byte-identical files.
"""

import json
import logging
import platform
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from core.exceptions import OutputError
from models.dataset import Dataset
from services.dataset_service import FLOAT_FORMAT, save_csv
from utils.validators import Validators

logger = logging.getLogger(__name__)


def _json_default(value: Any):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class RunStore:
    """
    Manages the output directory of one CLI invocation.
    Files written through the store are listed in the manifest.
    """

    def __init__(self, output_dir: Union[str, Path], command: str, run_name: Optional[str] = None):
        Validators.require(Validators.validate_output_dir(str(output_dir)), OutputError)
        self.command = command
        self.run_name = run_name or f"{command}-{datetime.now().strftime('%Y%m%d-%H%M%S')}"
        self.root = Path(output_dir) / self.run_name
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputError(f"Cannot create run directory {self.root}: {e}") from e
        self.files: List[str] = []
        logger.info(f"Run directory: {self.root}")

    def path(self, name: str) -> Path:
        return self.root / name

    def _track(self, path: Path) -> Path:
        relative = str(path.relative_to(self.root))
        if relative not in self.files:
            self.files.append(relative)
        return path

    # ------------------------------------------------------------------
    # Writers
    # ------------------------------------------------------------------
    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.path(name)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        except OSError as e:
            raise OutputError(f"Cannot write {path}: {e}") from e
        return self._track(path)

    def write_json(self, name: str, payload: Any) -> Path:
        path = self.path(name)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w") as f:
                json.dump(payload, f, indent=2, default=_json_default)
                f.write("\n")
        except OSError as e:
            raise OutputError(f"Cannot write {path}: {e}") from e
        return self._track(path)

    def write_dataset(self, name: str, dataset: Dataset) -> Path:
        try:
            return self._track(save_csv(dataset, self.path(name)))
        except OSError as e:
            raise OutputError(f"Cannot write {self.path(name)}: {e}") from e

    def track(self, name: str) -> Path:
        """Register a file written by another component (e.g. a saved model)."""
        return self._track(self.path(name))

    def write_manifest(self, config: Dict[str, Any], extra: Optional[Dict[str, Any]] = None) -> Path:
        """Manifest last, so it lists every file of the run; the timestamp is its only volatile field."""
        manifest = {
            "command": self.command,
            "run_name": self.run_name,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "config": config,
            "files": sorted(self.files),
            **(extra or {}),
        }
        return self.write_json("manifest.json", manifest)
