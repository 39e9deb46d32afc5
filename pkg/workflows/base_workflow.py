from __future__ import annotations

import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from core.orchestrator import evaluation_grid
from core.run_store import RunStore
from models.dataset import Dataset
from models.interventional import EvaluationGrid
from models.run_config import RunConfig
from services.dataset_service import load_csv, split_train_eval
from services.monitor_service import MonitorService
from services.simulation_service import gen_observational, reference_treatments


class BaseWorkflow:
    """
    Base class for the CLI workflows.

    Each workflow:
        - Receives a validated RunConfig (plus the raw mapping for the manifest)
        - Writes its outputs through a RunStore
        - Implements execute()
    """

    command = "run"

    def __init__(
        self,
        config: RunConfig,
        raw_config: Optional[Dict[str, Any]] = None,
        run_name: Optional[str] = None,
    ):
        self.config = config
        self.raw_config = raw_config if raw_config is not None else config.model_dump(mode="json")
        self.run_name = run_name
        self.logger = logging.getLogger(self.__class__.__module__)
        self.monitor = MonitorService({"command": self.command})
        self.store: Optional[RunStore] = None

    def open_store(self) -> RunStore:
        self.store = RunStore(self.config.output_dir, self.command, self.run_name)
        return self.store

    # -----------------------------------------------------------------
    # Data
    # -----------------------------------------------------------------
    def load_dataset(self, seed: int) -> Dataset:
        """The CSV input when configured, else a fresh observational sample."""
        if self.config.csv_path:
            return load_csv(self.config.csv_path, self.config.roles)
        return gen_observational(self.config.setting, self.config.n, seed)

    def load_sample(self, seed: int) -> Tuple[Dataset, np.ndarray]:
        """
        Training sample plus the treatment values used to trim the grid:
        a held-out split of the CSV, or independent draws of the setting.
        """
        if self.config.csv_path:
            dataset = load_csv(self.config.csv_path, self.config.roles)
            train, held_out = split_train_eval(dataset, self.config.eval_fraction, self.config.seed)
            return train, held_out.x
        setting = self.config.setting
        with self.monitor.stage("simulate"):
            train = gen_observational(setting, self.config.n, seed)
            reference = reference_treatments(setting, self.config.n_eval or self.config.n, seed)
        return train, reference

    # -----------------------------------------------------------------
    # Grids
    # -----------------------------------------------------------------
    def marginal_grid(self, reference_x: np.ndarray) -> EvaluationGrid:
        grid = self.config.grid
        return EvaluationGrid.from_reference(
            reference_x, grid.n_x, grid.n_y, grid.lower_quantile, grid.upper_quantile
        )

    def joint_grid(self, reference_x: np.ndarray) -> EvaluationGrid:
        """Synthetic designs use the fixed joint range; CSV inputs the trimmed treatment range."""
        if self.config.csv_path:
            grid = self.config.grid
            trimmed = self.marginal_grid(reference_x).x_grid
            return EvaluationGrid.equally_spaced(trimmed[0], trimmed[-1], grid.joint_x, grid.n_y)
        return evaluation_grid(self.config, self.config.setting, reference_x)

    def execute(self):
        raise NotImplementedError("Workflows must implement execute().")
