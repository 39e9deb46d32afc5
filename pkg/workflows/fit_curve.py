"""
Fit workflow: estimate interventional curves (and joint laws) on one sample.
"""

from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from core.estimation import EstimatorResult, SavedEstimator, estimate, load_estimator, save_estimator
from models.enums import EstimatorKind, FunctionalKind
from models.interventional import EvaluationGrid
from workflows.base_workflow import BaseWorkflow

CURVE_COLUMNS = ["estimator", "outcome", "functional", "tau", "x", "value"]


def _curve_rows(estimator: str, outcome: int, label: str, x_grid: np.ndarray, curve: np.ndarray) -> List[Dict]:
    functional, tau = ("quantile", float(label[1:])) if label.startswith("q") else (label, None)
    return [
        {"estimator": estimator, "outcome": outcome + 1, "functional": functional, "tau": tau, "x": x, "value": v}
        for x, v in zip(x_grid, curve)
    ]


class FitCurveWorkflow(BaseWorkflow):
    """Stages U1-U3 (or a baseline) end to end, written as long-format curve CSVs."""

    command = "fit"

    # =====================================================================
    # PUBLIC WORKFLOW ENTRYPOINT
    # =====================================================================
    def execute(self) -> Path:
        config = self.config
        store = self.open_store()
        train, reference = self.load_sample(config.seed)
        grid = self.marginal_grid(reference)
        self.logger.info(
            f"[Workflow] fit: n={train.n}, p={train.p}, K={train.k}, "
            f"{grid.x_grid.size} levels on [{grid.x_grid[0]:.4f}, {grid.x_grid[-1]:.4f}]"
        )

        wants_joint = FunctionalKind.JOINT in config.functionals
        if wants_joint and train.k < 2:
            self.logger.warning("[Workflow] joint law requested for a single outcome; skipped")
            wants_joint = False

        rows: List[Dict] = []
        joint_frames: List[pd.DataFrame] = []
        copulas: Dict[str, Dict] = {}

        for estimator in config.estimators:
            estimator = EstimatorKind(estimator)
            saved = self._saved(estimator)
            result = estimate(estimator, train, grid, config, config.seed, self.monitor, saved=saved)
            rows.extend(self._curves(result, grid, train.k))

            if wants_joint:
                joint = estimate(
                    estimator, train, self.joint_grid(reference), config, config.seed, self.monitor,
                    joint=True, saved=saved,
                )
                if joint.copula is None:
                    self.logger.warning(f"[Workflow] {estimator.value} has no joint law; skipped")
                else:
                    with self.monitor.stage("M2"):
                        joint_frames.append(self._joint_frame(joint, config.oracle.joint_samples))
                    copulas[estimator.value] = {**joint.copula.to_dict(), "score_mode": config.copula_score_mode.value}

            if config.save_models:
                self._save_models(result)

        store.write_frame("curves.csv", pd.DataFrame(rows, columns=CURVE_COLUMNS))
        if joint_frames:
            store.write_frame("joint_samples.csv", pd.concat(joint_frames, ignore_index=True))
            store.write_json("copulas.json", copulas)
        store.write_json("timings.json", self.monitor.timings)
        store.write_manifest(self.raw_config, {
            "n_train": train.n,
            "x_grid": {"size": int(grid.x_grid.size), "lo": float(grid.x_grid[0]), "hi": float(grid.x_grid[-1])},
            "loaded_models": config.load_models,
        })
        self.logger.info(f"[Workflow] fit completed -> {store.root}")
        return store.root

    # =====================================================================
    # HELPERS
    # =====================================================================
    def _curves(self, result: EstimatorResult, grid: EvaluationGrid, k: int) -> List[Dict]:
        rows: List[Dict] = []
        outcomes = range(k) if result.has_distribution else range(1)
        for outcome in outcomes:
            with self.monitor.stage("U3"):
                curves = result.curves(self.config.functionals, self.config.taus, outcome)
            for label, curve in curves.items():
                rows.extend(_curve_rows(result.estimator.value, outcome, label, grid.x_grid, curve))
        return rows

    def _joint_frame(self, result: EstimatorResult, m: int) -> pd.DataFrame:
        samples = result.joint_samples(m, self.config.seed)
        g, m, k = samples.shape
        x_grid = result.marginals[0].x_grid
        frame = pd.DataFrame(samples.reshape(g * m, k), columns=[f"y{i + 1}" for i in range(k)])
        frame.insert(0, "draw", np.tile(np.arange(m), g))
        frame.insert(0, "x", np.repeat(x_grid, m))
        frame.insert(0, "estimator", result.estimator.value)
        return frame

    def _saved(self, estimator: EstimatorKind) -> Optional[SavedEstimator]:
        """Backbones from --load-models: a run folder or its models/ directory."""
        if not self.config.load_models:
            return None
        if estimator == EstimatorKind.LINEAR_CF:
            self.logger.info("[Workflow] linear-cf has no saved backbones; estimated in closed form")
            return None
        root = Path(self.config.load_models)
        if (root / "models").is_dir():
            root = root / "models"
        return load_estimator(root / estimator.value)

    def _save_models(self, result: EstimatorResult) -> None:
        directory = self.store.path(f"models/{result.estimator.value}")
        for path in save_estimator(result, directory):
            self.store.track(str(path.relative_to(self.store.root)))
