"""
Runs one estimator end to end on a training sample: TabCF (Stages U1-U3,
optionally the working copula), the naive conditional regression, or the
linear control function. Shared by the fit command and benchmark replications.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from core.baselines import fit_naive, linear_cf_estimator, naive_conditional_scores, naive_estimator
from core.backbone_factory import load_model, save_model
from core.cf_pipeline import fit_tabcf, interventional_cdf, restore_tabcf
from core.copula import fit_gaussian_copula, fit_working_copula, independence_copula, joint_samples_on_grid
from core.exceptions import ConfigurationError, DomainError, StageError, TabCFError
from core.functionals import evaluate_functional
from models.copula_model import CopulaModel
from models.dataset import Dataset
from models.enums import ControlScale, CopulaKind, EstimatorKind, FunctionalKind
from models.interventional import CfFit, ControlValues, EvaluationGrid, InterventionalCdf
from models.run_config import RunConfig
from plugins.backbones import BaseBackbone
from services.monitor_service import MonitorService

logger = logging.getLogger(__name__)

CONTROLS_FILE = "controls.json"


@dataclass
class EstimatorResult:
    estimator: EstimatorKind
    marginals: List[InterventionalCdf] = field(default_factory=list)
    mean_curve: Optional[np.ndarray] = None
    copula: Optional[CopulaModel] = None
    fit: Optional[CfFit] = None
    models: Dict[str, BaseBackbone] = field(default_factory=dict)

    @property
    def has_distribution(self) -> bool:
        return bool(self.marginals)

    def curves(
        self, functionals: Sequence[FunctionalKind], taus: Sequence[float], outcome_index: int = 0
    ) -> Dict[str, np.ndarray]:
        """Curves keyed by label ('mean', 'gini', 'q0.1', ...); U3 errors are stage-attributed."""
        if not self.has_distribution:
            if FunctionalKind.MEAN not in functionals:
                return {}
            skipped = [f.value for f in functionals if f not in (FunctionalKind.MEAN, FunctionalKind.JOINT)]
            if skipped:
                logger.warning(f"[U3] {self.estimator.value} only estimates the mean; skipping {skipped}")
            return {"mean": self.mean_curve}

        out: Dict[str, np.ndarray] = {}
        for kind in functionals:
            if kind == FunctionalKind.JOINT:
                continue
            try:
                out.update(evaluate_functional(self.marginals[outcome_index], kind, taus))
            except TabCFError as e:
                raise StageError("U3", e) from e
        return out

    def joint_samples(self, m: int, seed: int) -> np.ndarray:
        """G×m×K draws from the joint law at every level of the marginal grid."""
        if self.copula is None:
            raise StageError("M2", DomainError(f"{self.estimator.value} has no joint law."))
        try:
            return joint_samples_on_grid(self.marginals, self.copula, m, seed)
        except TabCFError as e:
            raise StageError("M2", e) from e


@dataclass
class SavedEstimator:
    """Backbones (and TabCF controls) written by an earlier fit run."""

    models: Dict[str, BaseBackbone]
    controls: Optional[ControlValues] = None
    control_scale: ControlScale = ControlScale.NORMAL

    def require(self, name: str) -> BaseBackbone:
        if name not in self.models:
            raise ConfigurationError(f"Saved model '{name}' not found (have {sorted(self.models)}).")
        return self.models[name]


def save_estimator(result: EstimatorResult, directory: Union[str, Path]) -> List[Path]:
    """One JSON file per backbone, plus the control values a TabCF fit was built on."""
    directory = Path(directory)
    paths = [save_model(model, directory / f"{name}.json") for name, model in result.models.items()]
    if result.fit is not None:
        controls = result.fit.controls
        path = directory / CONTROLS_FILE
        path.write_text(
            json.dumps({
                "v": controls.v.tolist(),
                "source": controls.source,
                "folds": controls.folds,
                "control_scale": result.fit.control_scale.value,
            }),
            encoding="utf-8",
        )
        paths.append(path)
    return paths


def load_estimator(directory: Union[str, Path]) -> SavedEstimator:
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigurationError(f"No saved models in {directory}.")
    models = {
        path.stem: load_model(path)
        for path in sorted(directory.glob("*.json"))
        if path.name != CONTROLS_FILE
    }
    saved = SavedEstimator(models=models)
    controls_path = directory / CONTROLS_FILE
    if controls_path.exists():
        document = json.loads(controls_path.read_text(encoding="utf-8"))
        saved.controls = ControlValues(v=document["v"], source=document["source"], folds=document["folds"])
        saved.control_scale = ControlScale(document["control_scale"])
    logger.info(f"Loaded {len(models)} saved model(s) from {directory}")
    return saved


def _attributed(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except TabCFError as e:
        raise StageError(stage, e) from e


def estimate(
    kind: EstimatorKind,
    train: Dataset,
    grid: EvaluationGrid,
    config: RunConfig,
    seed: int,
    monitor: Optional[MonitorService] = None,
    joint: bool = False,
    saved: Optional[SavedEstimator] = None,
) -> EstimatorResult:
    """
    Fit one estimator and evaluate its interventional CDFs on `grid` for every
    outcome. With joint=True a copula is attached for K >= 2 outcomes.
    With saved models the backbones are reused and only U3 (and M1) run.
    """
    kind = EstimatorKind(kind)
    monitor = monitor or MonitorService()
    joint = joint and train.k >= 2

    if kind == EstimatorKind.LINEAR_CF:
        with monitor.stage("linear-cf"):
            curve = _attributed("linear-cf", linear_cf_estimator, train, grid)
        return EstimatorResult(estimator=kind, mean_curve=curve)

    if kind == EstimatorKind.NAIVE:
        with monitor.stage("naive"):
            if saved is not None:
                models = [saved.require(f"naive-y{k + 1}") for k in range(train.k)]
            else:
                models = [_attributed("naive", fit_naive, train, config.backbone, k) for k in range(train.k)]
            marginals = [
                _attributed("naive", naive_estimator, train, grid, config.backbone, k, model=model)
                for k, model in enumerate(models)
            ]
            copula = None
            if joint:
                copula = _attributed("naive", fit_gaussian_copula, naive_conditional_scores(train, models))
        return EstimatorResult(
            estimator=kind,
            marginals=marginals,
            copula=copula,
            models={f"naive-y{k + 1}": model for k, model in enumerate(models)},
        )

    if saved is not None:
        fit = _restored_fit(train, saved)
    else:
        fit = fit_tabcf(
            train,
            first_stage=config.stage_one_backbone,
            second_stage=config.backbone,
            control_scale=config.control_scale,
            cross_fit_folds=config.cross_fit_folds,
            seed=seed,
            monitor=monitor,
        )
    with monitor.stage("U3"):
        marginals = [
            _attributed(
                "U3",
                interventional_cdf,
                fit,
                grid,
                k,
                v_integration=config.v_integration,
                quadrature_nodes=config.quadrature_nodes,
            )
            for k in range(train.k)
        ]

    copula = None
    if joint:
        with monitor.stage("M1"):
            if kind == EstimatorKind.TABCF_INDEPENDENCE:
                copula = independence_copula(train.k)
            else:
                copula = _attributed(
                    "M1",
                    fit_working_copula,
                    fit,
                    CopulaKind.GAUSSIAN,
                    config.copula_score_mode,
                    v_integration=config.v_integration,
                    quadrature_nodes=config.quadrature_nodes,
                )

    models = {"first_stage": fit.first_stage} if fit.first_stage is not None else {}
    models.update({f"second_stage_y{k + 1}": model for k, model in enumerate(fit.second_stages)})
    return EstimatorResult(estimator=kind, marginals=marginals, copula=copula, fit=fit, models=models)


def _restored_fit(train: Dataset, saved: SavedEstimator) -> CfFit:
    if saved.controls is None:
        raise ConfigurationError(f"Saved TabCF models need {CONTROLS_FILE}.")
    second_stages = [saved.require(f"second_stage_y{k + 1}") for k in range(train.k)]
    return restore_tabcf(
        train,
        second_stages,
        saved.controls,
        saved.control_scale,
        first_stage=saved.models.get("first_stage"),
    )
