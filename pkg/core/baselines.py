"""
Reference estimators: the naive conditional-CDF regression (no IV adjustment)
and the linear control-function estimator (two-stage residual inclusion).
"""

import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from core.backbone_factory import fit_backbone
from core.cf_pipeline import repair_rows
from core.exceptions import DomainError, InsufficientDataError, SingularityError
from models.backbone_config import BackboneConfig
from models.dataset import Dataset
from models.interventional import EvaluationGrid, InterventionalCdf
from plugins.backbones import BaseBackbone

logger = logging.getLogger(__name__)

CONDITION_WARNING = 1e3


def fit_naive(ds: Dataset, config: BackboneConfig, outcome_index: int = 0) -> BaseBackbone:
    """Conditional CDF of Y_k given (X, W) with no instrument adjustment."""
    if not 0 <= outcome_index < ds.k:
        raise DomainError(f"outcome_index {outcome_index} out of range for K={ds.k}.")
    features = np.column_stack([ds.x, ds.w])
    return fit_backbone(config, features, ds.y[:, outcome_index], name=f"naive-y{outcome_index + 1}")


def naive_estimator(
    ds: Dataset,
    grid: EvaluationGrid,
    config: BackboneConfig,
    outcome_index: int = 0,
    model: Optional[BaseBackbone] = None,
) -> InterventionalCdf:
    """F̂_{Y|X,W}(y | x, w) averaged over the training W rows (plain F̂_{Y|X} when p = 0)."""
    if model is None:
        model = fit_naive(ds, config, outcome_index)
    y_grid = grid.y_grid_for(ds.y[:, outcome_index])
    context = ds.w if ds.p else np.empty((1, 0))
    raw = model.average_cdf(grid.x_grid, context, y_grid)
    return InterventionalCdf(
        x_grid=grid.x_grid,
        y_grid=y_grid,
        cdf=repair_rows(raw, grid.x_grid),
        outcome_index=outcome_index,
    )


def naive_conditional_scores(ds: Dataset, models: List[BaseBackbone]) -> np.ndarray:
    """u_ik = F̂_{Y_k|X,W}(y_ik | x_i, w_i); copula scores for the naive joint law."""
    features = np.column_stack([ds.x, ds.w])
    return np.column_stack([
        np.clip(model.cdf_pointwise(features, ds.y[:, k]), 0.0, 1.0) for k, model in enumerate(models)
    ])


class LinearCfFit(BaseModel):
    """Second-stage coefficients of Y on (1, X, r̂, W)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    intercept: float
    slope_x: float
    slope_residual: float
    slope_w: np.ndarray
    w_mean: np.ndarray
    condition_number: float

    def mean_curve(self, x_grid: np.ndarray) -> np.ndarray:
        return self.intercept + self.slope_x * np.asarray(x_grid, dtype=float) + float(self.slope_w @ self.w_mean)


def _least_squares(design: np.ndarray, target: np.ndarray, stage: str) -> np.ndarray:
    coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < design.shape[1]:
        raise SingularityError(
            f"Linear CF {stage} design is rank deficient (rank {rank} < {design.shape[1]})."
        )
    return coef


def fit_linear_cf(ds: Dataset, outcome_index: int = 0) -> LinearCfFit:
    if ds.n < ds.p + 4:
        raise InsufficientDataError(f"Linear CF needs n >= p + 4 = {ds.p + 4} (got {ds.n}).")
    ones = np.ones(ds.n)

    first = np.column_stack([ones, ds.z, ds.w])
    residual = ds.x - first @ _least_squares(first, ds.x, "first-stage")

    second = np.column_stack([ones, ds.x, residual, ds.w])
    coef = _least_squares(second, ds.y[:, outcome_index], "second-stage")

    regressors = np.column_stack([ds.x, residual, ds.w])
    spread = regressors.std(axis=0)
    if np.all(spread > 0):
        condition = float(np.linalg.cond(np.corrcoef(regressors, rowvar=False)))
    else:
        condition = float("inf")
    if not condition <= CONDITION_WARNING:
        logger.warning(
            "Linear CF second stage is near-collinear (condition number %.3g); "
            "the instrument may be weak",
            condition,
        )

    return LinearCfFit(
        intercept=float(coef[0]),
        slope_x=float(coef[1]),
        slope_residual=float(coef[2]),
        slope_w=coef[3:],
        w_mean=ds.w.mean(axis=0),
        condition_number=condition,
    )


def linear_cf_estimator(ds: Dataset, grid: EvaluationGrid, outcome_index: int = 0) -> np.ndarray:
    """Mean curve b0 + bX·x + bWᵀ·mean(W) of the two-stage residual-inclusion fit."""
    return fit_linear_cf(ds, outcome_index).mean_curve(grid.x_grid)
