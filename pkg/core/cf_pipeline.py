"""
Control-function estimation of interventional distributions.

    U1  fit F_{X|Z,W} and form the plug-in control V̂_i = F̂(X_i | Z_i, W_i)
    U2  fit F_{Y_k|X,V,W} for every outcome column
    U3  average the second stage over the control (and, for the marginal law,
        over the training covariates) at every intervention level
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from sklearn.model_selection import KFold

from core.backbone_factory import fit_backbone
from core.exceptions import ConfigurationError, DomainError, FoldError, ShapeError, StageError, TabCFError
from models.backbone_config import BackboneConfig
from models.dataset import Dataset
from models.enums import ControlScale, VIntegration
from models.interventional import (
    CfFit,
    ControlValues,
    EvaluationGrid,
    InterventionalCdf,
    transform_controls,
)
from models.scm_setting import ScmSetting
from plugins.backbones import BaseBackbone
from services.monitor_service import MonitorService
from services.simulation_service import oracle_first_stage_cdf

logger = logging.getLogger(__name__)

ENDPOINT_TOLERANCE = 0.02
REPAIR_NOISE = 1e-9


# ==============================================================================
# STAGE U1
# ==============================================================================

def stage_u1(ds: Dataset, config: BackboneConfig) -> Tuple[BaseBackbone, ControlValues]:
    features = ds.first_stage_features
    model = fit_backbone(config, features, ds.x, name="first-stage")
    v = np.clip(model.cdf_pointwise(features, ds.x), 0.0, 1.0)
    logger.info("[U1] %s first stage on n=%d; mean V=%.4f", config.kind.value, ds.n, v.mean())
    return model, ControlValues(v=v, source="full-sample")


def cross_fit_controls(ds: Dataset, k: int, config: BackboneConfig, seed: int) -> ControlValues:
    """Out-of-fold control values: row i is scored by a model fitted without i's fold."""
    if k < 2:
        raise FoldError(f"Cross-fitting needs at least 2 folds, got {k}.")
    if k > ds.n:
        raise FoldError(f"{k} folds requested for only {ds.n} rows.")

    features = ds.first_stage_features
    v = np.empty(ds.n)
    folds = KFold(n_splits=k, shuffle=True, random_state=seed)
    for fold, (train_idx, held_idx) in enumerate(folds.split(features)):
        model = fit_backbone(config, features[train_idx], ds.x[train_idx], name=f"first-stage[fold {fold}]")
        v[held_idx] = model.cdf_pointwise(features[held_idx], ds.x[held_idx])
    logger.info("[U1] cross-fitted controls with %d folds on n=%d", k, ds.n)
    return ControlValues(v=np.clip(v, 0.0, 1.0), source="cross-fitted", folds=k)


def oracle_controls(setting: ScmSetting, ds: Dataset) -> ControlValues:
    """Analytic first-stage PIT of a synthetic design, bypassing any fitted model."""
    w = ds.w[:, 0] if ds.p else None
    v = oracle_first_stage_cdf(setting, ds.z, ds.x, w)
    return ControlValues(v=np.clip(v, 0.0, 1.0), source="oracle")


# ==============================================================================
# STAGE U2
# ==============================================================================

def stage_u2(
    ds: Dataset,
    controls: ControlValues,
    config: BackboneConfig,
    control_scale: ControlScale = ControlScale.NORMAL,
) -> CfFit:
    if controls.n != ds.n:
        raise ShapeError(f"{controls.n} control values for {ds.n} rows.")
    features = np.column_stack([ds.x, transform_controls(controls.v, control_scale, ds.n), ds.w])
    models = [
        fit_backbone(config, features, ds.y[:, j], name=f"second-stage[{j}]")
        for j in range(ds.k)
    ]
    logger.info("[U2] %d %s second stage(s), control scale %s", ds.k, config.kind.value, control_scale.value)
    return CfFit(
        first_stage=None,
        second_stages=models,
        controls=controls,
        train=ds,
        control_scale=control_scale,
    )


# ==============================================================================
# STAGE U3
# ==============================================================================

def _control_nodes(fit: CfFit, v_integration: VIntegration, quadrature_nodes: int) -> np.ndarray:
    if v_integration == VIntegration.QUADRATURE:
        nodes = (np.arange(quadrature_nodes) + 0.5) / quadrature_nodes
        return fit.control_feature(nodes)
    return fit.control_feature(fit.controls.v)


def _context(fit: CfFit, conditioning_w: Optional[np.ndarray], v_integration: VIntegration, quadrature_nodes: int) -> np.ndarray:
    """Rows (control, W...) the second stage is averaged over."""
    c = _control_nodes(fit, v_integration, quadrature_nodes)
    p = fit.train.p
    if conditioning_w is not None:
        return np.column_stack([c, np.tile(conditioning_w, (c.size, 1))]) if p else c[:, None]
    if v_integration == VIntegration.EMPIRICAL:
        return np.column_stack([c, fit.train.w])
    if not p:
        return c[:, None]
    w = fit.train.w
    return np.column_stack([np.repeat(c, w.shape[0]), np.tile(w, (c.size, 1))])


def repair_rows(cdf: np.ndarray, x_grid: np.ndarray) -> np.ndarray:
    """Running maximum along y then clip to [0, 1]."""
    repaired = np.clip(np.maximum.accumulate(cdf, axis=1), 0.0, 1.0)
    change = float(np.max(np.abs(repaired - cdf))) if cdf.size else 0.0
    if change > REPAIR_NOISE:
        logger.warning("[U3] monotone repair changed CDF values by up to %.3g", change)

    low = np.flatnonzero(repaired[:, 0] > ENDPOINT_TOLERANCE)
    high = np.flatnonzero(repaired[:, -1] < 1.0 - ENDPOINT_TOLERANCE)
    if low.size or high.size:
        worst = np.concatenate([low, high])
        logger.warning(
            "[U3] CDF rows do not reach [%.2f, %.2f] at %d grid level(s), e.g. x=%.4g; "
            "the outcome grid may be too narrow",
            ENDPOINT_TOLERANCE, 1.0 - ENDPOINT_TOLERANCE, np.unique(worst).size, x_grid[worst[0]],
        )
    return repaired


def interventional_cdf(
    fit: CfFit,
    grid: EvaluationGrid,
    outcome_index: int = 0,
    conditioning_w: Optional[np.ndarray] = None,
    v_integration: VIntegration = VIntegration.EMPIRICAL,
    quadrature_nodes: int = 64,
) -> InterventionalCdf:
    """
    F̂_{Y(x)}(y) = (1/n) Σ_i F̂(y | x, v̂_i, w_i) for the marginal law, or the
    same average with w pinned for the conditional-on-w law.
    """
    if not 0 <= outcome_index < fit.train.k:
        raise DomainError(f"outcome_index {outcome_index} out of range for K={fit.train.k}.")
    if conditioning_w is not None:
        conditioning_w = np.asarray(conditioning_w, dtype=float).reshape(-1)
        if conditioning_w.size != fit.train.p:
            raise ShapeError(f"Conditioning w has {conditioning_w.size} entries, expected p={fit.train.p}.")

    model = fit.second_stages[outcome_index]
    y_grid = grid.y_grid_for(fit.train.y[:, outcome_index])
    context = _context(fit, conditioning_w, VIntegration(v_integration), quadrature_nodes)
    raw = model.average_cdf(grid.x_grid, context, y_grid)
    logger.debug(
        "[U3] outcome %d: %d levels x %d y-points over %d context rows",
        outcome_index, grid.x_grid.size, y_grid.size, context.shape[0],
    )
    return InterventionalCdf(
        x_grid=grid.x_grid,
        y_grid=y_grid,
        cdf=repair_rows(raw, grid.x_grid),
        conditioning_w=conditioning_w,
        outcome_index=outcome_index,
    )


# ==============================================================================
# END TO END
# ==============================================================================

def fit_tabcf(
    ds: Dataset,
    first_stage: BackboneConfig,
    second_stage: Optional[BackboneConfig] = None,
    control_scale: ControlScale = ControlScale.NORMAL,
    cross_fit_folds: int = 0,
    seed: int = 0,
    monitor: Optional[MonitorService] = None,
) -> CfFit:
    """
    Stages U1 and U2 with failures attributed to the stage that raised them.
    Cross-fitted runs keep only the fold models' controls; first_stage is None.
    """
    monitor = monitor or MonitorService()
    second_stage = second_stage or first_stage

    first_model = None
    with monitor.stage("U1"):
        try:
            if cross_fit_folds:
                controls = cross_fit_controls(ds, cross_fit_folds, first_stage, seed)
            else:
                first_model, controls = stage_u1(ds, first_stage)
        except TabCFError as e:
            raise StageError("U1", e) from e

    with monitor.stage("U2"):
        try:
            fit = stage_u2(ds, controls, second_stage, control_scale)
        except TabCFError as e:
            raise StageError("U2", e) from e

    return fit.model_copy(update={"first_stage": first_model})


def restore_tabcf(
    ds: Dataset,
    second_stages: List[BaseBackbone],
    controls: ControlValues,
    control_scale: ControlScale = ControlScale.NORMAL,
    first_stage: Optional[BaseBackbone] = None,
) -> CfFit:
    """Rebuild a fit from saved second stages and controls; nothing is refitted."""
    if controls.n != ds.n:
        raise ConfigurationError(
            f"Saved controls cover {controls.n} rows but the training sample has {ds.n}."
        )
    if len(second_stages) != ds.k:
        raise ConfigurationError(f"{len(second_stages)} saved second stage(s) for K={ds.k} outcomes.")
    for model in second_stages:
        if model.feature_dim != 2 + ds.p:
            raise ConfigurationError(
                f"Saved {model.backbone_name} expects {model.feature_dim} features; the data gives {2 + ds.p}."
            )
    logger.info("[U1] skipped: %s controls restored for n=%d", controls.label, ds.n)
    return CfFit(
        first_stage=first_stage,
        second_stages=second_stages,
        controls=controls,
        train=ds,
        control_scale=control_scale,
    )
