"""
Linear-Gaussian conditional CDF: Y | f ~ N(β0 + βᵀf, σ(f)²).
"""

from __future__ import annotations

import logging
from typing import Any, Dict

import numpy as np
from scipy.special import ndtr

from models.enums import BackboneKind
from plugins.backbones.base_backbone import BaseBackbone

logger = logging.getLogger(__name__)

# E[log|ε|] for ε ~ N(0, 1) is −0.6352; the offset recentres ½·log(r²).
LOG_ABS_NORMAL_OFFSET = 0.6352
SCALE_FLOOR = 1e-8
AVERAGE_CELLS = 4_000_000


def _design(features: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(features.shape[0]), features])


class GaussianLinearBackbone(BaseBackbone):
    """
    Ordinary least squares for the location and either a constant residual
    scale (default) or a log-linear scale fitted on log |residual|.
    """

    kind = BackboneKind.GAUSSIAN_LINEAR

    def __init__(self, config=None, name=None):
        super().__init__(config, name)
        self.coef: np.ndarray = np.empty(0)
        self.sigma: float = 1.0
        self.log_scale_coef: np.ndarray | None = None

    def _fit(self, features: np.ndarray, targets: np.ndarray) -> None:
        design = _design(features)
        coef, _, rank, _ = np.linalg.lstsq(design, targets, rcond=None)
        residuals = targets - design @ coef
        dof = targets.size - rank
        rss = float(residuals @ residuals)
        sigma = np.sqrt(rss / dof) if dof > 0 else np.sqrt(rss / targets.size)

        self.coef = coef
        self.sigma = max(float(sigma), self.scale_floor)
        self.log_scale_coef = None

        if not self.config.homoscedastic:
            log_abs = 0.5 * np.log(residuals**2 + np.finfo(float).tiny) + LOG_ABS_NORMAL_OFFSET
            self.log_scale_coef, *_ = np.linalg.lstsq(design, log_abs, rcond=None)

        if rank < design.shape[1]:
            logger.warning(
                "%s: design has rank %d < %d; minimum-norm coefficients used",
                self.backbone_name, rank, design.shape[1],
            )

    @property
    def scale_floor(self) -> float:
        span = self.y_max - self.y_min
        return SCALE_FLOOR * (span if span > 0 else 1.0)

    # ------------------------------------------------------------------
    # Location / scale
    # ------------------------------------------------------------------
    def location(self, features: np.ndarray) -> np.ndarray:
        return self.coef[0] + features @ self.coef[1:]

    def scale(self, features: np.ndarray) -> np.ndarray:
        if self.log_scale_coef is None:
            return np.full(features.shape[0], self.sigma)
        log_sd = self.log_scale_coef[0] + features @ self.log_scale_coef[1:]
        return np.maximum(np.exp(log_sd), self.scale_floor)

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------
    def cdf_matrix(self, features: np.ndarray, y_grid: np.ndarray) -> np.ndarray:
        features = self.check_features(features)
        y_grid = np.asarray(y_grid, dtype=float).reshape(-1)
        loc = self.location(features)
        sd = self.scale(features)
        return ndtr((y_grid[None, :] - loc[:, None]) / sd[:, None])

    def cdf_pointwise(self, features: np.ndarray, y: np.ndarray) -> np.ndarray:
        features = self.check_features(features)
        y = np.asarray(y, dtype=float).reshape(-1)
        return ndtr((y - self.location(features)) / self.scale(features))

    def average_cdf(
        self, x_grid: np.ndarray, context: np.ndarray, y_grid: np.ndarray
    ) -> np.ndarray:
        # Rows are built explicitly so a single context row reproduces cdf_matrix exactly.
        x_grid = np.asarray(x_grid, dtype=float).reshape(-1)
        y_grid = np.asarray(y_grid, dtype=float).reshape(-1)
        context = np.asarray(context, dtype=float)
        if context.ndim == 1:
            context = context.reshape(-1, self.feature_dim - 1)
        r = context.shape[0]
        out = np.empty((x_grid.size, y_grid.size))
        if r * y_grid.size > AVERAGE_CELLS:
            return self._average_large_context(x_grid, context, y_grid, out)
        chunk = max(1, AVERAGE_CELLS // (r * y_grid.size))
        for start in range(0, x_grid.size, chunk):
            block = x_grid[start : start + chunk]
            rows = np.column_stack([np.repeat(block, r), np.tile(context, (block.size, 1))])
            values = self.cdf_matrix(rows, y_grid).reshape(block.size, r, y_grid.size)
            out[start : start + block.size] = values.mean(axis=1)
        return out

    def _average_large_context(self, x_grid, context, y_grid, out) -> np.ndarray:
        r = context.shape[0]
        rows_per_chunk = max(1, AVERAGE_CELLS // y_grid.size)
        for g, level in enumerate(x_grid):
            total = np.zeros(y_grid.size)
            for start in range(0, r, rows_per_chunk):
                part = context[start : start + rows_per_chunk]
                rows = np.column_stack([np.full(part.shape[0], level), part])
                total += self.cdf_matrix(rows, y_grid).sum(axis=0)
            out[g] = total / r
        return out

    # ------------------------------------------------------------------
    # Persistence
    # ------------------------------------------------------------------
    def params(self) -> Dict[str, Any]:
        return {
            "coef": self.coef.tolist(),
            "sigma": self.sigma,
            "log_scale_coef": None if self.log_scale_coef is None else self.log_scale_coef.tolist(),
        }

    def _load_params(self, params: Dict[str, Any]) -> None:
        self.coef = np.asarray(params["coef"], dtype=float)
        self.sigma = float(params["sigma"])
        coef = params.get("log_scale_coef")
        self.log_scale_coef = None if coef is None else np.asarray(coef, dtype=float)
