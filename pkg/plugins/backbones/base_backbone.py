from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import numpy as np

from core.exceptions import DomainError, InsufficientDataError, ShapeError
from models.backbone_config import BackboneConfig
from models.enums import BackboneKind

logger = logging.getLogger(__name__)

INVERSION_POINTS = 512
INVERSION_MARGIN = 0.1


class BaseBackbone(ABC):
    """
    Base class for all conditional-CDF backbones.

    Each backbone must:
        - implement _fit(features, targets)
        - implement cdf_matrix(features, y_grid) and cdf_pointwise(features, y)
        - provide params() / _load_params() for JSON persistence

    Fitted models are treated as immutable; every evaluation method is a pure
    function of the fitted state and may be called from several workers.
    """

    kind: BackboneKind

    def __init__(self, config: Optional[BackboneConfig] = None, name: Optional[str] = None):
        self.config = config or BackboneConfig(kind=self.kind)
        self.backbone_name = name or self.__class__.__name__
        self.feature_dim: Optional[int] = None
        self.y_min: Optional[float] = None
        self.y_max: Optional[float] = None
        self.n_train: int = 0

    # ------------------------------------------------------------------
    # Fitting
    # ------------------------------------------------------------------
    def fit(self, features: np.ndarray, targets: np.ndarray) -> "BaseBackbone":
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        targets = np.asarray(targets, dtype=float).reshape(-1)

        n = targets.shape[0]
        if features.shape[0] != n:
            raise ShapeError(
                f"{self.backbone_name}: {features.shape[0]} feature rows but {n} targets."
            )
        minimum = self.config.minimum_samples
        if n < minimum:
            raise InsufficientDataError(
                f"{self.backbone_name} needs at least {minimum} observations (got {n})."
            )
        if not (np.all(np.isfinite(features)) and np.all(np.isfinite(targets))):
            raise DomainError(f"{self.backbone_name}: inputs must be finite.")

        self.feature_dim = features.shape[1]
        self.y_min = float(targets.min())
        self.y_max = float(targets.max())
        self.n_train = n

        self._fit(features, targets)
        logger.debug(
            "Fitted %s on n=%d, d=%d, target support [%.4g, %.4g]",
            self.backbone_name, n, self.feature_dim, self.y_min, self.y_max,
        )
        return self

    @abstractmethod
    def _fit(self, features: np.ndarray, targets: np.ndarray) -> None:
        """Backbone-specific estimation."""

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------
    @abstractmethod
    def cdf_matrix(self, features: np.ndarray, y_grid: np.ndarray) -> np.ndarray:
        """F(y_m | features_i) for every row i and grid point m (m×M)."""

    @abstractmethod
    def cdf_pointwise(self, features: np.ndarray, y: np.ndarray) -> np.ndarray:
        """F(y_i | features_i) row by row (length m)."""

    def check_features(self, features: np.ndarray) -> np.ndarray:
        if self.feature_dim is None:
            raise ShapeError(f"{self.backbone_name} has not been fitted.")
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(1, -1)
        if features.shape[1] != self.feature_dim:
            raise ShapeError(
                f"{self.backbone_name} expects {self.feature_dim} features, got {features.shape[1]}."
            )
        return features

    def eval_cdf(self, features: np.ndarray, y: float) -> float:
        features = self.check_features(features)
        if features.shape[0] != 1:
            raise ShapeError("eval_cdf takes a single feature vector.")
        return float(self.cdf_pointwise(features, np.array([float(y)]))[0])

    @property
    def support_range(self) -> float:
        span = self.y_max - self.y_min
        return span if span > 0 else max(abs(self.y_min), 1.0)

    @property
    def inversion_grid(self) -> np.ndarray:
        pad = INVERSION_MARGIN * self.support_range
        return np.linspace(self.y_min - pad, self.y_max + pad, INVERSION_POINTS)

    def eval_quantile(self, features: np.ndarray, tau: float) -> float:
        """
        Generalized inverse inf{y : F(y | f) >= tau}: bracket on the inversion
        grid, start from the linear interpolation between the bracketing nodes
        and bisect so the returned point satisfies F >= tau.
        """
        if not 0.0 < tau < 1.0:
            raise DomainError(f"tau must lie in (0, 1), got {tau}.")
        features = self.check_features(features)
        if features.shape[0] != 1:
            raise ShapeError("eval_quantile takes a single feature vector.")

        grid = self.inversion_grid
        values = self.cdf_matrix(features, grid)[0]
        step = grid[1] - grid[0]

        def cdf_at(y: float) -> float:
            return float(self.cdf_pointwise(features, np.array([y]))[0])

        hits = np.flatnonzero(values >= tau)
        if hits.size == 0:
            lo, hi = grid[-1], grid[-1] + step
            while cdf_at(hi) < tau:
                lo, hi = hi, hi + 2.0 * (hi - lo)
        elif hits[0] == 0:
            lo, hi = grid[0] - step, grid[0]
            while cdf_at(lo) >= tau:
                lo, hi = lo - 2.0 * (hi - lo), lo
        else:
            m = hits[0]
            lo, hi = grid[m - 1], grid[m]
            f_lo, f_hi = values[m - 1], values[m]
            guess = lo + (tau - f_lo) / (f_hi - f_lo) * (hi - lo)
            if lo < guess < hi:
                if cdf_at(guess) >= tau:
                    hi = guess
                else:
                    lo = guess

        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if cdf_at(mid) >= tau:
                hi = mid
            else:
                lo = mid
        return float(hi)

    def average_cdf(
        self, x_grid: np.ndarray, context: np.ndarray, y_grid: np.ndarray
    ) -> np.ndarray:
        """
        (1/R) Σ_r F(y_m | x_g, context_r) for every grid level (G×M).

        The first feature is the varying level; context holds the remaining
        features row by row.
        """
        x_grid = np.asarray(x_grid, dtype=float).reshape(-1)
        context = np.asarray(context, dtype=float)
        if context.ndim == 1:
            context = context.reshape(-1, self.feature_dim - 1)
        out = np.empty((x_grid.size, np.asarray(y_grid).size))
        for g, level in enumerate(x_grid):
            rows = np.column_stack([np.full(context.shape[0], level), context])
            out[g] = self.cdf_matrix(rows, y_grid).mean(axis=0)
        return out

    # ------------------------------------------------------------------
    # Persistence
    # ------------------------------------------------------------------
    @abstractmethod
    def params(self) -> Dict[str, Any]:
        """JSON-ready fitted parameters."""

    @abstractmethod
    def _load_params(self, params: Dict[str, Any]) -> None:
        """Inverse of params()."""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "config": self.config.model_dump(mode="json"),
            "feature_dim": self.feature_dim,
            "y_min": self.y_min,
            "y_max": self.y_max,
            "n_train": self.n_train,
            "params": self.params(),
        }

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "BaseBackbone":
        model = cls(BackboneConfig(**document["config"]))
        model.feature_dim = document["feature_dim"]
        model.y_min = document["y_min"]
        model.y_max = document["y_max"]
        model.n_train = document["n_train"]
        model._load_params(document["params"])
        return model
