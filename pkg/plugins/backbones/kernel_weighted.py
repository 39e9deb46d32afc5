"""
Shared machinery for backbones that weight training rows with a product
Gaussian kernel over standardized features.

A fitted model evaluates F(y | f) = Σ_j w_j(f) · b_j(y), where w(f) are the
normalized kernel weights, the mixture map turns them into component masses
and b(y) is the per-component CDF basis. Both subclasses keep the mixture map
affine so averages of weight vectors commute with it.
"""

from __future__ import annotations

import logging
from abc import abstractmethod
from typing import Any, Dict, Optional

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.neighbors import NearestNeighbors

from core.exceptions import DegenerateTargetError, InsufficientDataError
from plugins.backbones.base_backbone import BaseBackbone

logger = logging.getLogger(__name__)

ROW_CHUNK = 512
TINY = np.finfo(float).tiny


class KernelWeightedBackbone(BaseBackbone):

    def __init__(self, config=None, name=None):
        super().__init__(config, name)
        self.mean: np.ndarray = np.empty(0)
        self.sd: np.ndarray = np.empty(0)
        self.bandwidth: float = 1.0
        self.train_features: np.ndarray = np.empty((0, 0))
        self.targets: np.ndarray = np.empty(0)
        self._neighbors: Optional[NearestNeighbors] = None

    # ------------------------------------------------------------------
    # Fitting
    # ------------------------------------------------------------------
    def _fit(self, features: np.ndarray, targets: np.ndarray) -> None:
        if self.y_max == self.y_min:
            raise DegenerateTargetError(
                f"{self.backbone_name}: constant target {self.y_min:g} cannot be modelled."
            )
        n, d = features.shape
        self.mean = features.mean(axis=0)
        sd = features.std(axis=0)
        self.sd = np.where(sd > 0, sd, 1.0)
        self.train_features = (features - self.mean) / self.sd
        self.targets = targets.copy()

        if self.config.bandwidth == "rule-of-thumb":
            self.bandwidth = float(n ** (-1.0 / (d + 4)))
        else:
            self.bandwidth = float(self.config.bandwidth)

        self._build_neighbors()
        self._fit_components(targets)
        logger.debug("%s bandwidth=%.4g (standardized units)", self.backbone_name, self.bandwidth)

    def _build_neighbors(self) -> None:
        self._neighbors = None
        if self.config.neighbors:
            n = self.train_features.shape[0]
            if self.config.neighbors > n:
                raise InsufficientDataError(
                    f"{self.backbone_name}: {self.config.neighbors} neighbors requested but only {n} training rows."
                )
            self._neighbors = NearestNeighbors(n_neighbors=self.config.neighbors).fit(self.train_features)

    @abstractmethod
    def _fit_components(self, targets: np.ndarray) -> None:
        """Prepare whatever _mixture/_basis need from the training targets."""

    @abstractmethod
    def _mixture(self, weights: np.ndarray) -> np.ndarray:
        """Affine map from normalized weights (m×n) to component masses (m×J)."""

    @abstractmethod
    def _basis(self, y: np.ndarray) -> np.ndarray:
        """Component CDFs at each y (len(y)×J)."""

    # ------------------------------------------------------------------
    # Weights
    # ------------------------------------------------------------------
    def standardize(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) / self.sd

    def _log_kernel(self, standardized: np.ndarray, train: np.ndarray) -> np.ndarray:
        if train.shape[1] == 0:
            return np.zeros((standardized.shape[0], train.shape[0]))
        return -0.5 * cdist(standardized, train, "sqeuclidean") / self.bandwidth**2

    def weights(self, features: np.ndarray) -> np.ndarray:
        """Normalized kernel weights of each query row over the training rows."""
        standardized = self.standardize(self.check_features(features))
        log_k = self._log_kernel(standardized, self.train_features)
        if self._neighbors is not None:
            nearest = self._neighbors.kneighbors(standardized, return_distance=False)
            kept = np.full_like(log_k, -np.inf)
            np.put_along_axis(kept, nearest, np.take_along_axis(log_k, nearest, axis=1), axis=1)
            log_k = kept
        log_k -= log_k.max(axis=1, keepdims=True)
        w = np.exp(log_k)
        return w / w.sum(axis=1, keepdims=True)

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------
    def cdf_matrix(self, features: np.ndarray, y_grid: np.ndarray) -> np.ndarray:
        features = self.check_features(features)
        basis = self._basis(np.asarray(y_grid, dtype=float).reshape(-1))
        out = np.empty((features.shape[0], basis.shape[0]))
        for start in range(0, features.shape[0], ROW_CHUNK):
            rows = features[start : start + ROW_CHUNK]
            out[start : start + rows.shape[0]] = self._mixture(self.weights(rows)) @ basis.T
        return np.clip(out, 0.0, 1.0)

    def cdf_pointwise(self, features: np.ndarray, y: np.ndarray) -> np.ndarray:
        features = self.check_features(features)
        y = np.asarray(y, dtype=float).reshape(-1)
        out = np.empty(features.shape[0])
        for start in range(0, features.shape[0], ROW_CHUNK):
            stop = start + ROW_CHUNK
            masses = self._mixture(self.weights(features[start:stop]))
            out[start : start + masses.shape[0]] = np.sum(masses * self._basis(y[start:stop]), axis=1)
        return np.clip(out, 0.0, 1.0)

    def average_cdf(
        self, x_grid: np.ndarray, context: np.ndarray, y_grid: np.ndarray
    ) -> np.ndarray:
        """
        Exact context average using the product structure of the kernel:
        the weight of training row j at (x_g, c_i) is KX_jg·A_ij / S_ig, so the
        averaged weight vector is KX_jg · Σ_i A_ij / S_ig / R.
        Truncated (nearest-neighbor) kernels fall back to the row-by-row path.
        """
        if self._neighbors is not None:
            return super().average_cdf(x_grid, context, y_grid)

        x_grid = np.asarray(x_grid, dtype=float).reshape(-1)
        context = np.asarray(context, dtype=float)
        if context.ndim == 1:
            context = context.reshape(-1, self.feature_dim - 1)
        r = context.shape[0]

        x_std = (x_grid - self.mean[0]) / self.sd[0]
        log_kx = -0.5 * ((self.train_features[:, :1] - x_std[None, :]) / self.bandwidth) ** 2
        kx = np.exp(log_kx - log_kx.max(axis=0, keepdims=True))  # n×G

        context_std = (context - self.mean[1:]) / self.sd[1:]
        train_context = self.train_features[:, 1:]
        averaged = np.zeros_like(kx)
        for start in range(0, r, ROW_CHUNK):
            log_a = self._log_kernel(context_std[start : start + ROW_CHUNK], train_context)
            a = np.exp(log_a - log_a.max(axis=1, keepdims=True))  # chunk×n
            s = np.maximum(a @ kx, TINY)  # chunk×G
            averaged += kx * (a.T @ (1.0 / s))
        averaged /= averaged.sum(axis=0, keepdims=True)

        basis = self._basis(np.asarray(y_grid, dtype=float).reshape(-1))
        return np.clip(self._mixture(averaged.T) @ basis.T, 0.0, 1.0)

    # ------------------------------------------------------------------
    # Persistence
    # ------------------------------------------------------------------
    def params(self) -> Dict[str, Any]:
        return {
            "mean": self.mean.tolist(),
            "sd": self.sd.tolist(),
            "bandwidth": self.bandwidth,
            "train_features": self.train_features.tolist(),
            "targets": self.targets.tolist(),
        }

    def _load_params(self, params: Dict[str, Any]) -> None:
        self.mean = np.asarray(params["mean"], dtype=float)
        self.sd = np.asarray(params["sd"], dtype=float)
        self.bandwidth = float(params["bandwidth"])
        self.train_features = np.asarray(params["train_features"], dtype=float).reshape(-1, self.feature_dim)
        self.targets = np.asarray(params["targets"], dtype=float)
        self._build_neighbors()
        self._fit_components(self.targets)
