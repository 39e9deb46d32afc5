"""
Binned predictive distribution: equal-mass target bins, kernel-weighted bin
masses blended with a small uniform share, uniform CDF within each bin.

The smoothing is a linear blend (1 − s)·p + s/J rather than a logistic
(softmax) transform of the bin logits. The blend keeps the weights-to-masses
map affine, which the factorized context average in KernelWeightedBackbone
relies on; both keep every bin mass strictly positive.
"""

from __future__ import annotations

import logging

import numpy as np

from models.enums import BackboneKind
from plugins.backbones.base_backbone import INVERSION_MARGIN
from plugins.backbones.kernel_weighted import KernelWeightedBackbone

logger = logging.getLogger(__name__)


class BinnedHistogramBackbone(KernelWeightedBackbone):

    kind = BackboneKind.BINNED_HISTOGRAM

    def __init__(self, config=None, name=None):
        super().__init__(config, name)
        self.edges: np.ndarray = np.empty(0)
        self.membership: np.ndarray = np.empty((0, 0))

    def _fit_components(self, targets: np.ndarray) -> None:
        pad = INVERSION_MARGIN * (self.y_max - self.y_min)
        interior = np.quantile(targets, np.linspace(0.0, 1.0, self.config.bins + 1)[1:-1])
        edges = np.unique(np.concatenate([[self.y_min - pad], interior, [self.y_max + pad]]))
        if edges.size - 1 < self.config.bins:
            logger.debug(
                "%s: %d of %d bins survive tied quantiles",
                self.backbone_name, edges.size - 1, self.config.bins,
            )
        self.edges = edges
        index = np.clip(np.searchsorted(edges, targets, side="right") - 1, 0, edges.size - 2)
        self.membership = np.zeros((targets.size, edges.size - 1))
        self.membership[np.arange(targets.size), index] = 1.0

    @property
    def n_bins(self) -> int:
        return self.edges.size - 1

    def bin_masses(self, weights: np.ndarray) -> np.ndarray:
        return self._mixture(weights)

    def _mixture(self, weights: np.ndarray) -> np.ndarray:
        share = self.config.histogram_smoothing
        return (1.0 - share) * (weights @ self.membership) + share / self.n_bins

    def _basis(self, y: np.ndarray) -> np.ndarray:
        lower = self.edges[:-1]
        width = np.diff(self.edges)
        return np.clip((y[:, None] - lower[None, :]) / width[None, :], 0.0, 1.0)
