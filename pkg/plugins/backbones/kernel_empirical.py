from __future__ import annotations

import numpy as np

from models.enums import BackboneKind
from plugins.backbones.kernel_weighted import KernelWeightedBackbone


class KernelEmpiricalBackbone(KernelWeightedBackbone):
    """Kernel-weighted empirical CDF of the training targets (ties count as ≤)."""

    kind = BackboneKind.KERNEL_EMPIRICAL

    def _fit_components(self, targets: np.ndarray) -> None:
        pass

    def _mixture(self, weights: np.ndarray) -> np.ndarray:
        return weights

    def _basis(self, y: np.ndarray) -> np.ndarray:
        return (self.targets[None, :] <= y[:, None]).astype(float)
