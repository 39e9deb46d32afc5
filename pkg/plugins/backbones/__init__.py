"""
Conditional-CDF regression backbones.
"""

from plugins.backbones.base_backbone import BaseBackbone
from .binned_histogram import BinnedHistogramBackbone
from .gaussian_linear import GaussianLinearBackbone
from .kernel_empirical import KernelEmpiricalBackbone
from .kernel_weighted import KernelWeightedBackbone

__all__ = [
    "BaseBackbone",
    "BinnedHistogramBackbone",
    "GaussianLinearBackbone",
    "KernelEmpiricalBackbone",
    "KernelWeightedBackbone",
]
