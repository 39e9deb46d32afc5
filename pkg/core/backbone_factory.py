"""
Backbone construction, fitting and JSON persistence.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Type, Union

import numpy as np

from core.exceptions import ConfigurationError
from models.backbone_config import BackboneConfig
from models.enums import BackboneKind
from plugins.backbones import (
    BaseBackbone,
    BinnedHistogramBackbone,
    GaussianLinearBackbone,
    KernelEmpiricalBackbone,
)

logger = logging.getLogger(__name__)

REGISTRY: Dict[BackboneKind, Type[BaseBackbone]] = {
    BackboneKind.GAUSSIAN_LINEAR: GaussianLinearBackbone,
    BackboneKind.KERNEL_EMPIRICAL: KernelEmpiricalBackbone,
    BackboneKind.BINNED_HISTOGRAM: BinnedHistogramBackbone,
}


class BackboneFactory:
    """Factory for creating and fitting configured conditional-CDF backbones."""

    def __init__(self, config: BackboneConfig):
        self.config = config

    def create(self, name: str = None) -> BaseBackbone:
        try:
            backbone_cls = REGISTRY[BackboneKind(self.config.kind)]
        except (KeyError, ValueError):
            raise ConfigurationError(f"Unknown backbone kind '{self.config.kind}'.")
        return backbone_cls(self.config, name=name)

    def fit(self, features: np.ndarray, targets: np.ndarray, name: str = None) -> BaseBackbone:
        return self.create(name).fit(features, targets)


def fit_backbone(
    config: BackboneConfig, features: np.ndarray, targets: np.ndarray, name: str = None
) -> BaseBackbone:
    return BackboneFactory(config).fit(features, targets, name=name)


def save_model(model: BaseBackbone, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model.to_dict()), encoding="utf-8")
    logger.debug("Saved %s model to %s", model.kind.value, path)
    return path


def load_model(path: Union[str, Path]) -> BaseBackbone:
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        backbone_cls = REGISTRY[BackboneKind(document["kind"])]
    except (KeyError, ValueError):
        raise ConfigurationError(f"{path}: not a saved backbone model.")
    return backbone_cls.from_dict(document)
