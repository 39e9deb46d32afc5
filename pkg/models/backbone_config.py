from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator

from models.enums import BackboneKind


class BackboneConfig(BaseModel):
    """
    Settings for one conditional-CDF regression backbone.

    The same config drives both stages of a run unless a stage-specific
    override is provided in the run configuration.
    """

    kind: BackboneKind = Field(
        BackboneKind.GAUSSIAN_LINEAR,
        description="gaussian-linear | kernel-empirical | binned-histogram",
    )

    bandwidth: Union[Literal["rule-of-thumb"], float] = Field(
        "rule-of-thumb",
        description="Kernel bandwidth in standardized feature units, or the n^(-1/(d+4)) rule",
    )

    neighbors: Optional[int] = Field(
        None,
        description="Truncate kernel weights to the k nearest training rows (None = all rows)",
    )

    bins: int = Field(32, ge=8, description="Equal-mass target bins for the histogram backbone")

    histogram_smoothing: float = Field(
        1e-3,
        ge=0.0,
        lt=1.0,
        description="Probability mass spread uniformly over bins before normalization",
    )

    homoscedastic: bool = Field(
        True,
        description="gaussian-linear: constant residual scale (False fits a log-linear scale)",
    )

    @field_validator("bandwidth")
    @classmethod
    def _positive_bandwidth(cls, value):
        if not isinstance(value, str) and value <= 0:
            raise ValueError("Fixed bandwidth must be positive.")
        return value

    @field_validator("neighbors")
    @classmethod
    def _positive_neighbors(cls, value):
        if value is not None and value < 1:
            raise ValueError("Neighbor count must be at least 1.")
        return value

    @property
    def minimum_samples(self) -> int:
        """Smallest training size the backbone accepts."""
        kernel_kinds = (BackboneKind.KERNEL_EMPIRICAL, BackboneKind.BINNED_HISTOGRAM)
        if self.kind in kernel_kinds and self.neighbors:
            return max(2, self.neighbors)
        return 2
