from __future__ import annotations

from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.exceptions import DomainError

ADVISORY_CAVEAT = (
    "Diagnostics are advisory: passing these checks does not imply that the "
    "instrumental-variable and control-function conditions hold."
)


class ScoreReport(BaseModel):
    """Per-grid-point errors and their arithmetic mean."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    metric: str
    errors: np.ndarray
    aggregate: float
    tau: Optional[float] = None
    seeds: List[int] = Field(default_factory=list)
    replications: int = 1

    @model_validator(mode="after")
    def _aggregate_is_mean(self) -> "ScoreReport":
        if self.errors.size and not np.isclose(self.aggregate, float(np.mean(self.errors)), rtol=1e-12, atol=0.0):
            raise DomainError("Aggregate must equal the mean of per-point errors.")
        return self


class StratumResult(BaseModel):
    label: str
    size: int
    dcor: Optional[float] = None
    p_value: Optional[float] = None
    skipped: bool = False


class DiagnosticReport(BaseModel):
    """Goodness-of-fit checks for the plug-in control variable."""

    ks_statistic: Optional[float] = Field(None, ge=0.0, le=1.0)
    ks_threshold: Optional[float] = None
    dcor: Optional[float] = Field(None, ge=0.0, le=1.0 + 1e-9)
    dcor_p_value: Optional[float] = Field(None, ge=0.0, le=1.0)
    relevance_hint: Optional[float] = None

    strata: List[StratumResult] = Field(default_factory=list)
    rejection_fraction: Optional[float] = None

    verdicts: Dict[str, str] = Field(default_factory=dict)
    approximate: bool = False
    caveat: str = ADVISORY_CAVEAT

    def summary(self) -> str:
        lines = ["Control-function diagnostics"]
        if self.ks_statistic is not None:
            lines.append(
                f"  PIT uniformity: KS={self.ks_statistic:.4f} "
                f"(threshold {self.ks_threshold:.4f}) -> {self.verdicts.get('pit_uniformity', '?')}"
            )
        if self.dcor is not None:
            lines.append(
                f"  V ⫫ Z: dcor={self.dcor:.4f}, p={self.dcor_p_value:.4f} "
                f"-> {self.verdicts.get('instrument_independence', '?')}"
            )
        if self.relevance_hint is not None:
            lines.append(f"  Relevance hint: spearman(V, X)={self.relevance_hint:.4f}")
        if self.rejection_fraction is not None:
            retained = sum(1 for s in self.strata if not s.skipped)
            lines.append(
                f"  Y ⫫ Z | X, V: {retained} strata retained, rejection fraction "
                f"{self.rejection_fraction:.3f} -> {self.verdicts.get('conditional_independence', '?')}"
                + (" (approximate)" if self.approximate else "")
            )
        lines.append(f"  Note: {self.caveat}")
        return "\n".join(lines)
