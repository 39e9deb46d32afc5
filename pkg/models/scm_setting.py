from __future__ import annotations

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.exceptions import ConfigurationError
from models.enums import FunctionalKind, InstrumentLaw, OutcomeModel, TreatmentModel

WEAK_IV_KAPPAS = (0.05, 0.15, 0.25)


class ScmSetting(BaseModel):
    """
    One synthetic design: treatment equation, outcome equation, instrument law
    and the optional covariate augmentation (W ~ N(0,1) adding +0.5W to both
    equations).
    """

    model_config = ConfigDict(frozen=True)

    treatment: TreatmentModel = TreatmentModel.T1
    outcome: OutcomeModel = OutcomeModel.O2
    instrument_law: InstrumentLaw = InstrumentLaw.NORMAL
    kappa: Optional[float] = Field(None, description="Instrument strength for weak-IV treatments")
    rho_eps: float = Field(0.0, ge=-1.0, le=1.0, description="Outcome-noise correlation (bivariate)")
    covariate_augmented: bool = False

    @model_validator(mode="after")
    def _compatible(self) -> "ScmSetting":
        weak = self.treatment in (TreatmentModel.WEAK_T1, TreatmentModel.WEAK_T2)
        if weak and (self.kappa is None or self.kappa < 0):
            raise ConfigurationError("Weak-IV treatments require a nonnegative kappa.")
        if not weak and self.kappa is not None:
            raise ConfigurationError("kappa only applies to weak-T1 / weak-T2 treatments.")
        if self.outcome.is_bivariate and self.treatment not in (
            TreatmentModel.T1,
            TreatmentModel.LINEAR_SANITY,
        ):
            raise ConfigurationError("Bivariate outcomes require the T1 treatment model.")
        return self

    @property
    def k(self) -> int:
        return 2 if self.outcome.is_bivariate else 1

    @property
    def name(self) -> str:
        parts = [self.treatment.value]
        if self.kappa is not None:
            parts[0] += f"(kappa={self.kappa:g})"
        parts.append(self.outcome.value)
        label = "x".join(parts)
        if self.outcome.is_bivariate:
            label += f"(rho={self.rho_eps:g})"
        if self.instrument_law == InstrumentLaw.UNIFORM:
            label += "+uniformZ"
        if self.covariate_augmented:
            label += "+W"
        return label


class OracleCurve(BaseModel):
    """Monte-Carlo ground truth built from interventional draws only."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    setting: str
    functional: FunctionalKind
    x_grid: np.ndarray
    values: Optional[np.ndarray] = None
    taus: List[float] = Field(default_factory=list)
    draws: Optional[np.ndarray] = None
    mc_draws: int
    seed: int

    def quantile_curve(self, tau: float) -> np.ndarray:
        if self.functional != FunctionalKind.QUANTILE:
            raise ConfigurationError("Oracle curve does not hold quantiles.")
        idx = int(np.argmin(np.abs(np.asarray(self.taus) - tau)))
        return self.values[:, idx]
