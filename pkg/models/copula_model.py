from __future__ import annotations

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from core.exceptions import DomainError
from models.enums import CopulaKind
from models.interventional import InterventionalCdf


class CopulaModel(BaseModel):
    """x-invariant working copula: Gaussian with a correlation matrix, or independence."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: CopulaKind = CopulaKind.GAUSSIAN
    dimension: int
    correlation: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def _valid_parameters(self) -> "CopulaModel":
        if self.kind == CopulaKind.INDEPENDENCE:
            if self.correlation is not None:
                raise DomainError("Independence copula carries no parameters.")
            return self

        r = self.correlation
        if r is None or r.shape != (self.dimension, self.dimension):
            raise DomainError("Gaussian copula needs a K×K correlation matrix.")
        if not np.allclose(r, r.T, atol=1e-12):
            raise DomainError("Correlation matrix must be symmetric.")
        if not np.allclose(np.diag(r), 1.0, atol=1e-12):
            raise DomainError("Correlation matrix must have a unit diagonal.")
        if np.any(np.abs(r) > 1.0 + 1e-12):
            raise DomainError("Correlations must lie in [-1, 1].")
        if np.linalg.eigvalsh(r).min() < -1e-10:
            raise DomainError("Correlation matrix must be positive semidefinite.")
        return self

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "dimension": self.dimension,
            "correlation": None if self.correlation is None else self.correlation.tolist(),
        }


class JointInterventional(BaseModel):
    """Marginal interventional CDF slices at one x level merged by a copula."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x: float
    marginals: List[InterventionalCdf]
    copula: CopulaModel

    @model_validator(mode="after")
    def _shared_level(self) -> "JointInterventional":
        if len(self.marginals) < 2:
            raise DomainError("A joint law needs at least two outcome marginals.")
        if len(self.marginals) != self.copula.dimension:
            raise DomainError("Copula dimension does not match the number of marginals.")
        for marginal in self.marginals:
            if marginal.x_grid.size != 1 or not np.isclose(marginal.x_grid[0], self.x):
                raise DomainError("All marginals must be single slices at the joint x level.")
        return self

    @property
    def k(self) -> int:
        return len(self.marginals)
