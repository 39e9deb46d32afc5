from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.exceptions import DataError, RoleError


class ColumnRoles(BaseModel):
    """
    Maps CSV column names onto the roles of an IV sample.
    Supplied through configuration; never inferred from column names.
    """

    instrument: str
    treatment: str
    outcomes: List[str] = Field(..., description="One or more outcome columns")
    covariates: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _roles_disjoint(self) -> "ColumnRoles":
        if not self.outcomes:
            raise RoleError("At least one outcome column is required.")

        seen = {}
        for role, names in (
            ("instrument", [self.instrument]),
            ("treatment", [self.treatment]),
            ("outcomes", self.outcomes),
            ("covariates", self.covariates),
        ):
            for name in names:
                if name in seen:
                    raise RoleError(
                        f"Column '{name}' is assigned to both {seen[name]} and {role}.",
                        column=name,
                    )
                seen[name] = role
        return self

    @property
    def columns(self) -> List[str]:
        """Column order used when writing a dataset back to disk."""
        return [*self.covariates, self.instrument, self.treatment, *self.outcomes]

    @classmethod
    def default(cls, p: int, k: int) -> "ColumnRoles":
        outcomes = ["y"] if k == 1 else [f"y{i + 1}" for i in range(k)]
        return cls(
            instrument="z",
            treatment="x",
            outcomes=outcomes,
            covariates=[f"w{i + 1}" for i in range(p)],
        )


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


class Dataset(BaseModel):
    """
    Observed i.i.d. sample of (W, Z, X, Y).

    w is n×p (p may be 0), z and x are length-n vectors, y is n×K with K >= 1.
    Arrays are stored read-only; the object is immutable after construction.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    w: np.ndarray
    z: np.ndarray
    x: np.ndarray
    y: np.ndarray
    roles: Optional[ColumnRoles] = None

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, data):
        if not isinstance(data, dict):
            return data

        z = np.asarray(data.get("z"), dtype=float).reshape(-1)
        x = np.asarray(data.get("x"), dtype=float).reshape(-1)

        y = np.asarray(data.get("y"), dtype=float)
        if y.ndim == 1:
            y = y.reshape(-1, 1)

        w = data.get("w")
        if w is None:
            w = np.empty((z.shape[0], 0))
        w = np.asarray(w, dtype=float)
        if w.ndim == 1:
            w = w.reshape(-1, 1)

        return {
            **data,
            "w": _frozen(np.array(w, copy=True)),
            "z": _frozen(np.array(z, copy=True)),
            "x": _frozen(np.array(x, copy=True)),
            "y": _frozen(np.array(y, copy=True)),
        }

    @model_validator(mode="after")
    def _check_invariants(self) -> "Dataset":
        n = self.z.shape[0]
        if n < 1:
            raise DataError("Dataset must contain at least one row.")

        lengths = {
            "w": self.w.shape[0],
            "z": n,
            "x": self.x.shape[0],
            "y": self.y.shape[0],
        }
        if len(set(lengths.values())) != 1:
            raise DataError(f"Columns have unequal lengths: {lengths}")

        if self.y.ndim != 2 or self.y.shape[1] < 1:
            raise DataError("Outcome matrix must have at least one column.")

        for name in ("w", "z", "x", "y"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DataError(f"Column block '{name}' contains NaN or infinite values.")

        if self.roles is not None:
            if len(self.roles.outcomes) != self.y.shape[1]:
                raise RoleError("Number of outcome roles does not match outcome columns.")
            if len(self.roles.covariates) != self.w.shape[1]:
                raise RoleError("Number of covariate roles does not match covariate columns.")
        return self

    @property
    def n(self) -> int:
        return int(self.z.shape[0])

    @property
    def p(self) -> int:
        return int(self.w.shape[1])

    @property
    def k(self) -> int:
        return int(self.y.shape[1])

    @property
    def column_roles(self) -> ColumnRoles:
        return self.roles or ColumnRoles.default(self.p, self.k)

    @property
    def first_stage_features(self) -> np.ndarray:
        """Features (Z, W...) of the treatment regression."""
        return np.column_stack([self.z, self.w])

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(
            w=self.w[idx],
            z=self.z[idx],
            x=self.x[idx],
            y=self.y[idx],
            roles=self.roles,
        )

    def with_outcomes(self, y: np.ndarray) -> "Dataset":
        """Copy with the outcome block replaced (used by violation-injection checks)."""
        return Dataset(w=self.w, z=self.z, x=self.x, y=y, roles=self.roles)
