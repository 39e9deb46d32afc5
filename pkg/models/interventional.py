from __future__ import annotations

from typing import Any, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import ndtri

from core.exceptions import DomainError, GridError
from models.dataset import Dataset
from models.enums import ControlScale


def _as_vector(values) -> np.ndarray:
    return np.asarray(values, dtype=float).reshape(-1)


class ControlValues(BaseModel):
    """Plug-in control variable V̂_i = F̂_{X|Z,W}(X_i | Z_i, W_i)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    v: np.ndarray
    source: str = "full-sample"
    folds: Optional[int] = None

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, data):
        if isinstance(data, dict) and "v" in data:
            data = {**data, "v": _as_vector(data["v"])}
        return data

    @model_validator(mode="after")
    def _in_unit_interval(self) -> "ControlValues":
        if self.v.size == 0:
            raise DomainError("Control values cannot be empty.")
        if not np.all(np.isfinite(self.v)) or self.v.min() < 0.0 or self.v.max() > 1.0:
            raise DomainError("Control values must lie in [0, 1].")
        if self.source not in ("full-sample", "cross-fitted", "oracle"):
            raise DomainError(f"Unknown control source '{self.source}'.")
        return self

    @property
    def n(self) -> int:
        return int(self.v.shape[0])

    @property
    def label(self) -> str:
        return f"cross-fitted({self.folds})" if self.source == "cross-fitted" else self.source


class EvaluationGrid(BaseModel):
    """
    Intervention levels and (optionally) a shared outcome grid.

    When y_grid is None, each outcome gets its own grid spanning the training
    support plus a 10% margin on each side with n_y points.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x_grid: np.ndarray
    y_grid: Optional[np.ndarray] = None
    n_y: int = Field(512, ge=2)
    lower_quantile: float = 0.05
    upper_quantile: float = 0.95

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            data["x_grid"] = _as_vector(data.get("x_grid", []))
            if data.get("y_grid") is not None:
                data["y_grid"] = _as_vector(data["y_grid"])
        return data

    @model_validator(mode="after")
    def _strictly_increasing(self) -> "EvaluationGrid":
        if self.x_grid.size == 0:
            raise GridError("Evaluation grid has no intervention levels.")
        if np.any(np.diff(self.x_grid) <= 0):
            raise GridError("x_grid must be strictly increasing.")
        if self.y_grid is not None and (self.y_grid.size < 2 or np.any(np.diff(self.y_grid) <= 0)):
            raise GridError("y_grid must be strictly increasing with at least two points.")
        return self

    @classmethod
    def from_reference(
        cls,
        reference_x: np.ndarray,
        n_x: int = 200,
        n_y: int = 512,
        lower: float = 0.05,
        upper: float = 0.95,
    ) -> "EvaluationGrid":
        """Equally spaced levels between empirical quantiles of a held-out treatment sample."""
        reference_x = _as_vector(reference_x)
        lo, hi = np.quantile(reference_x, [lower, upper])
        if not hi > lo:
            raise GridError("Reference treatment sample is degenerate; cannot build a grid.")
        return cls(
            x_grid=np.linspace(lo, hi, n_x),
            n_y=n_y,
            lower_quantile=lower,
            upper_quantile=upper,
        )

    @classmethod
    def equally_spaced(cls, lo: float, hi: float, n_x: int, n_y: int = 512) -> "EvaluationGrid":
        return cls(x_grid=np.linspace(lo, hi, n_x), n_y=n_y, lower_quantile=0.0, upper_quantile=1.0)

    @staticmethod
    def outcome_grid(sample: np.ndarray, n_y: int = 512, margin: float = 0.1) -> np.ndarray:
        """[min − margin·range, max + margin·range]; a unit range stands in for constant samples."""
        sample = _as_vector(sample)
        lo, hi = float(sample.min()), float(sample.max())
        span = hi - lo
        if span <= 0:
            span = max(abs(lo), 1.0)
        return np.linspace(lo - margin * span, hi + margin * span, n_y)

    def y_grid_for(self, sample: np.ndarray) -> np.ndarray:
        if self.y_grid is not None:
            return self.y_grid
        return self.outcome_grid(sample, self.n_y)


class InterventionalCdf(BaseModel):
    """
    Interventional CDF rows F(y_m | do(X = x_g)) on a (x, y) grid.

    conditioning_w is None for the marginal law and holds the pinned covariate
    vector for conditional-on-w curves.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x_grid: np.ndarray
    y_grid: np.ndarray
    cdf: np.ndarray
    conditioning_w: Optional[np.ndarray] = None
    outcome_index: int = 0

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            data["x_grid"] = _as_vector(data["x_grid"])
            data["y_grid"] = _as_vector(data["y_grid"])
            data["cdf"] = np.atleast_2d(np.asarray(data["cdf"], dtype=float))
            if data.get("conditioning_w") is not None:
                data["conditioning_w"] = _as_vector(data["conditioning_w"])
        return data

    @model_validator(mode="after")
    def _valid_rows(self) -> "InterventionalCdf":
        expected = (self.x_grid.size, self.y_grid.size)
        if self.cdf.shape != expected:
            raise GridError(f"CDF matrix has shape {self.cdf.shape}, expected {expected}.")
        if self.cdf.size and (self.cdf.min() < 0.0 or self.cdf.max() > 1.0):
            raise DomainError("Interventional CDF values must lie in [0, 1].")
        if np.any(np.diff(self.cdf, axis=1) < 0):
            raise DomainError("Interventional CDF rows must be nondecreasing.")
        return self

    @property
    def is_marginal(self) -> bool:
        return self.conditioning_w is None

    def row(self, g: int) -> np.ndarray:
        return self.cdf[g]

    def slice(self, g: int) -> "InterventionalCdf":
        """Single-level view used for joint laws."""
        return InterventionalCdf(
            x_grid=self.x_grid[g : g + 1],
            y_grid=self.y_grid,
            cdf=self.cdf[g : g + 1],
            conditioning_w=self.conditioning_w,
            outcome_index=self.outcome_index,
        )


class CfFit(BaseModel):
    """
    Fitted two-stage control-function model.

    second_stages[k] models Y_k given features ordered (X, control, W...).
    The training sample is retained for the W-average of the plug-in estimator.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    first_stage: Any
    second_stages: List[Any]
    controls: ControlValues
    train: Dataset
    control_scale: ControlScale = ControlScale.NORMAL

    @model_validator(mode="after")
    def _consistent(self) -> "CfFit":
        if self.controls.n != self.train.n:
            raise DomainError("Control values length does not match the training sample.")
        if len(self.second_stages) != self.train.k:
            raise DomainError("One second-stage model is required per outcome.")
        for model in self.second_stages:
            if model.feature_dim != 2 + self.train.p:
                raise DomainError("Second-stage feature dimension must be 2 + p.")
        return self

    @property
    def n(self) -> int:
        return self.train.n

    @property
    def scale_n(self) -> int:
        """Sample size the second stage was fitted on; fixes the normal-score clipping."""
        return int(getattr(self.second_stages[0], "n_train", 0) or self.n)

    def control_feature(self, v: np.ndarray) -> np.ndarray:
        """Map control values in [0,1] onto the scale used by the second stage."""
        return transform_controls(v, self.control_scale, self.scale_n)

    def second_stage_features(self) -> np.ndarray:
        return np.column_stack([self.train.x, self.control_feature(self.controls.v), self.train.w])


def transform_controls(v: np.ndarray, scale: ControlScale, n: int) -> np.ndarray:
    """Identity, or normal scores with clipping to [1/(n+1), n/(n+1)]."""
    v = np.asarray(v, dtype=float)
    if scale == ControlScale.UNIFORM:
        return v
    eps = 1.0 / (n + 1.0)
    return ndtri(np.clip(v, eps, 1.0 - eps))
