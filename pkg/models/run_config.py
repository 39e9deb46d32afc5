from __future__ import annotations

from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from core.exceptions import ConfigurationError, RoleError
from models.backbone_config import BackboneConfig
from models.dataset import ColumnRoles
from models.enums import (
    ControlScale,
    CopulaScoreMode,
    EstimatorKind,
    FunctionalKind,
    VIntegration,
)
from models.scm_setting import ScmSetting


class GridSettings(BaseModel):
    n_x: int = Field(200, ge=1, description="Intervention levels on the trimmed grid")
    n_y: int = Field(512, ge=2, description="Outcome grid points")
    joint_x: int = Field(13, ge=1, description="Intervention levels for joint laws")
    joint_range: Tuple[float, float] = (0.0, 3.0)
    lower_quantile: float = Field(0.05, ge=0.0, lt=1.0)
    upper_quantile: float = Field(0.95, gt=0.0, le=1.0)


class DiagnosticSettings(BaseModel):
    permutations: int = Field(199, ge=99)
    bins: int = Field(4, ge=1)
    min_stratum: int = Field(20, ge=5)
    conditional: bool = False
    max_points: Optional[int] = Field(2000, ge=10, description="Subsample size for the V-Z distance correlation")


class OracleSettings(BaseModel):
    mc_draws: int = Field(5000, ge=100)
    joint_samples: int = Field(5000, ge=100)
    sw_projections: int = Field(128, ge=1)


class RunConfig(BaseModel):
    """Everything one CLI invocation needs; defaults mirror config/base_config.yaml."""

    # Data source: a synthetic setting or a CSV file with column roles
    setting: Optional[ScmSetting] = None
    sweep: List[ScmSetting] = Field(default_factory=list, description="Extra settings for benchmark sweeps")
    csv_path: Optional[str] = None
    roles: Optional[ColumnRoles] = None
    n: int = Field(4000, ge=1)
    n_eval: Optional[int] = Field(None, ge=2)
    eval_fraction: float = Field(0.2, gt=0.0, lt=1.0)

    # Estimation
    backbone: BackboneConfig = Field(default_factory=BackboneConfig)
    first_stage_backbone: Optional[BackboneConfig] = None
    estimators: List[EstimatorKind] = Field(default_factory=lambda: [EstimatorKind.TABCF])
    functionals: List[FunctionalKind] = Field(default_factory=lambda: [FunctionalKind.MEAN])
    taus: List[float] = Field(default_factory=lambda: [round(0.1 * i, 1) for i in range(1, 10)])
    v_integration: VIntegration = VIntegration.EMPIRICAL
    quadrature_nodes: int = Field(64, ge=1)
    control_scale: ControlScale = ControlScale.NORMAL
    cross_fit_folds: int = Field(0, ge=0, description="0 = full-sample controls")
    copula_score_mode: CopulaScoreMode = CopulaScoreMode.INTERVENTIONAL

    grid: GridSettings = Field(default_factory=GridSettings)
    diagnostics: DiagnosticSettings = Field(default_factory=DiagnosticSettings)
    oracle: OracleSettings = Field(default_factory=OracleSettings)

    # Execution
    replications: int = Field(1, ge=1)
    seed: int = 0
    workers: Optional[int] = Field(None, ge=1)
    output_dir: str = "runs"
    save_models: bool = False
    load_models: Optional[str] = Field(None, description="Run folder (or its models/ directory) to reuse instead of fitting")

    @field_validator("taus")
    @classmethod
    def _taus_in_unit_interval(cls, taus: List[float]) -> List[float]:
        if any(not 0.0 < t < 1.0 for t in taus):
            raise ValueError("Every tau must lie strictly inside (0, 1).")
        return sorted(taus)

    @field_validator("cross_fit_folds")
    @classmethod
    def _folds(cls, k: int) -> int:
        if k == 1:
            raise ValueError("cross_fit_folds must be 0 (full sample) or at least 2.")
        return k

    @model_validator(mode="after")
    def _has_source(self) -> "RunConfig":
        if self.setting is None and self.csv_path is None:
            raise ValueError("Either a synthetic setting or a csv_path is required.")
        if self.csv_path is not None and self.roles is None:
            raise RoleError("A csv_path requires column roles (instrument, treatment, outcomes).")
        return self

    @property
    def stage_one_backbone(self) -> BackboneConfig:
        return self.first_stage_backbone or self.backbone

    def benchmark_settings(self) -> List[ScmSetting]:
        settings = ([self.setting] if self.setting is not None else []) + list(self.sweep)
        if not settings:
            raise ConfigurationError("Benchmarks need at least one synthetic setting.")
        return settings

    def seeds(self) -> List[int]:
        """One root seed per replication."""
        return [self.seed + r for r in range(self.replications)]
