from .backbone_config import BackboneConfig
from .copula_model import CopulaModel, JointInterventional
from .dataset import ColumnRoles, Dataset
from .interventional import CfFit, ControlValues, EvaluationGrid, InterventionalCdf
from .reports import DiagnosticReport, ScoreReport, StratumResult
from .run_config import DiagnosticSettings, GridSettings, OracleSettings, RunConfig
from .scm_setting import OracleCurve, ScmSetting

# Enums
from .enums.backbone_kind import BackboneKind
from .enums.copula_kind import CopulaKind, CopulaScoreMode
from .enums.estimator_kind import EstimatorKind
from .enums.functional_kind import FunctionalKind
from .enums.integration_mode import ControlScale, VIntegration
from .enums.scm_models import InstrumentLaw, OutcomeModel, TreatmentModel

__all__ = [
    "BackboneConfig",
    "BackboneKind",
    "CfFit",
    "ColumnRoles",
    "ControlScale",
    "ControlValues",
    "CopulaKind",
    "CopulaModel",
    "CopulaScoreMode",
    "Dataset",
    "DiagnosticReport",
    "DiagnosticSettings",
    "EstimatorKind",
    "EvaluationGrid",
    "FunctionalKind",
    "GridSettings",
    "InstrumentLaw",
    "InterventionalCdf",
    "JointInterventional",
    "OracleCurve",
    "OracleSettings",
    "OutcomeModel",
    "RunConfig",
    "ScmSetting",
    "ScoreReport",
    "StratumResult",
    "TreatmentModel",
    "VIntegration",
]
