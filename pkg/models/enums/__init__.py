from .backbone_kind import BackboneKind
from .copula_kind import CopulaKind, CopulaScoreMode
from .estimator_kind import EstimatorKind
from .functional_kind import FunctionalKind
from .integration_mode import ControlScale, VIntegration
from .scm_models import InstrumentLaw, OutcomeModel, TreatmentModel

__all__ = [
    "BackboneKind",
    "ControlScale",
    "CopulaKind",
    "CopulaScoreMode",
    "EstimatorKind",
    "FunctionalKind",
    "InstrumentLaw",
    "OutcomeModel",
    "TreatmentModel",
    "VIntegration",
]
