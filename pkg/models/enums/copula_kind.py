from enum import Enum

class CopulaKind(str, Enum):
    GAUSSIAN = "gaussian"
    INDEPENDENCE = "independence"


class CopulaScoreMode(str, Enum):
    """How pseudo-uniform scores for the working copula are built."""
    INTERVENTIONAL = "interventional"
    CONDITIONAL = "conditional"
