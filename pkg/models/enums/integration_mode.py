from enum import Enum

class VIntegration(str, Enum):
    """How the control variable is integrated out in Stage U3."""
    EMPIRICAL = "empirical"
    QUADRATURE = "quadrature"


class ControlScale(str, Enum):
    """Scale on which the control variable enters the second stage."""
    UNIFORM = "uniform"
    NORMAL = "normal"
