from enum import Enum

class FunctionalKind(str, Enum):
    MEAN = "mean"
    QUANTILE = "quantile"
    GINI = "gini"
    JOINT = "joint"
