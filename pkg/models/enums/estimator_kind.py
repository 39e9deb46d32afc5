from enum import Enum

class EstimatorKind(str, Enum):
    TABCF = "tabcf"
    NAIVE = "naive"
    LINEAR_CF = "linear-cf"
    TABCF_INDEPENDENCE = "tabcf-independence"
