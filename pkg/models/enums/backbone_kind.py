from enum import Enum

class BackboneKind(str, Enum):
    GAUSSIAN_LINEAR = "gaussian-linear"
    KERNEL_EMPIRICAL = "kernel-empirical"
    BINNED_HISTOGRAM = "binned-histogram"
