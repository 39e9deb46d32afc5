"""
One workflow per CLI command:
- simulate: observational datasets for each setting and replication
- fit: interventional curves and joint laws on one sample
- benchmark: replicated sweeps scored against Monte-Carlo oracles
- diagnose: control-variable checks after Stage U1
"""

from .benchmark import BenchmarkWorkflow
from .diagnose import DiagnoseWorkflow
from .fit_curve import FitCurveWorkflow
from .simulate import SimulateWorkflow

__all__ = [
    "BenchmarkWorkflow",
    "DiagnoseWorkflow",
    "FitCurveWorkflow",
    "SimulateWorkflow",
]
