"""
Service layer: dataset I/O, synthetic designs with their oracles, telemetry.
"""

from .dataset_service import load_csv, save_csv, split_train_eval
from .monitor_service import MonitorService, configure_telemetry
from .simulation_service import gen_observational, oracle_curve, sample_interventional

__all__ = [
    "MonitorService",
    "configure_telemetry",
    "gen_observational",
    "load_csv",
    "oracle_curve",
    "sample_interventional",
    "save_csv",
    "split_train_eval",
]
