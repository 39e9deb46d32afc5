"""
Utility exports for the TabCF toolkit.
"""

from .stats_analysis import StatisticalAnalyzer
from .validators import Validators

__all__ = [
    "StatisticalAnalyzer",
    "Validators",
]
