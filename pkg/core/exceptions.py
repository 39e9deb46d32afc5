"""
Exception hierarchy for the TabCF toolkit.
"""

from typing import Optional


class TabCFError(Exception):
    """Base class for every error raised by the toolkit."""
    pass


class ConfigurationError(TabCFError):
    """Invalid or unknown configuration (settings, backbone, run config)."""
    pass


class DataError(TabCFError):
    """Problems with an observational sample or its on-disk form."""
    pass


class RoleError(DataError):
    """A column role names a column that is missing or roles overlap."""

    def __init__(self, message: str, column: Optional[str] = None):
        super().__init__(message)
        self.column = column


class ParseError(DataError):
    """A CSV cell could not be parsed as a finite real."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyDataError(DataError):
    """The input file or partition holds no rows."""
    pass


class ShapeError(TabCFError):
    """Array dimensions do not match what a model or metric expects."""
    pass


class DomainError(TabCFError):
    """An argument lies outside the mathematical domain of an operation."""
    pass


class InsufficientDataError(TabCFError):
    """Fewer observations than a backbone or procedure requires."""
    pass


class DegenerateTargetError(TabCFError):
    """Constant regression target for a backbone that cannot represent it."""
    pass


class DegenerateInputError(TabCFError):
    """Constant input vector where variation is required (dcor, copula scores)."""
    pass


class GridError(TabCFError):
    """Empty or non-increasing evaluation grid."""
    pass


class FoldError(TabCFError):
    """Invalid cross-fitting fold specification."""
    pass


class SingularityError(TabCFError):
    """Rank-deficient least-squares design."""
    pass


class InsufficientStratificationError(TabCFError):
    """No stratum retained enough points for the conditional-independence check."""
    pass


class StageError(TabCFError):
    """Failure attributed to one pipeline stage (U1, U2, U3, M2, ...)."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class OutputError(TabCFError):
    """The run directory cannot be created or written."""
    pass
