"""
Input validation utilities.
"""

import os
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Type

from core.exceptions import ConfigurationError


class Validators:
    """Checks for run configuration values; each returns (ok, message)."""

    # ---------------------------------------------------------
    # ENUMERATED NAMES
    # ---------------------------------------------------------
    @staticmethod
    def validate_choice(value: str, enum_type: Type[Enum], field: str) -> Tuple[bool, Optional[str]]:
        """Unknown names are reported together with the valid enumeration."""
        valid = [member.value for member in enum_type]
        if value in valid:
            return True, None
        return False, f"Unknown {field} '{value}'. Valid values: {', '.join(valid)}."

    # ---------------------------------------------------------
    # QUANTILE LEVELS
    # ---------------------------------------------------------
    @staticmethod
    def validate_taus(taus: Sequence[float]) -> Tuple[bool, Optional[str]]:
        if not taus:
            return False, "At least one quantile level is required."

        outside = [t for t in taus if not 0.0 < t < 1.0]
        if outside:
            return False, f"Quantile levels must lie in (0, 1); got {outside}."

        if len(set(taus)) != len(taus):
            return False, "Quantile levels must be distinct."

        return True, None

    # ---------------------------------------------------------
    # GRIDS
    # ---------------------------------------------------------
    @staticmethod
    def validate_trim_quantiles(lower: float, upper: float) -> Tuple[bool, Optional[str]]:
        if not 0.0 <= lower < upper <= 1.0:
            return False, f"Grid trimming needs 0 <= lower < upper <= 1 (got {lower}, {upper})."
        return True, None

    # ---------------------------------------------------------
    # COLUMN ROLES
    # ---------------------------------------------------------
    @staticmethod
    def validate_columns(required: Iterable[str], available: Iterable[str]) -> Tuple[bool, Optional[str]]:
        missing: List[str] = [c for c in required if c not in set(available)]
        if missing:
            return False, f"Missing column(s): {', '.join(missing)}."
        return True, None

    # ---------------------------------------------------------
    # OUTPUT DIRECTORY
    # ---------------------------------------------------------
    @staticmethod
    def validate_output_dir(path: str) -> Tuple[bool, Optional[str]]:
        """The directory itself or its nearest existing ancestor must be writable."""
        target = Path(path).resolve()
        ancestor = target
        while not ancestor.exists():
            if ancestor.parent == ancestor:
                return False, f"No existing ancestor for output directory '{path}'."
            ancestor = ancestor.parent

        if not ancestor.is_dir():
            return False, f"'{ancestor}' exists and is not a directory."

        if not os.access(ancestor, os.W_OK | os.X_OK):
            return False, f"Output directory '{path}' is not writable."

        return True, None

    # ---------------------------------------------------------
    # ENFORCEMENT
    # ---------------------------------------------------------
    @staticmethod
    def require(result: Tuple[bool, Optional[str]], error: Type[Exception] = ConfigurationError) -> None:
        """Raise `error` with the validation message when a check failed."""
        ok, message = result
        if not ok:
            raise error(message)
