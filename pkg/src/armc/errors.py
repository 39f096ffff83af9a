"""
ARMC - Exception Hierarchy

Each error class carries the CLI exit code it maps to.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any


class ArmcError(Exception):
    """Base class for all ARMC errors."""

    exit_code: int = 1


class ConfigError(ArmcError, ValueError):
    """Invalid parameter value or configuration key."""

    exit_code = 2


class ThresholdError(ConfigError):
    """Thresholding level must be strictly positive."""


class DataFormatError(ArmcError, ValueError):
    """Malformed input file."""

    exit_code = 3

    def __init__(self, message: str, path: Path | str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(f"{where}{message}")


class DimensionMismatchError(ArmcError, ValueError):
    """Operands disagree in dimension."""

    exit_code = 3


class EmptyObservationError(ArmcError, ValueError):
    """The observation set contains no entries."""

    exit_code = 3


class RankCollapseError(ArmcError, ArithmeticError):
    """Truncation produced sigma_r <= tol * sigma_1; the iterate has degenerated."""

    exit_code = 4

    def __init__(self, message: str, partial_result: Any = None):
        super().__init__(message)
        self.partial_result = partial_result


class OutputError(ArmcError):
    """A result table could not be written."""

    exit_code = 3
