"""Exception hierarchy.

Every error raised on a contract violation derives from ErrmapError so
callers (and the CLI) can catch one type and report a structured message.
"""

from __future__ import annotations


class ErrmapError(Exception):
    """Base class for all package errors."""

    code = "error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class InputError(ErrmapError):
    """Malformed or inconsistent input values."""

    code = "input"


class RangeError(ErrmapError):
    """An index, window, or value fell outside the valid range."""

    code = "range"


class MissingDataError(ErrmapError):
    """Too many missing observations for the requested operation."""

    code = "missing_data"


class CalibrationInfeasibleError(ErrmapError):
    """No parameter assignment can reproduce the billing constraint."""

    code = "calibration_infeasible"


class FitError(ErrmapError):
    """Numerical failure while fitting a model."""

    code = "fit"


class ConfigError(ErrmapError):
    """Invalid configuration file or override."""

    code = "config"


class DependencyError(ErrmapError):
    """A pipeline stage was requested before its inputs exist."""

    code = "dependency"
