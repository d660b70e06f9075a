"""errmap: learn where a district heating energy model goes wrong.

The package simulates a measured district, calibrates a fast building
model against short windows, scores how each calibration transfers to
other windows, and fits a Gaussian process that maps descriptive features
of (calibration window, validation window) pairs to the expected transfer
error with honest uncertainty.
"""

__version__ = "0.1.0"

from .errors import (
    CalibrationInfeasibleError,
    ConfigError,
    DependencyError,
    ErrmapError,
    FitError,
    InputError,
    MissingDataError,
    RangeError,
)
from .series import CalendarWindow, HeatingSeason, TimeSeries, Unit

__all__ = [
    "__version__",
    "CalendarWindow",
    "CalibrationInfeasibleError",
    "ConfigError",
    "DependencyError",
    "ErrmapError",
    "FitError",
    "HeatingSeason",
    "InputError",
    "MissingDataError",
    "RangeError",
    "TimeSeries",
    "Unit",
]
