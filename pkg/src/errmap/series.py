"""Hourly time series and calendar windows.

Everything downstream (district synthesis, cleaning, calibration, the
validation-experiment builder) runs on fixed-step hourly series.  Timestamps
are implicit: slot i of a series holds the interval starting at
``start + i hours``.  Missing measurements are NaN so numpy propagation rules
apply everywhere; a unit tag travels with the series and never changes after
construction.  All times are naive UTC -- the synthetic district never sees a
daylight-saving transition.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from enum import Enum

import numpy as np

from .errors import InputError, RangeError

HOURS_PER_DAY = 24


class Unit(str, Enum):
    KW = "kW"
    DEGC = "degC"
    W_PER_M2 = "W_per_m2"
    M3_PER_H = "m3_per_h"


@dataclass(frozen=True)
class TimeSeries:
    """Immutable hourly series. ``values`` is float64 with NaN = missing."""

    start: datetime
    values: np.ndarray
    unit: Unit

    def __post_init__(self) -> None:
        if self.start.minute or self.start.second or self.start.microsecond:
            raise InputError("series must start at the top of an hour")
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1:
            raise InputError("series values must be one-dimensional")
        if vals.size == 0:
            raise InputError("series must contain at least one slot")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "unit", Unit(self.unit))

    def __len__(self) -> int:
        return self.values.size

    @property
    def end(self) -> datetime:
        """First instant past the series (exclusive)."""
        return self.start + timedelta(hours=len(self))

    def slot_of(self, when: datetime) -> int:
        """Index of the slot covering ``when``; RangeError outside the span."""
        delta = when - self.start
        idx, rem = divmod(int(delta.total_seconds()), 3600)
        if rem or not 0 <= idx < len(self):
            raise RangeError(f"{when.isoformat()} outside series span")
        return idx

    def n_missing(self) -> int:
        return int(np.sum(~np.isfinite(self.values)))


@dataclass(frozen=True)
class CalendarWindow:
    """A run of whole days starting at midnight."""

    start_date: date
    length_days: int

    def __post_init__(self) -> None:
        if self.length_days <= 0:
            raise InputError("window length must be positive")

    @property
    def start(self) -> datetime:
        return datetime.combine(self.start_date, time.min)

    @property
    def end_date(self) -> date:
        """First day past the window (exclusive)."""
        return self.start_date + timedelta(days=self.length_days)

    @property
    def last_date(self) -> date:
        return self.start_date + timedelta(days=self.length_days - 1)

    @property
    def n_slots(self) -> int:
        return self.length_days * HOURS_PER_DAY

    def dates(self) -> list[date]:
        return [self.start_date + timedelta(days=i) for i in range(self.length_days)]

    def __contains__(self, day: date) -> bool:
        return self.start_date <= day < self.end_date


@dataclass(frozen=True)
class HeatingSeason:
    """Inclusive date span during which space heating is assumed active."""

    label: str
    first_date: date
    last_date: date

    def __post_init__(self) -> None:
        if self.first_date > self.last_date:
            raise InputError("season must start no later than it ends")

    @property
    def n_days(self) -> int:
        return (self.last_date - self.first_date).days + 1

    def covers(self, window: CalendarWindow) -> bool:
        return self.first_date <= window.start_date and window.last_date <= self.last_date

    def contains_date(self, day: date) -> bool:
        return self.first_date <= day <= self.last_date


def season_of(window: CalendarWindow, seasons: list[HeatingSeason]) -> HeatingSeason | None:
    """The season fully containing ``window``, or None."""
    for season in seasons:
        if season.covers(window):
            return season
    return None


def slice_window(series: TimeSeries, window: CalendarWindow) -> TimeSeries:
    """Extract the sub-series covering ``window``.

    The window must lie fully inside the series span.
    """
    offset_s = (window.start - series.start).total_seconds()
    offset, rem = divmod(int(offset_s), 3600)
    if rem:
        raise InputError("window start is not slot-aligned with the series")
    stop = offset + window.n_slots
    if offset < 0 or stop > len(series):
        raise RangeError(
            f"window {window.start_date.isoformat()}+{window.length_days}d "
            "outside series span"
        )
    return TimeSeries(window.start, series.values[offset:stop].copy(), series.unit)


def missing_days(series: TimeSeries) -> float:
    """Missing slots expressed in fractional days."""
    return series.n_missing() / HOURS_PER_DAY


def _day_aligned(series: TimeSeries) -> np.ndarray:
    if series.start.hour != 0:
        raise InputError("series must start at midnight for daily reduction")
    if len(series) % HOURS_PER_DAY:
        raise InputError("series length must be a whole number of days")
    return series.values.reshape(-1, HOURS_PER_DAY)


def daily_mean(series: TimeSeries) -> np.ndarray:
    """Per-day mean over present slots; a fully missing day yields NaN."""
    days = _day_aligned(series)
    present = np.isfinite(days)
    count = present.sum(axis=1)
    total = np.where(present, days, 0.0).sum(axis=1)
    out = np.full(days.shape[0], np.nan)
    has = count > 0
    out[has] = total[has] / count[has]
    return out


def day_dates(series: TimeSeries) -> list[date]:
    """Calendar dates of each whole day in a day-aligned series."""
    _day_aligned(series)
    first = series.start.date()
    return [first + timedelta(days=i) for i in range(len(series) // HOURS_PER_DAY)]


def hour_of_day(series: TimeSeries) -> np.ndarray:
    """Hour-of-day (0..23) for every slot."""
    return (series.start.hour + np.arange(len(series))) % HOURS_PER_DAY
