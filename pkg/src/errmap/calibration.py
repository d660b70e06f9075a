"""Brute-force calibration of the load surrogate against metered data.

Two stages, run per (substation, calibration window):

1. hot-water sizing: the candidate's daily DHW energy is set so that mean
   simulated monthly energy matches the mean billed energy over non-heating
   months (bills derived from the metered series);
2. window fit: every candidate simulates the calibration window and the one
   with the lowest CV(RMSE) against the metered load wins.

Candidates are drawn uniformly inside parameter ranges, field-major with a
child seed per field, so the first n draws of a larger batch are always the
same (growing the candidate count can only improve the selected error).

All simulations warm-start from the start of the weather span so candidate
trajectories see the same thermal history as the synthesized measurements.
"""

from __future__ import annotations

import calendar
from dataclasses import dataclass, replace
from datetime import date, timedelta

import numpy as np

from .district import DHW_PROFILE, BuildingParams, simulate_heat_many
from .errors import (
    CalibrationInfeasibleError,
    InputError,
    MissingDataError,
    RangeError,
)
from .series import (
    CalendarWindow,
    HeatingSeason,
    TimeSeries,
    hour_of_day,
    missing_days,
    slice_window,
)

CALIBRATABLE_FIELDS = (
    "capacitance",
    "setpoint_day",
    "setpoint_night",
    "solar_aperture",
    "ua",
)

_BILL_TOL = 1e-9


@dataclass(frozen=True)
class ParamRanges:
    """Uniform sampling bounds per calibratable field.  low == high pins."""

    bounds: dict[str, tuple[float, float]]

    def __post_init__(self) -> None:
        unknown = set(self.bounds) - set(CALIBRATABLE_FIELDS)
        if unknown:
            raise InputError(f"not calibratable: {sorted(unknown)}")
        if set(self.bounds) != set(CALIBRATABLE_FIELDS):
            missing = set(CALIBRATABLE_FIELDS) - set(self.bounds)
            raise InputError(f"ranges missing for: {sorted(missing)}")
        for name, (lo, hi) in self.bounds.items():
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise InputError(f"invalid range for {name}: ({lo}, {hi})")


def default_ranges() -> ParamRanges:
    return ParamRanges({
        "ua": (800.0, 9000.0),
        "capacitance": (2.0e8, 1.9e9),
        "setpoint_day": (18.0, 23.0),
        "setpoint_night": (14.0, 20.0),
        "solar_aperture": (5.0, 150.0),
    })


def sample_params(
    ranges: ParamRanges, n: int, seed: int, base: BuildingParams
) -> list[BuildingParams]:
    """n uniform candidates; non-calibratable fields copy ``base``.

    Field-major draws with per-field child seeds keep the list prefix-stable
    in n for a fixed seed.
    """
    if n <= 0:
        raise InputError("candidate count must be positive")
    draws = {}
    for f_idx, name in enumerate(CALIBRATABLE_FIELDS):
        lo, hi = ranges.bounds[name]
        rng = np.random.default_rng(np.random.SeedSequence((seed, 404, f_idx)))
        draws[name] = rng.uniform(lo, hi, n) if hi > lo else np.full(n, lo)
    return [
        replace(base, **{name: float(draws[name][i]) for name in CALIBRATABLE_FIELDS})
        for i in range(n)
    ]


# ---------------------------------------------------------------------------
# billing

def calendar_months(start: date, days: int) -> list[CalendarWindow]:
    """Whole calendar months fully contained in the span."""
    last = start + timedelta(days=days - 1)
    months: list[CalendarWindow] = []
    y, m = start.year, start.month
    while date(y, m, 1) <= last:
        n_days = calendar.monthrange(y, m)[1]
        win = CalendarWindow(date(y, m, 1), n_days)
        if win.start_date >= start and win.last_date <= last:
            months.append(win)
        m += 1
        if m == 13:
            y, m = y + 1, 1
    return months


def non_heating_months(
    start: date, days: int, seasons: tuple[HeatingSeason, ...] | list[HeatingSeason]
) -> list[CalendarWindow]:
    """Calendar months in the span with no day inside any heating season."""
    out = []
    for win in calendar_months(start, days):
        if not any(s.contains_date(d) for s in seasons for d in win.dates()):
            out.append(win)
    return out


def derive_bills(power: TimeSeries, months: list[CalendarWindow]) -> list[float]:
    """Monthly energy (kWh) from the metered series.

    Present-slot mean scaled to the full month, so meter gaps do not shrink
    the bill.  A month with nothing metered cannot produce a bill.
    """
    bills = []
    for win in months:
        sl = slice_window(power, win)
        present = np.isfinite(sl.values)
        if not present.any():
            raise MissingDataError(f"no metered data in month {win.start_date.isoformat()}")
        bills.append(float(sl.values[present].mean()) * win.n_slots)
    return bills


# ---------------------------------------------------------------------------
# simulation plumbing


def _window_slots(temp: TimeSeries, window: CalendarWindow) -> tuple[int, int]:
    offset = (window.start - temp.start).total_seconds() / 3600.0
    if offset != int(offset):
        raise InputError("window start is not slot-aligned with the weather")
    lo = int(offset)
    hi = lo + window.n_slots
    if lo < 0 or hi > len(temp):
        raise RangeError("window outside the weather span")
    return lo, hi


def _dhw_requirement(
    heat: np.ndarray,
    months: list[CalendarWindow],
    bills: list[float],
    temp: TimeSeries,
) -> np.ndarray:
    """Per-candidate daily DHW energy implied by the billing constraint."""
    heat_month = np.zeros(heat.shape[0])
    for win in months:
        lo, hi = _window_slots(temp, win)
        heat_month += heat[:, lo:hi].sum(axis=1)
    heat_month /= len(months)
    mean_bill = float(np.mean(bills))
    mean_days = float(np.mean([w.length_days for w in months]))
    return (mean_bill - heat_month) / mean_days


def calibrate_dhw(
    bills: list[float],
    candidate: BuildingParams,
    temp: TimeSeries,
    ghi: TimeSeries,
    months: list[CalendarWindow],
) -> BuildingParams:
    """Size the candidate's daily hot-water energy to match the mean bill.

    The space-heat share is simulated; the remainder of the mean bill is
    attributed to hot water.  A remainder the candidate cannot express --
    negative, or nonzero while the candidate has no hot-water circuit --
    is infeasible.
    """
    if not months or len(bills) != len(months):
        raise InputError("need one bill per month, at least one month")
    upto = max(_window_slots(temp, w)[1] for w in months)
    heat = simulate_heat_many([candidate], temp, ghi, upto)
    required = float(_dhw_requirement(heat, months, bills, temp)[0])
    scale = max(abs(float(np.mean(bills))), 1.0)
    if required < -_BILL_TOL * scale:
        raise CalibrationInfeasibleError(
            "billed energy is below the simulated space-heat energy"
        )
    required = max(required, 0.0)
    if candidate.dhw_daily_kwh == 0.0 and required > _BILL_TOL * scale:
        raise CalibrationInfeasibleError(
            "candidate has no hot-water circuit but the bill requires one"
        )
    return replace(candidate, dhw_daily_kwh=required)


# ---------------------------------------------------------------------------
# window calibration


@dataclass(frozen=True)
class CalibrationResult:
    window: CalendarWindow
    params: BuildingParams
    calibration_error: float  # CV(RMSE) on the calibration window
    candidate_count: int  # candidates that survived the billing stage


def select_best(errors: np.ndarray) -> int:
    """Index of the smallest error; ties resolve to the lowest index."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise InputError("empty candidate list")
    if not np.all(np.isfinite(errors)):
        raise InputError("candidate errors must be finite")
    return int(np.argmin(errors))


def evaluate_candidates(
    measured: TimeSeries,
    temp: TimeSeries,
    ghi: TimeSeries,
    window: CalendarWindow,
    candidates: list[BuildingParams],
) -> np.ndarray:
    """CV(RMSE) per candidate over the window's present metered slots."""
    if not candidates:
        raise InputError("empty candidate list")
    meas_win = slice_window(measured, window)
    present = np.isfinite(meas_win.values)
    if not present.any():
        raise MissingDataError("no metered data in the calibration window")
    m = meas_win.values[present]
    m_mean = float(m.mean())
    if m_mean <= 0.0:
        raise InputError("measured mean must be positive for cvrmse")

    lo, hi = _window_slots(temp, window)
    heat = simulate_heat_many(candidates, temp, ghi, hi)[:, lo:hi]
    hours = hour_of_day(temp)[lo:hi]
    dhw = np.array([c.dhw_daily_kwh for c in candidates])[:, None] * DHW_PROFILE[hours][None, :]
    total = heat + dhw
    resid = total[:, present] - m[None, :]
    return np.sqrt(np.mean(resid * resid, axis=1)) / m_mean


def calibrate_window(
    measured: TimeSeries,
    temp: TimeSeries,
    ghi: TimeSeries,
    window: CalendarWindow,
    ranges: ParamRanges,
    base: BuildingParams,
    bills: list[float],
    months: list[CalendarWindow],
    n_candidates: int = 1000,
    seed: int = 0,
    max_missing_days: float = 1.0,
) -> CalibrationResult:
    """Best-of-n calibration for one window.

    Windows missing more than ``max_missing_days`` of data are refused.
    Candidates whose billing stage is infeasible are dropped; losing all of
    them is a calibration failure.
    """
    meas_win = slice_window(measured, window)
    if missing_days(meas_win) > max_missing_days:
        raise MissingDataError(
            f"window {window.start_date.isoformat()} is missing more than "
            f"{max_missing_days:g} days of data"
        )
    if not months or len(bills) != len(months):
        raise InputError("need one bill per month, at least one month")

    candidates = sample_params(ranges, n_candidates, seed, base)
    upto = max(
        max(_window_slots(temp, w)[1] for w in months),
        _window_slots(temp, window)[1],
    )
    heat = simulate_heat_many(candidates, temp, ghi, upto)
    required = _dhw_requirement(heat, months, bills, temp)

    scale = max(abs(float(np.mean(bills))), 1.0)
    required[np.abs(required) <= _BILL_TOL * scale] = 0.0
    feasible = required >= 0.0
    if base.dhw_daily_kwh == 0.0:
        feasible &= required == 0.0
    keep = np.flatnonzero(feasible)
    if keep.size == 0:
        raise CalibrationInfeasibleError("no candidate satisfies the billing constraint")

    sized = [
        replace(candidates[i], dhw_daily_kwh=float(required[i])) for i in keep
    ]
    lo, hi = _window_slots(temp, window)
    present = np.isfinite(meas_win.values)
    m = meas_win.values[present]
    m_mean = float(m.mean())
    if m_mean <= 0.0:
        raise InputError("measured mean must be positive for cvrmse")
    hours = hour_of_day(temp)[lo:hi]
    dhw = required[keep][:, None] * DHW_PROFILE[hours][None, :]
    total = heat[keep, lo:hi] + dhw
    resid = total[:, present] - m[None, :]
    errors = np.sqrt(np.mean(resid * resid, axis=1)) / m_mean

    best = select_best(errors)
    return CalibrationResult(
        window=window,
        params=sized[best],
        calibration_error=float(errors[best]),
        candidate_count=int(keep.size),
    )
