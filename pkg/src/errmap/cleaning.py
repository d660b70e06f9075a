"""Measurement cleaning: outlier masks, channel consistency, seasonal screens.

Three independent detectors produce boolean keep-masks over the hourly slots
of one substation:

* a rolling 3-sigma filter on heat power,
* a heat-balance consistency check across the four metered channels,
* a per-season screen that rejects whole seasons whose daily energy does not
  track heating degree days.

Masks compose by AND; the first detector (in application order) to reject a
slot supplies its reason code.  Cleaning never edits values: downstream code
applies a mask by replacing rejected slots with NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime
from enum import IntEnum

import numpy as np

from .district import WATER_VOL_HEAT_KWH, SubstationMeasurements
from .errors import InputError
from .series import (
    HOURS_PER_DAY,
    HeatingSeason,
    TimeSeries,
    daily_mean,
    day_dates,
)

MIN_SEASON_DAYS = 14  # below this the HDD screen refuses to decide


class Reason(IntEnum):
    """Why a slot was rejected.  OK slots carry no reason."""

    OK = 0
    OUTLIER_3SIGMA = 1
    INCONSISTENT = 2
    ATYPICAL_HDD = 3
    MANUAL = 4


@dataclass(frozen=True)
class CleaningMask:
    """Keep/reject decision per slot, aligned with the measurement series."""

    start: datetime
    keep: np.ndarray  # bool
    reason: np.ndarray  # uint8, Reason codes; OK where keep

    def __post_init__(self) -> None:
        keep = np.asarray(self.keep, dtype=bool)
        reason = np.asarray(self.reason, dtype=np.uint8)
        if keep.shape != reason.shape or keep.ndim != 1:
            raise InputError("mask arrays must be equal-length vectors")
        if np.any(keep & (reason != Reason.OK)) or np.any(~keep & (reason == Reason.OK)):
            raise InputError("reason codes must mark exactly the rejected slots")
        keep.flags.writeable = False
        reason.flags.writeable = False
        object.__setattr__(self, "keep", keep)
        object.__setattr__(self, "reason", reason)

    def __len__(self) -> int:
        return self.keep.size

    @property
    def n_rejected(self) -> int:
        return int(np.sum(~self.keep))

    @classmethod
    def all_keep(cls, start: datetime, n: int) -> "CleaningMask":
        return cls(start, np.ones(n, dtype=bool), np.zeros(n, dtype=np.uint8))

    @classmethod
    def from_flags(cls, start: datetime, flagged: np.ndarray, reason: Reason) -> "CleaningMask":
        flagged = np.asarray(flagged, dtype=bool)
        codes = np.where(flagged, np.uint8(reason), np.uint8(Reason.OK))
        return cls(start, ~flagged, codes)


def combine_masks(first: CleaningMask, second: CleaningMask) -> CleaningMask:
    """AND of the keep sets; where both reject, the first mask's reason wins."""
    if first.start != second.start or len(first) != len(second):
        raise InputError("masks must be aligned to combine")
    keep = first.keep & second.keep
    reason = np.where(first.keep, second.reason, first.reason)
    reason = np.where(keep, np.uint8(Reason.OK), reason)
    return CleaningMask(first.start, keep, reason.astype(np.uint8))


def apply_mask(series: TimeSeries, mask: CleaningMask) -> TimeSeries:
    """Rejected slots become NaN; kept slots pass through unchanged."""
    if mask.start != series.start or len(mask) != len(series):
        raise InputError("mask is not aligned with the series")
    vals = np.where(mask.keep, series.values, np.nan)
    return TimeSeries(series.start, vals, series.unit)


# ---------------------------------------------------------------------------
# detectors


def _rolling_moments(values: np.ndarray, window_slots: int) -> tuple[np.ndarray, ...]:
    """Centred rolling (count, mean, std) over present slots via cumsums."""
    present = np.isfinite(values)
    x = np.where(present, values, 0.0)
    cn = np.concatenate(([0.0], np.cumsum(present)))
    cs = np.concatenate(([0.0], np.cumsum(x)))
    cq = np.concatenate(([0.0], np.cumsum(x * x)))
    n = values.size
    half = window_slots // 2
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    count = cn[hi] - cn[lo]
    safe = np.maximum(count, 1.0)
    mean = (cs[hi] - cs[lo]) / safe
    var = (cq[hi] - cq[lo]) / safe - mean * mean
    std = np.sqrt(np.maximum(var, 0.0))
    return count, mean, std


def sigma_filter(power: TimeSeries, window_days: int = 14, n_sigma: float = 3.0) -> CleaningMask:
    """Reject slots deviating more than ``n_sigma`` rolling standard
    deviations from the centred rolling mean.

    The window spans ``window_days`` around each slot and shrinks at the
    series edges.  Windows with fewer than 24 present values never flag, and
    a zero rolling deviation flags nothing (a constant series is clean).
    """
    if window_days <= 0:
        raise InputError("window must be positive")
    v = power.values
    count, mean, std = _rolling_moments(v, window_days * HOURS_PER_DAY)
    with np.errstate(invalid="ignore"):
        flagged = (
            np.isfinite(v)
            & (count >= HOURS_PER_DAY)
            & (std > 0.0)
            & (np.abs(v - mean) > n_sigma * std)
        )
    return CleaningMask.from_flags(power.start, flagged, Reason.OUTLIER_3SIGMA)


def consistency_check(
    meas: SubstationMeasurements,
    tol: float = 0.1,
    floor_kw: float = 1.0,
) -> CleaningMask:
    """Reject slots where metered power disagrees with flow * delta-T.

    The relative residual is |P - c*q*(Ts - Tr)| / max(P, floor); the floor
    keeps near-zero power slots from amplifying noise.  Slots with any channel
    missing are left alone (the missingness itself is handled elsewhere).
    """
    if tol < 0:
        raise InputError("tolerance must be non-negative")
    p = meas.power.values
    # 1.16 kW per (m3/h * K): volumetric heat capacity of water
    computed = WATER_VOL_HEAT_KWH * 1000.0 * meas.flow.values * (
        meas.supply_temp.values - meas.return_temp.values
    )
    all_present = (
        np.isfinite(p)
        & np.isfinite(meas.flow.values)
        & np.isfinite(meas.supply_temp.values)
        & np.isfinite(meas.return_temp.values)
    )
    with np.errstate(invalid="ignore"):
        resid = np.abs(p - computed) / np.maximum(p, floor_kw)
        flagged = all_present & (resid > tol)
    return CleaningMask.from_flags(meas.power.start, flagged, Reason.INCONSISTENT)


@dataclass(frozen=True)
class SeasonScreen:
    """Outcome of the HDD screen for one heating season."""

    label: str
    kept: bool
    reason: str  # "ok" | "low_correlation" | "insufficient_data"
    r: float | None
    n_days: int


def hdd_screen(
    daily_energy: np.ndarray,
    daily_hdd: np.ndarray,
    r_min: float = 0.5,
    label: str = "",
) -> SeasonScreen:
    """Decide whether one season's consumption tracks heating degree days.

    Uses Pearson correlation over days where both values are present.  Fewer
    than MIN_SEASON_DAYS valid days is reported as insufficient data rather
    than a rejection on merit; an undefined correlation (either input
    constant) counts as no correlation.
    """
    e = np.asarray(daily_energy, dtype=float)
    h = np.asarray(daily_hdd, dtype=float)
    if e.shape != h.shape or e.ndim != 1:
        raise InputError("daily energy and HDD must be aligned vectors")
    valid = np.isfinite(e) & np.isfinite(h)
    n = int(valid.sum())
    if n < MIN_SEASON_DAYS:
        return SeasonScreen(label, False, "insufficient_data", None, n)
    ev, hv = e[valid], h[valid]
    if np.ptp(ev) == 0.0 or np.ptp(hv) == 0.0:
        return SeasonScreen(label, False, "low_correlation", 0.0, n)
    r = float(np.corrcoef(ev, hv)[0, 1])
    if r < r_min:
        return SeasonScreen(label, False, "low_correlation", r, n)
    return SeasonScreen(label, True, "ok", r, n)


def daily_hdd(weather_temp: TimeSeries, base_c: float = 18.0) -> np.ndarray:
    """Heating degree days per calendar day from hourly temperature."""
    means = daily_mean(weather_temp)
    return np.maximum(base_c - means, 0.0)


# ---------------------------------------------------------------------------
# substation-level driver


@dataclass(frozen=True)
class CleaningReport:
    mask: CleaningMask
    screens: tuple[SeasonScreen, ...]
    n_outlier: int
    n_inconsistent: int
    n_atypical: int


def clean_measurements(
    meas: SubstationMeasurements,
    weather_temp: TimeSeries,
    seasons: tuple[HeatingSeason, ...] | list[HeatingSeason],
    sigma_window_days: int = 14,
    consistency_tol: float = 0.1,
    power_floor_kw: float = 1.0,
    r_min: float = 0.5,
    hdd_base_c: float = 18.0,
) -> CleaningReport:
    """Full cleaning pass for one substation.

    Slot detectors run on the raw series; the seasonal screen then sees the
    slot-cleaned power, so isolated meter faults cannot sink a whole season.
    """
    m_sigma = sigma_filter(meas.power, window_days=sigma_window_days)
    m_cons = consistency_check(meas, tol=consistency_tol, floor_kw=power_floor_kw)
    slot_mask = combine_masks(m_sigma, m_cons)

    power_clean = apply_mask(meas.power, slot_mask)
    e_day = daily_mean(power_clean) * HOURS_PER_DAY  # kWh per day
    h_day = daily_hdd(weather_temp, base_c=hdd_base_c)
    dates = day_dates(power_clean)
    date_idx = {d: i for i, d in enumerate(dates)}

    screens: list[SeasonScreen] = []
    season_flags = np.zeros(len(meas.power), dtype=bool)
    for season in seasons:
        rows = [date_idx[d] for d in _season_days(season, dates)]
        if not rows:
            continue
        rows_a = np.array(rows)
        screen = hdd_screen(e_day[rows_a], h_day[rows_a], r_min=r_min, label=season.label)
        screens.append(screen)
        if not screen.kept:
            for i in rows:
                season_flags[i * HOURS_PER_DAY:(i + 1) * HOURS_PER_DAY] = True
    m_season = CleaningMask.from_flags(meas.power.start, season_flags, Reason.ATYPICAL_HDD)

    mask = combine_masks(slot_mask, m_season)
    return CleaningReport(
        mask=mask,
        screens=tuple(screens),
        n_outlier=int(np.sum(mask.reason == Reason.OUTLIER_3SIGMA)),
        n_inconsistent=int(np.sum(mask.reason == Reason.INCONSISTENT)),
        n_atypical=int(np.sum(mask.reason == Reason.ATYPICAL_HDD)),
    )


def _season_days(season: HeatingSeason, dates: list[date]) -> list[date]:
    return [d for d in dates if season.contains_date(d)]


def apply_cleaning(
    meas: SubstationMeasurements, mask: CleaningMask
) -> SubstationMeasurements:
    """Project one mask onto all four channels."""
    return SubstationMeasurements(
        power=apply_mask(meas.power, mask),
        flow=apply_mask(meas.flow, mask),
        supply_temp=apply_mask(meas.supply_temp, mask),
        return_temp=apply_mask(meas.return_temp, mask),
    )
