"""Window descriptors for calibration/validation pairs.

A feature vector describes one (calibration window, validation window) pair
of a substation.  Base descriptors are computed on the validation window; a
``_gap`` twin (validation minus calibration) exists for every base
descriptor, and the signed day offset between the windows completes the set.
Features fall into three groups used by the selector: how the building uses
energy, the boundary conditions it faced, and how those conditions shifted
between the two windows.

Scale conventions: the variation measure and CV(RMSE) are percentages and
ratios, invariant under rescaling the load; plain statistics carry the
channel's own unit.  A feature whose preconditions fail (all slots missing,
zero mean load, constant temperature) is NaN; dataset assembly drops such
samples and logs them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .district import SubstationMeasurements
from .errors import InputError
from .series import HOURS_PER_DAY, TimeSeries, daily_mean

_CHANNELS = ("power", "flow", "supply_temp", "return_temp")
_STATS = ("min", "mean", "median", "max")

GROUP_ENERGY = "energy_use"
GROUP_BOUNDARY = "boundary"
GROUP_CV = "cv_conditions"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    unit: str
    group: str


def _base_specs() -> list[FeatureSpec]:
    specs = [
        FeatureSpec("power_variation", "%", GROUP_ENERGY),
        FeatureSpec("median_power_per_m2", "kW_per_m2", GROUP_ENERGY),
        FeatureSpec("thermoception", "1_per_K", GROUP_ENERGY),
    ]
    units = {"power": "kW", "flow": "m3_per_h", "supply_temp": "degC", "return_temp": "degC"}
    for ch in _CHANNELS:
        for st in _STATS:
            specs.append(FeatureSpec(f"{ch}_{st}", units[ch], GROUP_ENERGY))
    specs += [
        FeatureSpec("max_temperature", "degC", GROUP_BOUNDARY),
        FeatureSpec("mean_ghi", "W_per_m2", GROUP_BOUNDARY),
        FeatureSpec("temperature_variation", "degC", GROUP_BOUNDARY),
        FeatureSpec("hdd", "degC_day", GROUP_BOUNDARY),
    ]
    return specs


def feature_schema() -> list[FeatureSpec]:
    """All pair features in canonical order: bases, then gaps, then the offset."""
    bases = _base_specs()
    schema = list(bases)
    schema += [FeatureSpec(f"{s.name}_gap", s.unit, GROUP_CV) for s in bases]
    schema.append(FeatureSpec("time_gap_days", "days", GROUP_CV))
    return schema


def feature_names() -> list[str]:
    return [s.name for s in feature_schema()]


def feature_groups() -> dict[str, str]:
    return {s.name: s.group for s in feature_schema()}


# ---------------------------------------------------------------------------
# scalar measures


def median_low(values: np.ndarray) -> float:
    """Lower-middle median: sorted[(n-1)//2].  Always an observed value."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise InputError("median of empty sequence")
    return float(v[(v.size - 1) // 2])


def stat_summary(values: np.ndarray) -> dict[str, float]:
    """min/mean/median/max over present slots; all NaN when nothing present."""
    v = np.asarray(values, dtype=float)
    present = v[np.isfinite(v)]
    if present.size == 0:
        return {st: float("nan") for st in _STATS}
    return {
        "min": float(present.min()),
        "mean": float(present.mean()),
        "median": median_low(present),
        "max": float(present.max()),
    }


def weekly_variation(power: TimeSeries, day_matched: bool = True) -> float:
    """Intra-week load variation, percent.

    Deviations of hourly load from daily mean load, halved, relative to the
    window mean.  ``day_matched`` compares each hour against its own day's
    mean; the alternative averages deviations over all (hour, day) pairs.
    Zero for a constant profile; NaN when the window has no usable load.
    """
    v = power.values
    present = np.isfinite(v)
    n_present = int(present.sum())
    if n_present == 0:
        return float("nan")
    p_w = float(v[present].mean())
    if p_w <= 0.0:
        return float("nan")
    p_d = daily_mean(power)
    if day_matched:
        day_of_slot = np.arange(v.size) // HOURS_PER_DAY
        dev = np.abs(v[present] - p_d[day_of_slot[present]])
        total = float(dev.sum())
        denom = p_w * n_present
    else:
        defined = p_d[np.isfinite(p_d)]
        diffs = np.abs(v[present][:, None] - defined[None, :])
        total = float(diffs.sum())
        denom = p_w * n_present * defined.size
    return 0.5 * total / denom * 100.0


def thermoception(power: TimeSeries, temp: TimeSeries) -> float:
    """Relative load deviation per degree of temperature deviation.

    mean(|P - mean P|) / mean P, divided by mean(|T - mean T|), both means
    taken over the window's present load slots.  NaN when load is absent,
    non-positive on average, or temperature never deviates.
    """
    if len(power) != len(temp) or power.start != temp.start:
        raise InputError("power and temperature windows must be aligned")
    present = np.isfinite(power.values) & np.isfinite(temp.values)
    if not present.any():
        return float("nan")
    p = power.values[present]
    t = temp.values[present]
    p_mean = float(p.mean())
    if p_mean <= 0.0:
        return float("nan")
    t_dev = float(np.abs(t - t.mean()).mean())
    if t_dev == 0.0:
        return float("nan")
    p_dev = float(np.abs(p - p_mean).mean())
    return (p_dev / p_mean) / t_dev


def window_hdd(temp: TimeSeries, base_c: float = 18.0) -> float:
    """Sum of daily heating degree days over the window."""
    means = daily_mean(temp)
    return float(np.nansum(np.maximum(base_c - means, 0.0)))


def cvrmse(simulated: TimeSeries, measured: TimeSeries) -> float:
    """Coefficient of variation of the RMSE between two aligned series.

    Computed over slots present in both; the normaliser is the measured mean
    over those slots.  Raises when nothing overlaps or the mean is not
    positive, since the ratio is then meaningless.
    """
    if len(simulated) != len(measured) or simulated.start != measured.start:
        raise InputError("series must be aligned for cvrmse")
    common = np.isfinite(simulated.values) & np.isfinite(measured.values)
    if not common.any():
        raise InputError("no common present slots")
    s = simulated.values[common]
    m = measured.values[common]
    m_mean = float(m.mean())
    if m_mean <= 0.0:
        raise InputError("measured mean must be positive for cvrmse")
    return float(np.sqrt(np.mean((s - m) ** 2)) / m_mean)


# ---------------------------------------------------------------------------
# window summaries and pair assembly


def window_summary(
    meas: SubstationMeasurements,
    temp: TimeSeries,
    ghi: TimeSeries,
    floor_area: float,
    hdd_base_c: float = 18.0,
    ga_day_matched: bool = True,
) -> dict[str, float]:
    """The base descriptors of one window (typically seven days)."""
    if floor_area <= 0:
        raise InputError("floor area must be positive")
    out: dict[str, float] = {}
    out["power_variation"] = weekly_variation(meas.power, day_matched=ga_day_matched)
    pstats = stat_summary(meas.power.values)
    out["median_power_per_m2"] = pstats["median"] / floor_area
    out["thermoception"] = thermoception(meas.power, temp)
    channel_values = {
        "power": pstats,
        "flow": stat_summary(meas.flow.values),
        "supply_temp": stat_summary(meas.supply_temp.values),
        "return_temp": stat_summary(meas.return_temp.values),
    }
    for ch in _CHANNELS:
        for st in _STATS:
            out[f"{ch}_{st}"] = channel_values[ch][st]
    out["max_temperature"] = float(np.max(temp.values))
    out["mean_ghi"] = float(np.mean(ghi.values))
    out["temperature_variation"] = float(np.abs(temp.values - temp.values.mean()).mean())
    out["hdd"] = window_hdd(temp, base_c=hdd_base_c)
    return out


def pair_features(
    cal_summary: dict[str, float],
    val_summary: dict[str, float],
    time_gap_days: float,
) -> dict[str, float]:
    """Assemble the full vector: validation bases, gaps, signed day offset."""
    base_names = [s.name for s in _base_specs()]
    if set(cal_summary) != set(base_names) or set(val_summary) != set(base_names):
        raise InputError("window summaries do not match the declared schema")
    out = {name: val_summary[name] for name in base_names}
    for name in base_names:
        out[f"{name}_gap"] = val_summary[name] - cal_summary[name]
    out["time_gap_days"] = float(time_gap_days)
    return out
