"""Synthetic district generator.

Builds a fleet of substations with known ground truth: weather, per-building
thermal parameters, a lumped-capacitance load simulator, structural error
terms (occupant-driven load swings, a temperature-dependent distortion the
surrogate cannot represent), multiplicative metering noise, and injected
meter anomalies.  With every noise knob at zero the synthesized power series
equals the simulator output for the true parameters exactly, which anchors
the calibration and validation tests.

The simulator doubles as the calibration surrogate: calibration re-runs it
with candidate parameters, so the only model-form error is what this module
plants deliberately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta

import numpy as np

from .errors import InputError
from .series import HOURS_PER_DAY, HeatingSeason, TimeSeries, Unit, hour_of_day

WATER_VOL_HEAT_KWH = 1.16e-3  # kWh per (m3 * K); 1.16 kW per (m3/h * K)
DESIGN_DELTA_T = 25.0  # nominal supply/return split, K

# Relative draw profile for domestic hot water, one weight per hour of day.
# Morning and evening peaks, near-zero at night; normalised to sum to one.
_DHW_SHAPE = np.array(
    [0.5, 0.3, 0.2, 0.2, 0.3, 1.0, 2.5, 3.0, 2.5, 1.5, 1.0, 1.0,
     1.2, 1.0, 0.8, 0.8, 1.0, 1.5, 2.2, 2.5, 2.0, 1.5, 1.0, 0.5]
)
DHW_PROFILE = _DHW_SHAPE / _DHW_SHAPE.sum()


@dataclass(frozen=True)
class BuildingParams:
    """Lumped single-node thermal description of one substation's buildings."""

    ua: float  # overall loss coefficient, W/K
    capacitance: float  # thermal mass, J/K
    floor_area: float  # heated area, m2
    setpoint_day: float  # degC
    setpoint_night: float  # degC
    night_start: int  # hour of day when setback begins
    night_end: int  # hour of day when setback ends
    solar_aperture: float  # effective solar collecting area, m2
    dhw_daily_kwh: float  # hot-water energy per day
    max_heat_power: float  # space-heating capacity, kW

    def __post_init__(self) -> None:
        if min(self.ua, self.capacitance, self.floor_area, self.max_heat_power) <= 0:
            raise InputError("ua, capacitance, floor_area, max_heat_power must be positive")
        if self.solar_aperture < 0 or self.dhw_daily_kwh < 0:
            raise InputError("solar_aperture and dhw_daily_kwh must be non-negative")
        for sp in (self.setpoint_day, self.setpoint_night):
            if not 5.0 <= sp <= 30.0:
                raise InputError("setpoints must lie in [5, 30] degC")
        for h in (self.night_start, self.night_end):
            if not 0 <= h <= 23:
                raise InputError("night hours must lie in 0..23")


@dataclass(frozen=True)
class NoiseSpec:
    """Error terms layered on top of the true simulation.

    mult_sigma      relative metering noise (multiplicative, iid Gaussian)
    occupancy_kw    amplitude of a slow AR(1) occupant load the surrogate
                    does not model
    distortion      strength of a quadratic cold-weather excess load, again
                    outside the surrogate's form
    """

    mult_sigma: float = 0.0
    occupancy_kw: float = 0.0
    distortion: float = 0.0

    def __post_init__(self) -> None:
        if min(self.mult_sigma, self.occupancy_kw, self.distortion) < 0:
            raise InputError("noise magnitudes must be non-negative")

    @property
    def silent(self) -> bool:
        return self.mult_sigma == 0 and self.occupancy_kw == 0 and self.distortion == 0


@dataclass(frozen=True)
class Anomaly:
    """One injected meter fault; ``kind`` is spike, plateau, or dropout."""

    kind: str
    start_slot: int
    duration: int  # slots
    magnitude: float = 0.0  # spike multiple of the series mean

    def __post_init__(self) -> None:
        if self.kind not in ("spike", "plateau", "dropout"):
            raise InputError(f"unknown anomaly kind {self.kind!r}")
        if self.start_slot < 0 or self.duration <= 0:
            raise InputError("anomaly must have a non-negative start and positive duration")


@dataclass(frozen=True)
class Substation:
    id: str
    params: BuildingParams
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    anomalies: tuple[Anomaly, ...] = ()


@dataclass(frozen=True)
class SubstationMeasurements:
    """The four metered channels of one substation, slot-aligned."""

    power: TimeSeries  # kW
    flow: TimeSeries  # m3/h
    supply_temp: TimeSeries  # degC
    return_temp: TimeSeries  # degC

    def __post_init__(self) -> None:
        n = len(self.power)
        for ch in (self.flow, self.supply_temp, self.return_temp):
            if len(ch) != n or ch.start != self.power.start:
                raise InputError("measurement channels must be slot-aligned")


@dataclass(frozen=True)
class DistrictScenario:
    seed: int
    weather_temp: TimeSeries  # degC
    weather_ghi: TimeSeries  # W/m2
    substations: tuple[Substation, ...]
    seasons: tuple[HeatingSeason, ...]


# ---------------------------------------------------------------------------
# weather


def _ar1(rng: np.random.Generator, n: int, phi: float, sigma: float) -> np.ndarray:
    """Stationary AR(1) path with marginal standard deviation ``sigma``."""
    eps = rng.standard_normal(n)
    out = np.empty(n)
    out[0] = sigma * eps[0]
    innov = sigma * math.sqrt(1.0 - phi * phi)
    for t in range(1, n):
        out[t] = phi * out[t - 1] + innov * eps[t]
    return out


def generate_weather(
    seed: int,
    start: date,
    days: int,
    mean_temp: float = 13.5,
    seasonal_amp: float = 7.5,
    diurnal_amp: float = 3.0,
    noise_sigma: float = 2.5,
    peak_ghi: float = 800.0,
) -> tuple[TimeSeries, TimeSeries]:
    """Synthesize hourly (temperature, global horizontal irradiance).

    Temperature is seasonal + diurnal harmonics plus a stationary AR(1)
    excursion; irradiance is a clear-sky half-sine over a season-dependent
    daylight span, damped by a slowly varying cloud factor.  GHI is zero at
    night and never negative.  Deterministic per seed.
    """
    if days <= 0:
        raise InputError("weather span must be positive")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 101)))
    n = days * HOURS_PER_DAY
    t0 = datetime.combine(start, time.min)

    doy = np.array([(start + timedelta(days=i)).timetuple().tm_yday for i in range(days)])
    doy_h = np.repeat(doy, HOURS_PER_DAY).astype(float)
    hours = np.tile(np.arange(HOURS_PER_DAY, dtype=float), days)

    seasonal = mean_temp - seasonal_amp * np.cos(2 * np.pi * (doy_h - 15.0) / 365.25)
    diurnal = diurnal_amp * np.cos(2 * np.pi * (hours - 14.0) / 24.0)
    temp = seasonal + diurnal + _ar1(rng, n, phi=0.97, sigma=noise_sigma)

    # clear-sky half-sine between sunrise and sunset, evaluated at slot centres
    daylength = 12.0 + 3.5 * np.cos(2 * np.pi * (doy_h - 172.0) / 365.25)
    sunrise = 12.0 - daylength / 2.0
    centre = hours + 0.5
    phase = (centre - sunrise) / daylength
    lit = (phase > 0.0) & (phase < 1.0)
    peak = peak_ghi * (0.65 + 0.35 * np.cos(2 * np.pi * (doy_h - 172.0) / 365.25))
    clear = np.where(lit, peak * np.sin(np.pi * np.clip(phase, 0.0, 1.0)), 0.0)

    cloud_state = _ar1(rng, days, phi=0.6, sigma=1.0)
    cloud = 0.25 + 0.75 / (1.0 + np.exp(-cloud_state))
    ghi = clear * np.repeat(cloud, HOURS_PER_DAY)

    return (
        TimeSeries(t0, temp, Unit.DEGC),
        TimeSeries(t0, np.maximum(ghi, 0.0), Unit.W_PER_M2),
    )


# ---------------------------------------------------------------------------
# load simulation


_PARAM_FIELDS = (
    "ua", "capacitance", "setpoint_day", "setpoint_night",
    "solar_aperture", "dhw_daily_kwh", "max_heat_power",
)


def _params_to_arrays(params: list[BuildingParams]) -> dict[str, np.ndarray]:
    cols = {name: np.array([getattr(p, name) for p in params]) for name in _PARAM_FIELDS}
    cols["night_start"] = np.array([p.night_start for p in params])
    cols["night_end"] = np.array([p.night_end for p in params])
    return cols


def _night_mask(hours: np.ndarray, start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """(B, T) boolean: True where the setback setpoint applies."""
    h = hours[None, :]
    s = start[:, None]
    e = end[:, None]
    wraps = s > e
    return np.where(wraps, (h >= s) | (h < e), (h >= s) & (h < e))


def _simulate_batch(
    cols: dict[str, np.ndarray],
    tout: np.ndarray,
    ghi: np.ndarray,
    hours: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hourly explicit-step simulation of B buildings over T slots.

    The heater delivers exactly the power needed to restore the setpoint
    within one step, clipped to [0, capacity]; the indoor node then integrates
    the actual balance.  Returns (space heat kW, dhw kW, indoor trace degC),
    each (B, T).
    """
    B = cols["ua"].size
    T = hours.size
    tout = np.broadcast_to(tout, (B, T))
    ghi = np.broadcast_to(ghi, (B, T))

    night = _night_mask(hours, cols["night_start"], cols["night_end"])
    setp = np.where(night, cols["setpoint_night"][:, None], cols["setpoint_day"][:, None])

    ua = cols["ua"]
    c_per_dt = cols["capacitance"] / 3600.0  # W per K per hour step
    aperture = cols["solar_aperture"]
    max_w = cols["max_heat_power"] * 1000.0

    heat_w = np.empty((B, T))
    tin_trace = np.empty((B, T))
    tin = setp[:, 0].copy()
    for t in range(T):
        solar_w = aperture * ghi[:, t]
        loss_w = ua * (tin - tout[:, t])
        need_w = c_per_dt * (setp[:, t] - tin) + loss_w - solar_w
        p_w = np.clip(need_w, 0.0, max_w)
        tin = tin + (p_w + solar_w - loss_w) / c_per_dt
        heat_w[:, t] = p_w
        tin_trace[:, t] = tin

    dhw_kw = cols["dhw_daily_kwh"][:, None] * DHW_PROFILE[hours][None, :]
    return heat_w / 1000.0, dhw_kw, tin_trace


def _check_weather(temp: TimeSeries, ghi: TimeSeries) -> None:
    if len(temp) != len(ghi) or temp.start != ghi.start:
        raise InputError("temperature and irradiance series must be aligned")
    if not (np.all(np.isfinite(temp.values)) and np.all(np.isfinite(ghi.values))):
        raise InputError("weather series must be complete")


def simulate_load(params: BuildingParams, temp: TimeSeries, ghi: TimeSeries) -> TimeSeries:
    """Total substation load (space heat + hot water), kW, one slot per hour."""
    heat, dhw, _ = simulate_components(params, temp, ghi)
    return TimeSeries(temp.start, heat.values + dhw.values, Unit.KW)


def simulate_components(
    params: BuildingParams, temp: TimeSeries, ghi: TimeSeries
) -> tuple[TimeSeries, TimeSeries, np.ndarray]:
    """(space heat kW, dhw kW, indoor temperature trace)."""
    _check_weather(temp, ghi)
    cols = _params_to_arrays([params])
    hours = hour_of_day(temp)
    heat, dhw, tin = _simulate_batch(cols, temp.values, ghi.values, hours)
    return (
        TimeSeries(temp.start, heat[0], Unit.KW),
        TimeSeries(temp.start, dhw[0], Unit.KW),
        tin[0],
    )


def simulate_load_many(
    params: list[BuildingParams], temp: TimeSeries, ghi: TimeSeries
) -> np.ndarray:
    """Total load for many parameter sets over the same weather, (B, T) kW."""
    _check_weather(temp, ghi)
    cols = _params_to_arrays(params)
    hours = hour_of_day(temp)
    heat, dhw, _ = _simulate_batch(cols, temp.values, ghi.values, hours)
    return heat + dhw


def simulate_heat_many(
    params: list[BuildingParams],
    temp: TimeSeries,
    ghi: TimeSeries,
    n_slots: int | None = None,
) -> np.ndarray:
    """Space heat only, (B, n_slots) kW, warm-started at the series origin.

    Calibration uses the prefix form: candidates integrate the same thermal
    history as the measurement synthesis, so a window simulation is a slice
    of this run rather than a cold restart.
    """
    _check_weather(temp, ghi)
    n = len(temp) if n_slots is None else n_slots
    if not 0 < n <= len(temp):
        raise InputError("prefix length outside the weather span")
    cols = _params_to_arrays(params)
    hours = hour_of_day(temp)[:n]
    heat, _, _ = _simulate_batch(cols, temp.values[:n], ghi.values[:n], hours)
    return heat


# ---------------------------------------------------------------------------
# measurement synthesis


def _apply_anomalies(
    power: np.ndarray, anomalies: tuple[Anomaly, ...]
) -> tuple[np.ndarray, np.ndarray]:
    """Returns (corrupted power, dropout mask).  Dropout wins on overlap."""
    out = power.copy()
    drop = np.zeros(power.size, dtype=bool)
    level = float(np.mean(power))
    order = {"spike": 0, "plateau": 1, "dropout": 2}
    for a in sorted(anomalies, key=lambda a: (order[a.kind], a.start_slot)):
        sl = slice(a.start_slot, min(a.start_slot + a.duration, power.size))
        if a.kind == "spike":
            out[sl] = level * a.magnitude
        elif a.kind == "plateau":
            out[sl] = out[a.start_slot]
        else:
            drop[sl] = True
    return out, drop


def synthesize_one(
    sub: Substation,
    temp: TimeSeries,
    ghi: TimeSeries,
    seed: int,
) -> SubstationMeasurements:
    """Metered channels for one substation.

    The true load is the simulator output plus the planted structural terms;
    metering noise multiplies it; flow and temperatures are derived from the
    pre-anomaly power so that spikes and plateaus break the heat-balance
    consistency between channels, as real meter faults do.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 202, _stream_id(sub.id))))
    base = simulate_load(sub.params, temp, ghi)
    n = len(base)
    load = base.values.copy()

    noise = sub.noise
    if noise.occupancy_kw > 0:
        load = load + noise.occupancy_kw * _ar1(rng, n, phi=0.85, sigma=1.0)
    else:
        rng.standard_normal(n)  # keep the stream aligned across noise settings
    if noise.distortion > 0:
        cold = np.maximum(15.0 - temp.values, 0.0)
        load = load + noise.distortion * (sub.params.ua / 1000.0) * cold * cold / 30.0
    if noise.mult_sigma > 0:
        load = load * (1.0 + noise.mult_sigma * rng.standard_normal(n))
    else:
        rng.standard_normal(n)
    load = np.maximum(load, 0.0)

    supply = np.clip(80.0 - 0.6 * temp.values, 60.0, 88.0)
    ret = supply - DESIGN_DELTA_T
    flow = load / (1000.0 * WATER_VOL_HEAT_KWH * DESIGN_DELTA_T)

    power, dropped = _apply_anomalies(load, sub.anomalies)
    power[dropped] = np.nan
    flow = flow.copy()
    supply = supply.copy()
    ret = ret.copy()
    flow[dropped] = np.nan
    supply[dropped] = np.nan
    ret[dropped] = np.nan

    start = temp.start
    return SubstationMeasurements(
        power=TimeSeries(start, power, Unit.KW),
        flow=TimeSeries(start, flow, Unit.M3_PER_H),
        supply_temp=TimeSeries(start, supply, Unit.DEGC),
        return_temp=TimeSeries(start, ret, Unit.DEGC),
    )


def _stream_id(substation_id: str) -> int:
    """Stable small integer derived from the id, for seed separation."""
    return sum((i + 1) * ord(ch) for i, ch in enumerate(substation_id))


def synthesize_measurements(scenario: DistrictScenario) -> dict[str, SubstationMeasurements]:
    """All metered channels for every substation, keyed by id."""
    return {
        sub.id: synthesize_one(sub, scenario.weather_temp, scenario.weather_ghi, scenario.seed)
        for sub in scenario.substations
    }


# ---------------------------------------------------------------------------
# scenario assembly


def _draw_anomalies(
    rng: np.random.Generator,
    n_slots: int,
    spike_rate: float,
    plateau_rate: float,
    dropout_rate: float,
) -> tuple[Anomaly, ...]:
    """Poisson schedule; rates are events per 30 days."""
    months = n_slots / (30.0 * HOURS_PER_DAY)
    out: list[Anomaly] = []
    for kind, rate, dur_lo, dur_hi in (
        ("spike", spike_rate, 1, 3),
        ("plateau", plateau_rate, 12, 48),
        ("dropout", dropout_rate, 24, 72),
    ):
        count = rng.poisson(rate * months)
        for _ in range(count):
            dur = int(rng.integers(dur_lo, dur_hi + 1))
            start = int(rng.integers(0, max(n_slots - dur, 1)))
            mag = float(rng.uniform(6.0, 12.0)) if kind == "spike" else 0.0
            out.append(Anomaly(kind, start, dur, mag))
    return tuple(out)


def default_seasons(start: date, days: int) -> tuple[HeatingSeason, ...]:
    """Heating seasons (Oct 1 - May 31) clipped to the data span."""
    last = start + timedelta(days=days - 1)
    seasons: list[HeatingSeason] = []
    for year in range(start.year - 1, last.year + 1):
        s0 = date(year, 10, 1)
        s1 = date(year + 1, 5, 31)
        lo = max(s0, start)
        hi = min(s1, last)
        if lo <= hi:
            seasons.append(HeatingSeason(f"{year}-{year + 1}", lo, hi))
    return tuple(seasons)


def build_scenario(
    seed: int = 1,
    start: date = date(2021, 9, 1),
    days: int = 75,
    n_substations: int = 15,
    mult_sigma: float = 0.02,
    occupancy_level: float = 0.6,
    distortion_level: float = 0.15,
    spike_rate: float = 1.0,
    plateau_rate: float = 0.5,
    dropout_rate: float = 0.4,
    mean_temp: float = 13.5,
    seasonal_amp: float = 7.5,
    diurnal_amp: float = 3.0,
    weather_sigma: float = 2.5,
    peak_ghi: float = 800.0,
) -> DistrictScenario:
    """A heterogeneous district with known ground truth.

    Buildings differ in size, insulation quality, setpoints, solar gain and
    hot-water demand; the structural-error amplitudes scale with floor area
    rather than loss coefficient, so well-insulated buildings carry a larger
    relative error.  Deterministic per seed.
    """
    if n_substations <= 0:
        raise InputError("need at least one substation")
    temp, ghi = generate_weather(
        seed, start, days,
        mean_temp=mean_temp, seasonal_amp=seasonal_amp,
        diurnal_amp=diurnal_amp, noise_sigma=weather_sigma, peak_ghi=peak_ghi,
    )
    n_slots = days * HOURS_PER_DAY

    subs: list[Substation] = []
    for i in range(n_substations):
        rng = np.random.default_rng(np.random.SeedSequence((seed, 303, i)))
        area = float(rng.uniform(1500.0, 4500.0))
        ua = area * float(rng.uniform(0.6, 1.8))
        cap = area * float(rng.uniform(1.5e5, 4.0e5))
        sp_day = float(rng.uniform(19.0, 22.0))
        sp_night = sp_day - float(rng.uniform(1.0, 3.0))
        aperture = area * float(rng.uniform(0.01, 0.03))
        dhw = area * float(rng.uniform(0.02, 0.05))
        max_kw = max(30.0, 1.5 * ua * 27.0 / 1000.0 + 3.0 * dhw / HOURS_PER_DAY)
        params = BuildingParams(
            ua=ua, capacitance=cap, floor_area=area,
            setpoint_day=sp_day, setpoint_night=sp_night,
            night_start=22, night_end=6,
            solar_aperture=aperture, dhw_daily_kwh=dhw, max_heat_power=max_kw,
        )
        noise = NoiseSpec(
            mult_sigma=mult_sigma * float(rng.uniform(0.5, 1.5)),
            occupancy_kw=occupancy_level * 0.004 * area * float(rng.uniform(0.5, 1.5)),
            distortion=distortion_level * float(rng.uniform(0.5, 1.5)),
        )
        anomalies = _draw_anomalies(rng, n_slots, spike_rate, plateau_rate, dropout_rate)
        subs.append(Substation(id=f"S{i + 1:02d}", params=params, noise=noise, anomalies=anomalies))

    return DistrictScenario(
        seed=seed,
        weather_temp=temp,
        weather_ghi=ghi,
        substations=tuple(subs),
        seasons=default_seasons(start, days),
    )
