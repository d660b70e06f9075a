"""Validation-experiment dataset: rolling-origin pairs with date weights.

A sample is one (calibration window, validation window) pair of a
substation, both seven days, both inside the same heating season.
Calibration windows roll by a week, validation windows by a day, so nearby
samples share most of their dates.  The date-frequency weight compensates:
each sample's raw weight is the sum of reciprocal global frequencies of its
validation dates, normalised so weights sum to the sample count.  Downstream
the weight shrinks the per-sample noise floor of frequently covered periods.

The target is the CV(RMSE) of the calibrated simulation against cleaned
metered load over the validation window.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, replace
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .calibration import CalibrationResult
from .district import SubstationMeasurements, simulate_load_many
from .errors import InputError
from .features import cvrmse, feature_names, pair_features, window_summary
from .series import (
    CalendarWindow,
    HeatingSeason,
    TimeSeries,
    Unit,
    missing_days,
    season_of,
    slice_window,
)

WINDOW_DAYS = 7
CAL_STRIDE_DAYS = 7
VAL_STRIDE_DAYS = 1


@dataclass(frozen=True)
class VEPair:
    substation_id: str
    cal_window: CalendarWindow
    val_window: CalendarWindow
    season: str

    @property
    def time_gap_days(self) -> int:
        return (self.val_window.start_date - self.cal_window.start_date).days


@dataclass(frozen=True)
class VESample:
    pair: VEPair
    features: dict[str, float]
    target_cvrmse: float
    weight: float = float("nan")


@dataclass(frozen=True)
class VEDataset:
    samples: tuple[VESample, ...]
    feature_names: tuple[str, ...]
    provenance: dict

    def __post_init__(self) -> None:
        for s in self.samples:
            if set(s.features) != set(self.feature_names):
                raise InputError("sample features do not match the dataset schema")

    def __len__(self) -> int:
        return len(self.samples)

    def X(self) -> np.ndarray:
        return np.array(
            [[s.features[f] for f in self.feature_names] for s in self.samples]
        )

    def y(self) -> np.ndarray:
        return np.array([s.target_cvrmse for s in self.samples])

    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.samples])

    def substation_ids(self) -> list[str]:
        return [s.pair.substation_id for s in self.samples]

    def subset(self, indices: np.ndarray | list[int]) -> "VEDataset":
        """Row subset; stored weights are kept as-is."""
        picked = tuple(self.samples[int(i)] for i in indices)
        return VEDataset(picked, self.feature_names, dict(self.provenance))

    def without_substation(self, substation_id: str) -> "VEDataset":
        """Drop one substation and recompute weights over the remainder."""
        kept = [s for s in self.samples if s.pair.substation_id != substation_id]
        if not kept:
            raise InputError("removing the substation empties the dataset")
        return VEDataset(
            tuple(compute_weights(kept)), self.feature_names, dict(self.provenance)
        )

    def with_feature(self, name: str, values: np.ndarray) -> "VEDataset":
        """Append a derived column (used for redundancy experiments)."""
        if name in self.feature_names:
            raise InputError(f"feature {name!r} already exists")
        values = np.asarray(values, dtype=float)
        if values.shape != (len(self),):
            raise InputError("one value per sample required")
        samples = tuple(
            replace(s, features={**s.features, name: float(values[i])})
            for i, s in enumerate(self.samples)
        )
        return VEDataset(samples, self.feature_names + (name,), dict(self.provenance))


# ---------------------------------------------------------------------------
# window enumeration and pairing


def enumerate_windows(
    span_start: date,
    span_days: int,
    stride_days: int,
    length_days: int = WINDOW_DAYS,
) -> list[CalendarWindow]:
    """Windows of ``length_days`` anchored at the span start, fully inside it."""
    if span_days < length_days:
        return []
    if stride_days <= 0:
        raise InputError("stride must be positive")
    return [
        CalendarWindow(span_start + timedelta(days=off), length_days)
        for off in range(0, span_days - length_days + 1, stride_days)
    ]


def season_span(
    season: HeatingSeason, data_start: date, data_days: int
) -> tuple[date, int] | None:
    """Intersection of a season with the data span, as (start, days)."""
    data_last = data_start + timedelta(days=data_days - 1)
    lo = max(season.first_date, data_start)
    hi = min(season.last_date, data_last)
    if lo > hi:
        return None
    return lo, (hi - lo).days + 1


def build_pairs(
    substation_id: str,
    cal_windows: list[CalendarWindow],
    val_windows: list[CalendarWindow],
    seasons: tuple[HeatingSeason, ...] | list[HeatingSeason],
) -> list[VEPair]:
    """Same-season cartesian product; a window pairing with itself is valid."""
    pairs: list[VEPair] = []
    for cal in cal_windows:
        cal_season = season_of(cal, list(seasons))
        if cal_season is None:
            continue
        for val in val_windows:
            val_season = season_of(val, list(seasons))
            if val_season is not None and val_season.label == cal_season.label:
                pairs.append(VEPair(substation_id, cal, val, cal_season.label))
    return pairs


# ---------------------------------------------------------------------------
# weights


def compute_weights(samples: list[VESample]) -> list[VESample]:
    """Date-frequency weights over validation dates, normalised to sum to N.

    A date's frequency is the number of samples whose validation window
    contains it, counted over the whole dataset.
    """
    if not samples:
        return []
    freq: Counter[date] = Counter()
    for s in samples:
        freq.update(s.pair.val_window.dates())
    raw = np.array(
        [sum(1.0 / freq[d] for d in s.pair.val_window.dates()) for s in samples]
    )
    weights = raw * (len(samples) / raw.sum())
    return [replace(s, weight=float(w)) for s, w in zip(samples, weights)]


# ---------------------------------------------------------------------------
# dataset assembly


@dataclass
class BuildLog:
    dropped_windows: list[tuple[str, date, str]]
    dropped_samples: list[tuple[str, date, date, str]]
    n_pairs_considered: int

    def summary(self) -> dict:
        return {
            "dropped_windows": len(self.dropped_windows),
            "dropped_samples": len(self.dropped_samples),
            "pairs_considered": self.n_pairs_considered,
        }


def build_dataset(
    cleaned: dict[str, SubstationMeasurements],
    temp: TimeSeries,
    ghi: TimeSeries,
    seasons: tuple[HeatingSeason, ...] | list[HeatingSeason],
    calibrations: dict[tuple[str, date], CalibrationResult],
    floor_areas: dict[str, float],
    data_start: date,
    data_days: int,
    max_missing_days: float = 1.0,
    hdd_base_c: float = 18.0,
    ga_day_matched: bool = True,
    provenance: dict | None = None,
) -> tuple[VEDataset, BuildLog]:
    """Assemble all samples for a district.

    Windows missing more than ``max_missing_days`` of metered load are
    dropped before pairing; samples with an undefined feature or target are
    dropped and logged.  Validation simulations reuse the calibrated
    parameters' full-span trajectory (same warm start as the synthesis).
    """
    log = BuildLog([], [], 0)
    samples: list[VESample] = []

    for sub_id in sorted(cleaned):
        meas = cleaned[sub_id]
        area = floor_areas[sub_id]
        for season in seasons:
            span = season_span(season, data_start, data_days)
            if span is None:
                continue
            span_start, span_days = span
            cal_all = enumerate_windows(span_start, span_days, CAL_STRIDE_DAYS)
            val_all = enumerate_windows(span_start, span_days, VAL_STRIDE_DAYS)
            cal_windows = _drop_gappy(sub_id, cal_all, meas.power, max_missing_days, log)
            val_windows = _drop_gappy(sub_id, val_all, meas.power, max_missing_days, log)
            cal_windows = [w for w in cal_windows if (sub_id, w.start_date) in calibrations]
            pairs = build_pairs(sub_id, cal_windows, val_windows, [season])
            log.n_pairs_considered += len(pairs)
            if not pairs:
                continue

            cal_list = sorted({p.cal_window.start_date for p in pairs})
            results = [calibrations[(sub_id, d)] for d in cal_list]
            sims = simulate_load_many([r.params for r in results], temp, ghi)
            sim_series = {
                d: TimeSeries(temp.start, sims[i], Unit.KW)
                for i, d in enumerate(cal_list)
            }

            summaries: dict[date, dict[str, float]] = {}
            for w in {p.cal_window for p in pairs} | {p.val_window for p in pairs}:
                summaries[w.start_date] = window_summary(
                    _slice_channels(meas, w),
                    slice_window(temp, w),
                    slice_window(ghi, w),
                    floor_area=area,
                    hdd_base_c=hdd_base_c,
                    ga_day_matched=ga_day_matched,
                )

            for p in pairs:
                sample = _make_sample(p, meas, sim_series, summaries, log)
                if sample is not None:
                    samples.append(sample)

    samples = compute_weights(samples)
    names = tuple(feature_names())
    prov = dict(provenance or {})
    prov.setdefault("n_substations", len(cleaned))
    prov.setdefault("n_samples", len(samples))
    return VEDataset(tuple(samples), names, prov), log


def _drop_gappy(
    sub_id: str,
    windows: list[CalendarWindow],
    power: TimeSeries,
    max_missing_days: float,
    log: BuildLog,
) -> list[CalendarWindow]:
    kept = []
    for w in windows:
        if missing_days(slice_window(power, w)) > max_missing_days:
            log.dropped_windows.append((sub_id, w.start_date, "missing_data"))
        else:
            kept.append(w)
    return kept


def _slice_channels(
    meas: SubstationMeasurements, window: CalendarWindow
) -> SubstationMeasurements:
    return SubstationMeasurements(
        power=slice_window(meas.power, window),
        flow=slice_window(meas.flow, window),
        supply_temp=slice_window(meas.supply_temp, window),
        return_temp=slice_window(meas.return_temp, window),
    )


def _make_sample(
    p: VEPair,
    meas: SubstationMeasurements,
    sim_series: dict[date, TimeSeries],
    summaries: dict[date, dict[str, float]],
    log: BuildLog,
) -> VESample | None:
    try:
        target = cvrmse(
            slice_window(sim_series[p.cal_window.start_date], p.val_window),
            slice_window(meas.power, p.val_window),
        )
    except InputError as exc:
        log.dropped_samples.append(
            (p.substation_id, p.cal_window.start_date, p.val_window.start_date, str(exc))
        )
        return None
    feats = pair_features(
        summaries[p.cal_window.start_date],
        summaries[p.val_window.start_date],
        p.time_gap_days,
    )
    bad = [k for k, v in feats.items() if not np.isfinite(v)]
    if bad or not np.isfinite(target):
        log.dropped_samples.append(
            (
                p.substation_id,
                p.cal_window.start_date,
                p.val_window.start_date,
                f"undefined: {', '.join(bad) if bad else 'target'}",
            )
        )
        return None
    return VESample(pair=p, features=feats, target_cvrmse=target)


# ---------------------------------------------------------------------------
# persistence


_META_COLUMNS = ("substation_id", "cal_start", "val_start", "season", "weight", "target_cvrmse")


def write_dataset(dataset: VEDataset, csv_path: str | Path) -> None:
    """CSV plus a JSON sidecar (schema + provenance) next to it.

    Floats are written with repr so a write/read/write cycle is
    byte-identical.
    """
    csv_path = Path(csv_path)
    header = list(_META_COLUMNS) + list(dataset.feature_names)
    lines = [",".join(header)]
    for s in dataset.samples:
        row = [
            s.pair.substation_id,
            s.pair.cal_window.start_date.isoformat(),
            s.pair.val_window.start_date.isoformat(),
            s.pair.season,
            repr(s.weight),
            repr(s.target_cvrmse),
        ]
        row += [repr(s.features[f]) for f in dataset.feature_names]
        lines.append(",".join(row))
    csv_path.write_text("\n".join(lines) + "\n")
    sidecar = {
        "feature_names": list(dataset.feature_names),
        "provenance": dataset.provenance,
        "n_samples": len(dataset),
    }
    sidecar_path(csv_path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def sidecar_path(csv_path: str | Path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.json")


def read_dataset(csv_path: str | Path) -> VEDataset:
    csv_path = Path(csv_path)
    meta = json.loads(sidecar_path(csv_path).read_text())
    names = tuple(meta["feature_names"])
    lines = csv_path.read_text().splitlines()
    header = lines[0].split(",")
    expected = list(_META_COLUMNS) + list(names)
    if header != expected:
        raise InputError("dataset CSV header does not match its sidecar schema")
    samples = []
    for line in lines[1:]:
        cells = line.split(",")
        sub_id, cal_s, val_s, season = cells[0], cells[1], cells[2], cells[3]
        weight, target = float(cells[4]), float(cells[5])
        feats = {f: float(c) for f, c in zip(names, cells[6:])}
        pair = VEPair(
            substation_id=sub_id,
            cal_window=CalendarWindow(date.fromisoformat(cal_s), WINDOW_DAYS),
            val_window=CalendarWindow(date.fromisoformat(val_s), WINDOW_DAYS),
            season=season,
        )
        samples.append(VESample(pair, feats, target, weight))
    return VEDataset(tuple(samples), names, meta.get("provenance", {}))
