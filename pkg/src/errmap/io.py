"""File formats: measurement, weather, and mask CSVs; canonical JSON.

All floats are written with repr so that write/read/write cycles are
byte-identical; timestamps are ISO-8601 UTC with a Z suffix; missing values
are empty cells.  JSON artifacts are sorted and newline-terminated for the
same reason: identical runs must produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .cleaning import CleaningMask, Reason
from .district import SubstationMeasurements
from .errors import InputError
from .series import TimeSeries, Unit

MEASUREMENT_HEADER = "substation_id,timestamp,heat_power_kw,flow_m3h,supply_temp_c,return_temp_c"
WEATHER_HEADER = "timestamp,temp_c,ghi_wm2"
MASK_HEADER = "substation_id,timestamp,keep,reason"


def format_timestamp(ts: datetime) -> str:
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(s: str) -> datetime:
    if not s.endswith("Z"):
        raise InputError(f"timestamp {s!r} is not UTC")
    return datetime.fromisoformat(s[:-1])


def _fmt(v: float) -> str:
    return "" if not np.isfinite(v) else repr(float(v))


def _parse_cell(s: str) -> float:
    return float(s) if s else float("nan")


def write_measurements_csv(
    path: str | Path, substation_id: str, meas: SubstationMeasurements
) -> None:
    start = meas.power.start
    lines = [MEASUREMENT_HEADER]
    for i in range(len(meas.power)):
        ts = format_timestamp(start + timedelta(hours=i))
        lines.append(
            ",".join(
                [
                    substation_id,
                    ts,
                    _fmt(meas.power.values[i]),
                    _fmt(meas.flow.values[i]),
                    _fmt(meas.supply_temp.values[i]),
                    _fmt(meas.return_temp.values[i]),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_measurements_csv(path: str | Path) -> tuple[str, SubstationMeasurements]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != MEASUREMENT_HEADER:
        raise InputError(f"{path}: not a measurement CSV")
    if len(lines) < 2:
        raise InputError(f"{path}: no rows")
    sub_id = None
    stamps: list[datetime] = []
    cols: list[list[float]] = [[], [], [], []]
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != 6:
            raise InputError(f"{path}: malformed row {line!r}")
        if sub_id is None:
            sub_id = cells[0]
        elif cells[0] != sub_id:
            raise InputError(f"{path}: mixed substation ids")
        stamps.append(parse_timestamp(cells[1]))
        for j in range(4):
            cols[j].append(_parse_cell(cells[2 + j]))
    _check_hourly(stamps, path)
    start = stamps[0]
    return sub_id, SubstationMeasurements(
        power=TimeSeries(start, np.array(cols[0]), Unit.KW),
        flow=TimeSeries(start, np.array(cols[1]), Unit.M3_PER_H),
        supply_temp=TimeSeries(start, np.array(cols[2]), Unit.DEGC),
        return_temp=TimeSeries(start, np.array(cols[3]), Unit.DEGC),
    )


def _check_hourly(stamps: list[datetime], path) -> None:
    for i in range(1, len(stamps)):
        if stamps[i] - stamps[i - 1] != timedelta(hours=1):
            raise InputError(f"{path}: timestamps are not contiguous hourly")


def write_weather_csv(path: str | Path, temp: TimeSeries, ghi: TimeSeries) -> None:
    if len(temp) != len(ghi) or temp.start != ghi.start:
        raise InputError("weather series must be aligned")
    lines = [WEATHER_HEADER]
    for i in range(len(temp)):
        ts = format_timestamp(temp.start + timedelta(hours=i))
        lines.append(",".join([ts, _fmt(temp.values[i]), _fmt(ghi.values[i])]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_weather_csv(path: str | Path) -> tuple[TimeSeries, TimeSeries]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != WEATHER_HEADER:
        raise InputError(f"{path}: not a weather CSV")
    stamps: list[datetime] = []
    temps: list[float] = []
    ghis: list[float] = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != 3:
            raise InputError(f"{path}: malformed row {line!r}")
        stamps.append(parse_timestamp(cells[0]))
        temps.append(_parse_cell(cells[1]))
        ghis.append(_parse_cell(cells[2]))
    if not stamps:
        raise InputError(f"{path}: no rows")
    _check_hourly(stamps, path)
    return (
        TimeSeries(stamps[0], np.array(temps), Unit.DEGC),
        TimeSeries(stamps[0], np.array(ghis), Unit.W_PER_M2),
    )


def write_mask_csv(path: str | Path, substation_id: str, mask: CleaningMask) -> None:
    lines = [MASK_HEADER]
    for i in range(len(mask)):
        ts = format_timestamp(mask.start + timedelta(hours=i))
        keep = int(mask.keep[i])
        reason = "" if keep else Reason(mask.reason[i]).name.lower()
        lines.append(",".join([substation_id, ts, str(keep), reason]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_mask_csv(path: str | Path) -> tuple[str, CleaningMask]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != MASK_HEADER:
        raise InputError(f"{path}: not a mask CSV")
    sub_id = None
    stamps: list[datetime] = []
    keeps: list[bool] = []
    reasons: list[int] = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != 4:
            raise InputError(f"{path}: malformed row {line!r}")
        if sub_id is None:
            sub_id = cells[0]
        stamps.append(parse_timestamp(cells[1]))
        keep = cells[2] == "1"
        keeps.append(keep)
        reasons.append(Reason.OK if keep else Reason[cells[3].upper()])
    if not stamps:
        raise InputError(f"{path}: no rows")
    _check_hourly(stamps, path)
    return sub_id, CleaningMask(
        stamps[0], np.array(keeps, dtype=bool), np.array(reasons, dtype=np.uint8)
    )


# ---------------------------------------------------------------------------
# canonical JSON and hashing


def write_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()
