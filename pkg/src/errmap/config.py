"""Run configuration: INI file, environment overrides, stable hashing.

One flat INI file drives every pipeline stage.  Unknown sections or keys
are errors (typos must not silently fall back to defaults).  Every key can
be overridden through the environment as ERRMAP_<SECTION>_<KEY>.  The
configuration hash covers every effective value and is embedded in all
artifacts, so a cached stage can tell whether it is still valid.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field, fields
from datetime import date
from pathlib import Path

from .calibration import ParamRanges
from .errors import ConfigError
from .gp import GPBounds

ENV_PREFIX = "ERRMAP"


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 1
    start_date: date = date(2021, 9, 1)
    days: int = 85
    substations: int = 15
    mult_noise: float = 0.02
    occupancy_level: float = 0.6
    distortion_level: float = 0.15
    spike_rate: float = 1.0
    plateau_rate: float = 0.5
    dropout_rate: float = 0.4
    mean_temp_c: float = 13.5
    seasonal_amp_c: float = 7.5
    diurnal_amp_c: float = 3.0
    weather_noise_c: float = 2.5
    peak_ghi_wm2: float = 800.0


@dataclass(frozen=True)
class CleaningConfig:
    sigma_window_days: int = 14
    consistency_tol: float = 0.1
    power_floor_kw: float = 1.0
    r_min: float = 0.5


@dataclass(frozen=True)
class CalibrationConfig:
    candidates: int = 1000
    seed: int = 7
    max_missing_days: float = 1.0
    ua_min: float = 800.0
    ua_max: float = 9000.0
    capacitance_min: float = 2.0e8
    capacitance_max: float = 1.9e9
    setpoint_day_min: float = 18.0
    setpoint_day_max: float = 23.0
    setpoint_night_min: float = 14.0
    setpoint_night_max: float = 20.0
    solar_aperture_min: float = 5.0
    solar_aperture_max: float = 150.0

    def ranges(self) -> ParamRanges:
        return ParamRanges({
            "ua": (self.ua_min, self.ua_max),
            "capacitance": (self.capacitance_min, self.capacitance_max),
            "setpoint_day": (self.setpoint_day_min, self.setpoint_day_max),
            "setpoint_night": (self.setpoint_night_min, self.setpoint_night_max),
            "solar_aperture": (self.solar_aperture_min, self.solar_aperture_max),
        })


@dataclass(frozen=True)
class FeaturesConfig:
    hdd_base_c: float = 18.0
    ga_day_matched: bool = True


@dataclass(frozen=True)
class TransformsConfig:
    skew_threshold: float = 0.5
    dcor_max_n: int = 1500
    dcor_seed: int = 0
    exclusion_threshold: float = 0.8
    max_per_group: int = 3


@dataclass(frozen=True)
class GPConfig:
    base_alpha: float = 0.01
    restarts: int = 3
    maxiter: int = 60
    lengthscale_per_dim: bool = False
    signal_min: float = 1e-4
    signal_max: float = 100.0
    lengthscale_min: float = 0.01
    lengthscale_max: float = 100.0
    noise_min: float = 1e-8
    noise_max: float = 1.0

    def bounds(self) -> GPBounds:
        return GPBounds(
            signal=(self.signal_min, self.signal_max),
            lengthscale=(self.lengthscale_min, self.lengthscale_max),
            noise=(self.noise_min, self.noise_max),
        )


@dataclass(frozen=True)
class TrainConfig:
    n: int = 1500
    k: int = 5
    features: tuple[str, ...] = ()  # empty: first k of the selection ordering
    seed: int = 0


@dataclass(frozen=True)
class EvalConfig:
    n: int = 1500
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    restarts: int = 1
    maxiter: int = 15
    include_noise: bool = True
    sizes: tuple[int, ...] = (250, 500, 1000, 1500, 2000, 2500, 3000)
    ks: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8, 9)


@dataclass(frozen=True)
class GridConfig:
    resolution: int = 50
    extend_fraction: float = 0.25
    pairs: bool = True


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    cleaning: CleaningConfig = field(default_factory=CleaningConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    features: FeaturesConfig = field(default_factory=FeaturesConfig)
    transforms: TransformsConfig = field(default_factory=TransformsConfig)
    gp: GPConfig = field(default_factory=GPConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    grid: GridConfig = field(default_factory=GridConfig)

    def to_dict(self) -> dict:
        out: dict = {}
        for sec_field in fields(self):
            sec = getattr(self, sec_field.name)
            sec_d = {}
            for f in fields(sec):
                v = getattr(sec, f.name)
                sec_d[f.name] = _to_jsonable(v)
            out[sec_field.name] = sec_d
        return out

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _to_jsonable(v):
    if isinstance(v, date):
        return v.isoformat()
    if isinstance(v, tuple):
        return list(v)
    return v


# ---------------------------------------------------------------------------
# parsing


def _parse_value(raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, date):
            return date.fromisoformat(raw)
        if isinstance(default, tuple):
            if not raw:
                return ()
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if default and isinstance(default[0], int):
                return tuple(int(p) for p in parts)
            return tuple(parts)
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse {raw!r}: {exc}") from exc


_SECTIONS = {
    "scenario": ScenarioConfig,
    "cleaning": CleaningConfig,
    "calibration": CalibrationConfig,
    "features": FeaturesConfig,
    "transforms": TransformsConfig,
    "gp": GPConfig,
    "train": TrainConfig,
    "eval": EvalConfig,
    "grid": GridConfig,
}


def load_config(path: str | Path | None = None, env: dict | None = None) -> RunConfig:
    """Defaults, overlaid by the INI file, overlaid by environment variables."""
    values: dict[str, dict] = {name: {} for name in _SECTIONS}
    defaults = {name: cls() for name, cls in _SECTIONS.items()}

    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        text = Path(path).read_text()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]")
            sec_fields = {f.name for f in fields(defaults[section])}
            for key, raw in parser.items(section):
                if key not in sec_fields:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                values[section][key] = _parse_value(raw, getattr(defaults[section], key))

    if env is None:
        import os

        env = dict(os.environ)
    for name, raw in sorted(env.items()):
        if not name.startswith(ENV_PREFIX + "_"):
            continue
        parts = name.split("_", 2)
        if len(parts) != 3:
            raise ConfigError(f"malformed override {name}")
        section, key = parts[1].lower(), parts[2].lower()
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section in override {name}")
        sec_fields = {f.name for f in fields(defaults[section])}
        if key not in sec_fields:
            raise ConfigError(f"unknown key in override {name}")
        values[section][key] = _parse_value(raw, getattr(defaults[section], key))

    sections = {
        name: cls(**values[name]) for name, cls in _SECTIONS.items()
    }
    return RunConfig(**sections)


def reference_text() -> str:
    """A complete INI file with every key at its default, for `errmap config`."""
    lines = [
        "# Every key with its default value.  Any subset may appear in a config",
        "# file; environment variables ERRMAP_<SECTION>_<KEY> override both.",
        "",
    ]
    cfg = RunConfig()
    for name in _SECTIONS:
        lines.append(f"[{name}]")
        sec = getattr(cfg, name)
        for f in fields(sec):
            v = getattr(sec, f.name)
            if isinstance(v, date):
                v = v.isoformat()
            elif isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        lines.append("")
    return "\n".join(lines)
