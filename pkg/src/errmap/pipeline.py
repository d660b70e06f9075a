"""Artifact pipeline: synth, clean, calibrate, build-ve, select, train,
eval, grid.

Stages communicate only through files under the output directory.  Each
stage records a meta file with the configuration hash and the SHA-256 of
everything it read and wrote; a stage is fresh when its meta matches the
current configuration, its recorded inputs, and its outputs on disk.
Running the pipeline re-executes exactly the stale suffix of the chain;
editing an artifact by hand invalidates every stage that consumed it.

Identical (configuration, seed) runs produce byte-identical artifacts: no
timestamps, no absolute paths, floats via repr, JSON sorted.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from . import __version__, gp
from .calibration import (
    CalibrationResult,
    calibrate_window,
    derive_bills,
    non_heating_months,
)
from .cleaning import apply_cleaning, clean_measurements
from .config import RunConfig
from .district import (
    BuildingParams,
    DistrictScenario,
    build_scenario,
    synthesize_measurements,
)
from .errors import DependencyError, InputError, MissingDataError
from .evaluation import (
    EvalOptions,
    EvalReport,
    extrapolation_eval,
    interpolation_eval,
    sweep_features,
    sweep_size,
)
from .features import feature_groups
from .grids import structure_report, write_grid_csv
from .io import (
    read_json,
    read_mask_csv,
    read_measurements_csv,
    read_weather_csv,
    sha256_file,
    write_json,
    write_mask_csv,
    write_measurements_csv,
    write_weather_csv,
)
from .series import CalendarWindow, HeatingSeason
from .transforms import TransformSpec, fit_transforms, order_features, select_features
from .ve import build_dataset, enumerate_windows, read_dataset, season_span, write_dataset

STAGE_ORDER = ("synth", "clean", "calibrate", "build-ve", "select", "train", "eval", "grid")


@dataclass(frozen=True)
class Workspace:
    out_dir: Path

    @classmethod
    def at(cls, out_dir: str | Path) -> "Workspace":
        return cls(Path(out_dir))

    def path(self, rel: str) -> Path:
        return self.out_dir / rel

    def meta_path(self, stage: str) -> Path:
        return self.out_dir / f"{stage}.meta.json"

    def measurement_paths(self) -> list[Path]:
        return sorted(self.out_dir.glob("measurements/*.csv"))

    def mask_paths(self) -> list[Path]:
        return sorted(self.out_dir.glob("masks/*.csv"))

    def calibration_paths(self) -> list[Path]:
        return sorted(self.out_dir.glob("calibration/*.json"))


# ---------------------------------------------------------------------------
# shared loading helpers


def _scenario(cfg: RunConfig) -> DistrictScenario:
    s = cfg.scenario
    return build_scenario(
        seed=s.seed,
        start=s.start_date,
        days=s.days,
        n_substations=s.substations,
        mult_sigma=s.mult_noise,
        occupancy_level=s.occupancy_level,
        distortion_level=s.distortion_level,
        spike_rate=s.spike_rate,
        plateau_rate=s.plateau_rate,
        dropout_rate=s.dropout_rate,
        mean_temp=s.mean_temp_c,
        seasonal_amp=s.seasonal_amp_c,
        diurnal_amp=s.diurnal_amp_c,
        weather_sigma=s.weather_noise_c,
        peak_ghi=s.peak_ghi_wm2,
    )


def _district_meta(ws: Workspace) -> dict:
    return read_json(ws.path("district.json"))


def _seasons_from_meta(meta: dict) -> tuple[HeatingSeason, ...]:
    return tuple(
        HeatingSeason(
            s["label"], date.fromisoformat(s["first_date"]), date.fromisoformat(s["last_date"])
        )
        for s in meta["seasons"]
    )


def _load_cleaned(ws: Workspace) -> dict:
    """Measurements with their masks applied, keyed by substation id."""
    masks = {}
    for p in ws.mask_paths():
        sub_id, mask = read_mask_csv(p)
        masks[sub_id] = mask
    out = {}
    for p in ws.measurement_paths():
        sub_id, meas = read_measurements_csv(p)
        if sub_id not in masks:
            raise DependencyError(f"no mask for substation {sub_id}")
        out[sub_id] = apply_cleaning(meas, masks[sub_id])
    if not out:
        raise DependencyError("no measurement files; run the synth stage first")
    return out


def load_model(ws: Workspace):
    """Rebuild the trained model from its artifact.

    Returns (model, transform spec, features, training-row weights).
    """
    doc = read_json(ws.path("model.json"))
    ds_path = ws.path(doc["dataset"]["path"])
    if not ds_path.exists():
        raise DependencyError("the dataset referenced by the model is missing")
    if sha256_file(ds_path) != doc["dataset"]["sha256"]:
        raise DependencyError("the dataset changed since the model was trained")
    dataset = read_dataset(ds_path)
    features = list(doc["features"])
    rows = np.array(doc["rows"], dtype=int)
    spec = TransformSpec.from_dict(doc["transforms"])
    cols = [dataset.feature_names.index(f) for f in features]
    X_raw = dataset.X()[np.ix_(rows, cols)]
    y_raw = dataset.y()[rows]
    Xt = spec.transform_X(X_raw, features)
    yt = np.asarray(spec.transform_y(y_raw))
    alpha = np.array(doc["alpha"], dtype=float)
    params = gp.KernelParams(
        signal_variance=doc["kernel"]["signal_variance"],
        lengthscales=np.array(doc["kernel"]["lengthscales"], dtype=float),
        noise_variance=doc["kernel"]["noise_variance"],
    )
    model = gp.rebuild(Xt, yt, alpha, params)
    weights = dataset.weights()[rows]
    return model, spec, features, weights


# ---------------------------------------------------------------------------
# stages


def _stage_synth(cfg: RunConfig, ws: Workspace) -> tuple[list[Path], list[Path]]:
    scenario = _scenario(cfg)
    meas = synthesize_measurements(scenario)
    (ws.out_dir / "measurements").mkdir(parents=True, exist_ok=True)
    outputs = []
    for sub in scenario.substations:
        p = ws.path(f"measurements/{sub.id}.csv")
        write_measurements_csv(p, sub.id, meas[sub.id])
        outputs.append(p)
    wp = ws.path("weather.csv")
    write_weather_csv(wp, scenario.weather_temp, scenario.weather_ghi)
    outputs.append(wp)
    meta = {
        "seed": cfg.scenario.seed,
        "start_date": cfg.scenario.start_date.isoformat(),
        "days": cfg.scenario.days,
        "substations": {
            sub.id: {"floor_area": sub.params.floor_area} for sub in scenario.substations
        },
        "seasons": [
            {
                "label": s.label,
                "first_date": s.first_date.isoformat(),
                "last_date": s.last_date.isoformat(),
            }
            for s in scenario.seasons
        ],
    }
    dp = ws.path("district.json")
    write_json(dp, meta)
    outputs.append(dp)
    return [], outputs


def _stage_clean(cfg: RunConfig, ws: Workspace) -> tuple[list[Path], list[Path]]:
    inputs = ws.measurement_paths() + [ws.path("weather.csv"), ws.path("district.json")]
    if not ws.measurement_paths():
        raise DependencyError("no measurement files; run the synth stage first")
    temp, _ = read_weather_csv(ws.path("weather.csv"))
    seasons = _seasons_from_meta(_district_meta(ws))
    (ws.out_dir / "masks").mkdir(parents=True, exist_ok=True)
    outputs = []
    report_doc = {}
    for p in ws.measurement_paths():
        sub_id, meas = read_measurements_csv(p)
        report = clean_measurements(
            meas,
            temp,
            seasons,
            sigma_window_days=cfg.cleaning.sigma_window_days,
            consistency_tol=cfg.cleaning.consistency_tol,
            power_floor_kw=cfg.cleaning.power_floor_kw,
            r_min=cfg.cleaning.r_min,
            hdd_base_c=cfg.features.hdd_base_c,
        )
        mp = ws.path(f"masks/{sub_id}.csv")
        write_mask_csv(mp, sub_id, report.mask)
        outputs.append(mp)
        report_doc[sub_id] = {
            "n_outlier": report.n_outlier,
            "n_inconsistent": report.n_inconsistent,
            "n_atypical": report.n_atypical,
            "screens": [
                {
                    "label": s.label,
                    "kept": s.kept,
                    "reason": s.reason,
                    "r": s.r,
                    "n_days": s.n_days,
                }
                for s in report.screens
            ],
        }
    rp = ws.path("cleaning_report.json")
    write_json(rp, report_doc)
    outputs.append(rp)
    return inputs, outputs


def _base_params(floor_area: float) -> BuildingParams:
    """Neutral starting point; every calibratable field is overwritten by
    sampling, so only the metadata fields matter here."""
    return BuildingParams(
        ua=3000.0,
        capacitance=6.0e8,
        floor_area=floor_area,
        setpoint_day=20.0,
        setpoint_night=17.0,
        night_start=22,
        night_end=6,
        solar_aperture=30.0,
        dhw_daily_kwh=50.0,
        max_heat_power=1000.0,
    )


def _stage_calibrate(cfg: RunConfig, ws: Workspace) -> tuple[list[Path], list[Path]]:
    inputs = (
        ws.measurement_paths()
        + ws.mask_paths()
        + [ws.path("weather.csv"), ws.path("district.json")]
    )
    temp, ghi = read_weather_csv(ws.path("weather.csv"))
    meta = _district_meta(ws)
    seasons = _seasons_from_meta(meta)
    start = date.fromisoformat(meta["start_date"])
    days = int(meta["days"])
    months = non_heating_months(start, days, seasons)
    if not months:
        raise InputError("no non-heating month in the span; cannot derive bills")
    cleaned = _load_cleaned(ws)
    ranges = cfg.calibration.ranges()

    (ws.out_dir / "calibration").mkdir(parents=True, exist_ok=True)
    outputs = []
    log: dict[str, list] = {"skipped_windows": [], "calibrated": []}
    for sub_idx, sub_id in enumerate(sorted(cleaned)):
        power = cleaned[sub_id].power
        bills = derive_bills(power, months)
        base = _base_params(meta["substations"][sub_id]["floor_area"])
        win_idx = 0
        for season in seasons:
            span = season_span(season, start, days)
            if span is None:
                continue
            for window in enumerate_windows(span[0], span[1], stride_days=7):
                seed = cfg.calibration.seed * 1_000_000 + sub_idx * 1_000 + win_idx
                win_idx += 1
                try:
                    result = calibrate_window(
                        power,
                        temp,
                        ghi,
                        window,
                        ranges,
                        base,
                        bills,
                        months,
                        n_candidates=cfg.calibration.candidates,
                        seed=seed,
                        max_missing_days=cfg.calibration.max_missing_days,
                    )
                except MissingDataError as exc:
                    log["skipped_windows"].append(
                        [sub_id, window.start_date.isoformat(), str(exc)]
                    )
                    continue
                p = ws.path(f"calibration/{sub_id}_{window.start_date.isoformat()}.json")
                write_json(p, _calibration_to_dict(sub_id, result))
                outputs.append(p)
                log["calibrated"].append([sub_id, window.start_date.isoformat()])
    lp = ws.path("calibration_log.json")
    write_json(lp, log)
    outputs.append(lp)
    return inputs, outputs


def _calibration_to_dict(sub_id: str, r: CalibrationResult) -> dict:
    return {
        "substation_id": sub_id,
        "window": {
            "start": r.window.start_date.isoformat(),
            "days": r.window.length_days,
        },
        "params": {
            "ua": r.params.ua,
            "capacitance": r.params.capacitance,
            "floor_area": r.params.floor_area,
            "setpoint_day": r.params.setpoint_day,
            "setpoint_night": r.params.setpoint_night,
            "night_start": r.params.night_start,
            "night_end": r.params.night_end,
            "solar_aperture": r.params.solar_aperture,
            "dhw_daily_kwh": r.params.dhw_daily_kwh,
            "max_heat_power": r.params.max_heat_power,
        },
        "calibration_error": r.calibration_error,
        "candidate_count": r.candidate_count,
    }


def _calibration_from_dict(doc: dict) -> tuple[str, CalibrationResult]:
    params = BuildingParams(**doc["params"])
    window = CalendarWindow(date.fromisoformat(doc["window"]["start"]), doc["window"]["days"])
    return doc["substation_id"], CalibrationResult(
        window=window,
        params=params,
        calibration_error=doc["calibration_error"],
        candidate_count=doc["candidate_count"],
    )


def _stage_build_ve(cfg: RunConfig, ws: Workspace) -> tuple[list[Path], list[Path]]:
    inputs = (
        ws.measurement_paths()
        + ws.mask_paths()
        + ws.calibration_paths()
        + [ws.path("weather.csv"), ws.path("district.json")]
    )
    temp, ghi = read_weather_csv(ws.path("weather.csv"))
    meta = _district_meta(ws)
    seasons = _seasons_from_meta(meta)
    cleaned = _load_cleaned(ws)
    calibrations = {}
    for p in ws.calibration_paths():
        sub_id, result = _calibration_from_dict(read_json(p))
        calibrations[(sub_id, result.window.start_date)] = result
    if not calibrations:
        raise DependencyError("no calibration results to build from")
    floor_areas = {k: v["floor_area"] for k, v in meta["substations"].items()}
    dataset, log = build_dataset(
        cleaned,
        temp,
        ghi,
        seasons,
        calibrations,
        floor_areas,
        data_start=date.fromisoformat(meta["start_date"]),
        data_days=int(meta["days"]),
        max_missing_days=cfg.calibration.max_missing_days,
        hdd_base_c=cfg.features.hdd_base_c,
        ga_day_matched=cfg.features.ga_day_matched,
        provenance={
            "config_hash": cfg.hash(),
            "seed": cfg.scenario.seed,
            "version": __version__,
        },
    )
    prov = dict(dataset.provenance)
    prov["build_log"] = log.summary()
    dataset = type(dataset)(dataset.samples, dataset.feature_names, prov)
    dp = ws.path("ve_dataset.csv")
    write_dataset(dataset, dp)
    return inputs, [dp, ws.path("ve_dataset.meta.json")]


def _stage_select(cfg: RunConfig, ws: Workspace) -> tuple[list[Path], list[Path]]:
    inputs = [ws.path("ve_dataset.csv"), ws.path("ve_dataset.meta.json")]
    dataset = read_dataset(ws.path("ve_dataset.csv"))
    names = list(dataset.feature_names)
    spec = fit_transforms(
        dataset.X(), names, dataset.y(), skew_threshold=cfg.transforms.skew_threshold
    )
    Xt = spec.transform_X(dataset.X(), names)
    yt = np.asarray(spec.transform_y(dataset.y()))
    report = select_features(
        Xt,
        names,
        feature_groups(),
        yt,
        max_per_group=cfg.transforms.max_per_group,
        exclusion_threshold=cfg.transforms.exclusion_threshold,
        max_n=cfg.transforms.dcor_max_n,
        subsample_seed=cfg.transforms.dcor_seed,
    )
    sp = ws.path("selection.json")
    report.to_json(sp)
    return inputs, [sp]


def _train_features(cfg: RunConfig, ws: Workspace) -> list[str]:
    if cfg.train.features:
        return list(cfg.train.features)
    from .transforms import SelectionReport

    report = SelectionReport.from_json(ws.path("selection.json"))
    return order_features(report, cfg.train.k)


def _stage_train(cfg: RunConfig, ws: Workspace) -> tuple[list[Path], list[Path]]:
    inputs = [
        ws.path("ve_dataset.csv"),
        ws.path("ve_dataset.meta.json"),
        ws.path("selection.json"),
    ]
    dataset = read_dataset(ws.path("ve_dataset.csv"))
    features = _train_features(cfg, ws)
    unknown = [f for f in features if f not in dataset.feature_names]
    if unknown:
        raise InputError(f"unknown features: {unknown}")
    N = len(dataset)
    n = min(cfg.train.n, N)
    if n < 2:
        raise InputError("not enough samples to train")
    if n < N:
        rng = np.random.default_rng(np.random.SeedSequence((cfg.train.seed, 808)))
        rows = np.sort(rng.choice(N, size=n, replace=False))
    else:
        rows = np.arange(N)

    cols = [dataset.feature_names.index(f) for f in features]
    X_raw = dataset.X()[np.ix_(rows, cols)]
    y_raw = dataset.y()[rows]
    spec = fit_transforms(
        X_raw, features, y_raw, skew_threshold=cfg.transforms.skew_threshold, row_ids=rows
    )
    Xt = spec.transform_X(X_raw, features)
    yt = np.asarray(spec.transform_y(y_raw))
    alpha = gp.alpha_from_weights(dataset.weights()[rows], base_alpha=cfg.gp.base_alpha)
    model = gp.fit(
        Xt,
        yt,
        alpha,
        bounds=cfg.gp.bounds(),
        restarts=cfg.gp.restarts,
        seed=cfg.train.seed,
        maxiter=cfg.gp.maxiter,
        lengthscale_per_dim=cfg.gp.lengthscale_per_dim,
    )
    doc = {
        "features": features,
        "rows": [int(i) for i in rows],
        "transforms": spec.to_dict(),
        "kernel": {
            "signal_variance": model.params.signal_variance,
            "lengthscales": [float(v) for v in model.params.lengthscales],
            "noise_variance": model.params.noise_variance,
        },
        "bounds": cfg.gp.bounds().to_dict(),
        "alpha": [float(a) for a in alpha],
        "base_alpha": cfg.gp.base_alpha,
        "lml": model.lml,
        "jitter": model.jitter,
        "dataset": {
            "path": "ve_dataset.csv",
            "sha256": sha256_file(ws.path("ve_dataset.csv")),
        },
        "config_hash": cfg.hash(),
        "seed": cfg.train.seed,
        "version": __version__,
    }
    mp = ws.path("model.json")
    write_json(mp, doc)
    return inputs, [mp]


def _eval_options(cfg: RunConfig) -> EvalOptions:
    return EvalOptions(
        base_alpha=cfg.gp.base_alpha,
        restarts=cfg.eval.restarts,
        maxiter=cfg.eval.maxiter,
        skew_threshold=cfg.transforms.skew_threshold,
        lengthscale_per_dim=cfg.gp.lengthscale_per_dim,
        include_noise=cfg.eval.include_noise,
        bounds=cfg.gp.bounds(),
    )


def _aggregate(reports: list[EvalReport]) -> dict:
    out = {}
    for metric in ("mse", "nlpd", "coverage95", "rmse_raw", "mae_raw"):
        vals = np.array([getattr(r, metric) for r in reports])
        out[metric] = {"mean": float(vals.mean()), "std": float(vals.std())}
    return out


_EVAL_CSV_HEADER = "split,seed,fold,n_train,n_val,mse,nlpd,coverage95,rmse_raw,mae_raw"


def _eval_csv_rows(reports: list[EvalReport]) -> list[str]:
    rows = []
    for r in reports:
        rows.append(
            ",".join(
                [
                    r.split,
                    str(r.seed),
                    "overall",
                    str(r.n),
                    str(sum(f.n_val for f in r.folds)),
                    repr(r.mse),
                    repr(r.nlpd),
                    repr(r.coverage95),
                    repr(r.rmse_raw),
                    repr(r.mae_raw),
                ]
            )
        )
        for f in r.folds:
            rows.append(
                ",".join(
                    [
                        r.split,
                        str(r.seed),
                        f.fold,
                        str(f.n_train),
                        str(f.n_val),
                        repr(f.mse),
                        repr(f.nlpd),
                        repr(f.coverage95),
                        repr(f.rmse_raw),
                        repr(f.mae_raw),
                    ]
                )
            )
    return rows


def _stage_eval(cfg: RunConfig, ws: Workspace) -> tuple[list[Path], list[Path]]:
    inputs = [
        ws.path("ve_dataset.csv"),
        ws.path("ve_dataset.meta.json"),
        ws.path("model.json"),
    ]
    dataset = read_dataset(ws.path("ve_dataset.csv"))
    features = list(read_json(ws.path("model.json"))["features"])
    opts = _eval_options(cfg)
    seeds = list(cfg.eval.seeds)
    interp = [
        interpolation_eval(dataset, cfg.eval.n, features, seed=s, opts=opts) for s in seeds
    ]
    extrap = [
        extrapolation_eval(dataset, cfg.eval.n, features, seed=s, opts=opts) for s in seeds
    ]
    outputs = []
    for name, reports in (("interpolation", interp), ("extrapolation", extrap)):
        p = ws.path(f"eval_{name}.json")
        write_json(
            p,
            {
                "split": name,
                "n": cfg.eval.n,
                "features": features,
                "seeds": seeds,
                "aggregate": _aggregate(reports),
                "reports": [r.to_dict() for r in reports],
            },
        )
        outputs.append(p)
    sp = ws.path("eval_summary.csv")
    lines = [_EVAL_CSV_HEADER] + _eval_csv_rows(interp) + _eval_csv_rows(extrap)
    sp.write_text("\n".join(lines) + "\n")
    outputs.append(sp)
    return inputs, outputs


def _stage_grid(cfg: RunConfig, ws: Workspace) -> tuple[list[Path], list[Path]]:
    inputs = [ws.path("ve_dataset.csv"), ws.path("model.json")]
    model, spec, features, weights = load_model(ws)
    (ws.out_dir / "grids").mkdir(parents=True, exist_ok=True)
    grids = structure_report(
        model,
        spec,
        features,
        weights=weights,
        resolution=cfg.grid.resolution,
        extend_fraction=cfg.grid.extend_fraction,
        pairs=cfg.grid.pairs,
    )
    outputs = []
    for axes, grid in grids.items():
        name = "__".join(axes)
        p = ws.path(f"grids/{name}.csv")
        write_grid_csv(grid, p)
        outputs.append(p)
    return inputs, outputs


_STAGES = {
    "synth": (_stage_synth, ()),
    "clean": (_stage_clean, ("synth",)),
    "calibrate": (_stage_calibrate, ("synth", "clean")),
    "build-ve": (_stage_build_ve, ("synth", "clean", "calibrate")),
    "select": (_stage_select, ("build-ve",)),
    "train": (_stage_train, ("build-ve", "select")),
    "eval": (_stage_eval, ("build-ve", "train")),
    "grid": (_stage_grid, ("build-ve", "train")),
}


# ---------------------------------------------------------------------------
# freshness and orchestration


def _hash_paths(ws: Workspace, paths: list[Path]) -> dict[str, str]:
    out = {}
    for p in paths:
        if not p.exists():
            raise DependencyError(f"required input missing: {p.name}")
        out[str(p.relative_to(ws.out_dir))] = sha256_file(p)
    return dict(sorted(out.items()))


def stage_fresh(cfg: RunConfig, ws: Workspace, stage: str) -> bool:
    """A stage is fresh when config, inputs, and outputs all match its meta."""
    meta_path = ws.meta_path(stage)
    if not meta_path.exists():
        return False
    meta = read_json(meta_path)
    if meta.get("config_hash") != cfg.hash():
        return False
    for rel, digest in meta.get("inputs", {}).items():
        p = ws.path(rel)
        if not p.exists() or sha256_file(p) != digest:
            return False
    outputs = meta.get("outputs", {})
    if not outputs:
        return False
    for rel, digest in outputs.items():
        p = ws.path(rel)
        if not p.exists() or sha256_file(p) != digest:
            return False
    return True


def run_stage(cfg: RunConfig, out_dir: str | Path, stage: str) -> None:
    """Run one stage unconditionally; its upstream artifacts must exist."""
    if stage not in _STAGES:
        raise InputError(f"unknown stage {stage!r}")
    ws = Workspace.at(out_dir)
    ws.out_dir.mkdir(parents=True, exist_ok=True)
    fn, _ = _STAGES[stage]
    try:
        inputs, outputs = fn(cfg, ws)
    except FileNotFoundError as exc:
        raise DependencyError(
            f"stage {stage!r} needs {Path(exc.filename).name}; run its upstream stages first"
        ) from exc
    meta = {
        "stage": stage,
        "config_hash": cfg.hash(),
        "version": __version__,
        "inputs": _hash_paths(ws, inputs),
        "outputs": _hash_paths(ws, outputs),
    }
    write_json(ws.meta_path(stage), meta)


def run_pipeline(
    cfg: RunConfig, out_dir: str | Path, upto: str = "grid"
) -> dict[str, str]:
    """Run the stale part of the chain through ``upto``.

    Returns stage -> "ran" | "fresh".
    """
    if upto not in STAGE_ORDER:
        raise InputError(f"unknown stage {upto!r}")
    ws = Workspace.at(out_dir)
    ws.out_dir.mkdir(parents=True, exist_ok=True)
    statuses: dict[str, str] = {}
    for stage in STAGE_ORDER:
        if stage_fresh(cfg, ws, stage):
            statuses[stage] = "fresh"
        else:
            run_stage(cfg, out_dir, stage)
            statuses[stage] = "ran"
        if stage == upto:
            break
    return statuses


# ---------------------------------------------------------------------------
# sweeps (explicit commands, not cached stages)


def _selection_ordering(ws: Workspace) -> list[str]:
    from .transforms import SelectionReport

    p = ws.path("selection.json")
    if not p.exists():
        raise DependencyError("selection.json missing; run the select stage first")
    return list(SelectionReport.from_json(p).ordering)


_SWEEP_CSV_FIELDS = ("mse", "nlpd", "coverage95", "rmse_raw", "mae_raw")


def _write_sweep(ws: Workspace, name: str, axis: str, result) -> list[Path]:
    rows = result.to_rows()
    header = ["split", axis, "seed", "fold", *_SWEEP_CSV_FIELDS]
    lines = [",".join(header)]
    for r in rows:
        lines.append(
            ",".join(
                [
                    r["split"],
                    str(r[axis]),
                    str(r["seed"]),
                    r["fold"],
                    *(repr(r[f]) for f in _SWEEP_CSV_FIELDS),
                ]
            )
        )
    cp = ws.path(f"{name}.csv")
    cp.write_text("\n".join(lines) + "\n")
    doc = {
        "axis": axis,
        "points": [
            {
                "value": p.value,
                "summary": {
                    split: {
                        metric: dict(
                            zip(("mean", "std"), p.metric_summary(split, metric))
                        )
                        for metric in _SWEEP_CSV_FIELDS
                    }
                    for split in p.reports
                },
            }
            for p in result.points
        ],
    }
    jp = ws.path(f"{name}.json")
    write_json(jp, doc)
    return [cp, jp]


def run_sweep_size(
    cfg: RunConfig,
    out_dir: str | Path,
    sizes: list[int] | None = None,
    n_features: int = 3,
) -> list[Path]:
    """Training-size sweep using the first features of the selection ordering."""
    ws = Workspace.at(out_dir)
    dataset = read_dataset(ws.path("ve_dataset.csv"))
    features = _selection_ordering(ws)[:n_features]
    result = sweep_size(
        dataset,
        sizes or list(cfg.eval.sizes),
        features,
        seeds=list(cfg.eval.seeds),
        opts=_eval_options(cfg),
    )
    return _write_sweep(ws, "sweep_size", "n", result)


def run_sweep_features(
    cfg: RunConfig,
    out_dir: str | Path,
    ks: list[int] | None = None,
    n: int | None = None,
) -> list[Path]:
    """Feature-count sweep along the selection ordering at fixed size."""
    ws = Workspace.at(out_dir)
    dataset = read_dataset(ws.path("ve_dataset.csv"))
    ordering = _selection_ordering(ws)
    result = sweep_features(
        dataset,
        ordering,
        ks or list(cfg.eval.ks),
        n if n is not None else cfg.eval.n,
        seeds=list(cfg.eval.seeds),
        opts=_eval_options(cfg),
    )
    return _write_sweep(ws, "sweep_features", "k", result)
