"""Predictive evaluation: interpolation and extrapolation protocols.

Interpolation draws two disjoint random row sets of size n (train and
validation) from the dataset.  Extrapolation leaves one substation out per
fold: the model trains on up to n rows from the other substations and is
validated on the held-out one, every substation taking its turn.  Overall
extrapolation metrics pool the per-fold predictions; per-fold extremes are
reported alongside.

Transforms and hyperparameters are always fitted on the training rows only;
the fit-audit hooks record which rows each fit saw.  Metrics live in the
transformed/scaled target space, with back-transformed error summaries next
to them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import gp
from .audit import record_fit
from .errors import InputError
from .gp import GPBounds, GPModel, PredictiveDistribution
from .transforms import TransformSpec, fit_transforms
from .ve import VEDataset

Z95 = 1.959964  # two-sided 95% normal quantile
LOG_2PI = math.log(2.0 * math.pi)


def _as_arrays(
    predictions: Sequence[PredictiveDistribution] | tuple[np.ndarray, np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(predictions, tuple):
        mean, std = predictions
        return np.asarray(mean, dtype=float), np.asarray(std, dtype=float)
    return (
        np.array([p.mean for p in predictions]),
        np.array([p.std for p in predictions]),
    )


def nlpd(
    predictions: Sequence[PredictiveDistribution] | tuple[np.ndarray, np.ndarray],
    observed: np.ndarray,
) -> float:
    """Mean negative log predictive density under the Gaussian predictions."""
    mean, std = _as_arrays(predictions)
    t = np.asarray(observed, dtype=float)
    if mean.shape != t.shape or std.shape != t.shape:
        raise InputError("predictions and observations must align")
    if t.size == 0:
        raise InputError("nothing to score")
    if np.any(std <= 0):
        raise InputError("predictive deviations must be positive")
    var = std * std
    return float(np.mean(0.5 * (LOG_2PI + np.log(var)) + (t - mean) ** 2 / (2.0 * var)))


def mse(
    predictions: Sequence[PredictiveDistribution] | tuple[np.ndarray, np.ndarray],
    observed: np.ndarray,
) -> float:
    mean, _ = _as_arrays(predictions)
    t = np.asarray(observed, dtype=float)
    if mean.shape != t.shape or t.size == 0:
        raise InputError("predictions and observations must align")
    return float(np.mean((mean - t) ** 2))


def coverage95(
    predictions: Sequence[PredictiveDistribution] | tuple[np.ndarray, np.ndarray],
    observed: np.ndarray,
) -> float:
    """Fraction of observations inside the central 95% predictive interval."""
    mean, std = _as_arrays(predictions)
    t = np.asarray(observed, dtype=float)
    if mean.shape != t.shape or t.size == 0:
        raise InputError("predictions and observations must align")
    return float(np.mean(np.abs(t - mean) <= Z95 * std))


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class EvalOptions:
    base_alpha: float = 0.01
    restarts: int = 2
    maxiter: int = 40
    skew_threshold: float = 0.5
    lengthscale_per_dim: bool = False
    include_noise: bool = True
    bounds: GPBounds = field(default_factory=GPBounds)


@dataclass(frozen=True)
class FoldReport:
    fold: str
    n_train: int
    n_val: int
    n_val_dropped: int
    mse: float
    nlpd: float
    coverage95: float
    rmse_raw: float
    mae_raw: float
    train_rows: tuple[int, ...]
    val_rows: tuple[int, ...]

    def metrics_dict(self) -> dict:
        return {
            "mse": self.mse,
            "nlpd": self.nlpd,
            "coverage95": self.coverage95,
            "rmse_raw": self.rmse_raw,
            "mae_raw": self.mae_raw,
        }


@dataclass(frozen=True)
class EvalReport:
    split: str  # "interpolation" | "extrapolation"
    seed: int
    n: int
    features: tuple[str, ...]
    mse: float
    nlpd: float
    coverage95: float
    rmse_raw: float
    mae_raw: float
    folds: tuple[FoldReport, ...]

    def fold_range(self, metric: str) -> tuple[float, float]:
        vals = [f.metrics_dict()[metric] for f in self.folds]
        return (min(vals), max(vals))

    def summary_table(self) -> dict:
        """Overall plus per-fold extremes for each headline metric."""
        out = {}
        for metric in ("mse", "coverage95", "nlpd"):
            lo, hi = self.fold_range(metric)
            out[metric] = {
                "overall": getattr(self, metric),
                "min": lo,
                "max": hi,
            }
        return out

    def to_dict(self) -> dict:
        return {
            "split": self.split,
            "seed": self.seed,
            "n": self.n,
            "features": list(self.features),
            "mse": self.mse,
            "nlpd": self.nlpd,
            "coverage95": self.coverage95,
            "rmse_raw": self.rmse_raw,
            "mae_raw": self.mae_raw,
            "folds": [
                {
                    "fold": f.fold,
                    "n_train": f.n_train,
                    "n_val": f.n_val,
                    "n_val_dropped": f.n_val_dropped,
                    **f.metrics_dict(),
                    "train_rows": list(f.train_rows),
                    "val_rows": list(f.val_rows),
                }
                for f in self.folds
            ],
        }


# ---------------------------------------------------------------------------
# split machinery


def _feature_columns(dataset: VEDataset, features: Sequence[str]) -> np.ndarray:
    idx = []
    for f in features:
        if f not in dataset.feature_names:
            raise InputError(f"unknown feature {f!r}")
        idx.append(dataset.feature_names.index(f))
    return dataset.X()[:, idx]


def _fit_on_rows(
    X_raw: np.ndarray,
    y_raw: np.ndarray,
    weights: np.ndarray,
    features: Sequence[str],
    train_rows: np.ndarray,
    opts: EvalOptions,
    fit_seed: int,
) -> tuple[TransformSpec, GPModel]:
    spec = fit_transforms(
        X_raw[train_rows],
        list(features),
        y_raw[train_rows],
        skew_threshold=opts.skew_threshold,
        row_ids=train_rows,
    )
    Xt = spec.transform_X(X_raw[train_rows], list(features))
    yt = spec.transform_y(y_raw[train_rows])
    alpha = gp.alpha_from_weights(weights[train_rows], base_alpha=opts.base_alpha)
    record_fit("gp", train_rows)
    model = gp.fit(
        Xt,
        yt,
        alpha,
        bounds=opts.bounds,
        restarts=opts.restarts,
        seed=fit_seed,
        maxiter=opts.maxiter,
        lengthscale_per_dim=opts.lengthscale_per_dim,
    )
    return spec, model


def _score_rows(
    spec: TransformSpec,
    model: GPModel,
    X_raw: np.ndarray,
    y_raw: np.ndarray,
    features: Sequence[str],
    val_rows: np.ndarray,
    opts: EvalOptions,
    fold: str,
    train_rows: np.ndarray,
) -> tuple[FoldReport, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    Xv = spec.transform_X(X_raw[val_rows], list(features))
    ok = np.all(np.isfinite(Xv), axis=1)
    dropped = int(np.sum(~ok))
    val_used = val_rows[ok]
    Xv = Xv[ok]
    if Xv.shape[0] == 0:
        raise InputError(f"no scorable validation rows in fold {fold}")
    tv = np.asarray(spec.transform_y(y_raw[val_used]))
    mean, std = gp.predict(model, Xv, include_noise=opts.include_noise)

    mean_raw = np.asarray(spec.invert_y(mean))
    y_val_raw = y_raw[val_used]
    with np.errstate(invalid="ignore"):
        rmse_raw = float(np.sqrt(np.nanmean((mean_raw - y_val_raw) ** 2)))
        mae_raw = float(np.nanmean(np.abs(mean_raw - y_val_raw)))

    report = FoldReport(
        fold=fold,
        n_train=int(train_rows.size),
        n_val=int(val_used.size),
        n_val_dropped=dropped,
        mse=mse((mean, std), tv),
        nlpd=nlpd((mean, std), tv),
        coverage95=coverage95((mean, std), tv),
        rmse_raw=rmse_raw,
        mae_raw=mae_raw,
        train_rows=tuple(int(i) for i in train_rows),
        val_rows=tuple(int(i) for i in val_used),
    )
    return report, (mean, std, tv, mean_raw, y_val_raw)


def _pooled_report(
    split: str,
    seed: int,
    n: int,
    features: Sequence[str],
    folds: list[FoldReport],
    pooled: list[tuple[np.ndarray, ...]],
) -> EvalReport:
    mean = np.concatenate([p[0] for p in pooled])
    std = np.concatenate([p[1] for p in pooled])
    tv = np.concatenate([p[2] for p in pooled])
    mean_raw = np.concatenate([p[3] for p in pooled])
    y_raw = np.concatenate([p[4] for p in pooled])
    with np.errstate(invalid="ignore"):
        rmse_raw = float(np.sqrt(np.nanmean((mean_raw - y_raw) ** 2)))
        mae_raw = float(np.nanmean(np.abs(mean_raw - y_raw)))
    return EvalReport(
        split=split,
        seed=seed,
        n=n,
        features=tuple(features),
        mse=mse((mean, std), tv),
        nlpd=nlpd((mean, std), tv),
        coverage95=coverage95((mean, std), tv),
        rmse_raw=rmse_raw,
        mae_raw=mae_raw,
        folds=tuple(folds),
    )


def interpolation_eval(
    dataset: VEDataset,
    n: int,
    features: Sequence[str],
    seed: int = 0,
    opts: EvalOptions | None = None,
) -> EvalReport:
    """Random disjoint train/validation sets of equal size n."""
    opts = opts or EvalOptions()
    N = len(dataset)
    if n < 2:
        raise InputError("n must be at least 2")
    if N < 2 * n:
        raise InputError(f"need at least {2 * n} samples, have {N}")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 606)))
    perm = rng.permutation(N)
    train_rows = np.sort(perm[:n])
    val_rows = np.sort(perm[n:2 * n])

    X_raw = _feature_columns(dataset, features)
    y_raw = dataset.y()
    weights = dataset.weights()
    spec, model = _fit_on_rows(X_raw, y_raw, weights, features, train_rows, opts, seed)
    fold, pooled = _score_rows(
        spec, model, X_raw, y_raw, features, val_rows, opts, "random", train_rows
    )
    return _pooled_report("interpolation", seed, n, features, [fold], [pooled])


def extrapolation_eval(
    dataset: VEDataset,
    n: int,
    features: Sequence[str],
    seed: int = 0,
    opts: EvalOptions | None = None,
) -> EvalReport:
    """Leave-one-substation-out cross-validation.

    Folds run in sorted substation order, each with its own child seed, so
    reordering the dataset's rows cannot change the outcome.  Training rows
    are capped at n; oversized validation sets are subsampled to n.
    """
    opts = opts or EvalOptions()
    if n < 2:
        raise InputError("n must be at least 2")
    ids = np.array(dataset.substation_ids())
    unique = sorted(set(ids))
    if len(unique) < 2:
        raise InputError("extrapolation needs at least two substations")

    X_raw = _feature_columns(dataset, features)
    y_raw = dataset.y()
    weights = dataset.weights()

    folds: list[FoldReport] = []
    pooled: list[tuple[np.ndarray, ...]] = []
    for fold_idx, sub in enumerate(unique):
        held = np.flatnonzero(ids == sub)
        pool = np.flatnonzero(ids != sub)
        if pool.size < 2 or held.size == 0:
            raise InputError(f"fold {sub} has too few rows")
        rng = np.random.default_rng(np.random.SeedSequence((seed, 707, fold_idx)))
        take = min(n, pool.size)
        train_rows = np.sort(rng.choice(pool, size=take, replace=False))
        if held.size > n:
            val_rows = np.sort(rng.choice(held, size=n, replace=False))
        else:
            val_rows = held
        spec, model = _fit_on_rows(
            X_raw, y_raw, weights, features, train_rows, opts, seed * 1000 + fold_idx
        )
        fold, arrays = _score_rows(
            spec, model, X_raw, y_raw, features, val_rows, opts, sub, train_rows
        )
        folds.append(fold)
        pooled.append(arrays)
    return _pooled_report("extrapolation", seed, n, features, folds, pooled)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepPoint:
    value: int  # training size or feature count
    reports: dict[str, tuple[EvalReport, ...]]  # split -> one report per seed

    def metric_summary(self, split: str, metric: str) -> tuple[float, float]:
        vals = np.array([getattr(r, metric) for r in self.reports[split]])
        return float(vals.mean()), float(vals.std())


@dataclass(frozen=True)
class SweepResult:
    axis: str  # "n" | "k"
    points: tuple[SweepPoint, ...]

    def series(self, split: str, metric: str) -> tuple[list[int], list[float]]:
        xs = [p.value for p in self.points]
        ys = [p.metric_summary(split, metric)[0] for p in self.points]
        return xs, ys

    def to_rows(self) -> list[dict]:
        """Flat rows: one per (split, axis value, seed, fold)."""
        rows = []
        for p in self.points:
            for split, reports in sorted(p.reports.items()):
                for r in reports:
                    rows.append(
                        {
                            "split": split,
                            self.axis: p.value,
                            "seed": r.seed,
                            "fold": "overall",
                            "mse": r.mse,
                            "nlpd": r.nlpd,
                            "coverage95": r.coverage95,
                            "rmse_raw": r.rmse_raw,
                            "mae_raw": r.mae_raw,
                        }
                    )
                    for f in r.folds:
                        rows.append(
                            {
                                "split": split,
                                self.axis: p.value,
                                "seed": r.seed,
                                "fold": f.fold,
                                **f.metrics_dict(),
                            }
                        )
        return rows


def _run_splits(
    dataset: VEDataset,
    n: int,
    features: Sequence[str],
    seeds: Sequence[int],
    opts: EvalOptions,
    splits: Sequence[str],
) -> dict[str, tuple[EvalReport, ...]]:
    runners = {"interpolation": interpolation_eval, "extrapolation": extrapolation_eval}
    out: dict[str, tuple[EvalReport, ...]] = {}
    for split in splits:
        if split not in runners:
            raise InputError(f"unknown split {split!r}")
        out[split] = tuple(
            runners[split](dataset, n, features, seed=s, opts=opts) for s in seeds
        )
    return out


def sweep_size(
    dataset: VEDataset,
    sizes: Sequence[int],
    features: Sequence[str],
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
    opts: EvalOptions | None = None,
    splits: Sequence[str] = ("interpolation", "extrapolation"),
) -> SweepResult:
    """Training-set size sweep at a fixed feature set."""
    opts = opts or EvalOptions()
    points = [
        SweepPoint(int(n), _run_splits(dataset, int(n), features, seeds, opts, splits))
        for n in sizes
    ]
    return SweepResult("n", tuple(points))


def sweep_features(
    dataset: VEDataset,
    ordering: Sequence[str],
    ks: Sequence[int],
    n: int,
    seeds: Sequence[int] = (0, 1, 2, 3, 4),
    opts: EvalOptions | None = None,
    splits: Sequence[str] = ("extrapolation",),
) -> SweepResult:
    """Feature-count sweep along a fixed ordering at a fixed training size."""
    opts = opts or EvalOptions()
    for k in ks:
        if not 1 <= k <= len(ordering):
            raise InputError(f"k={k} outside the ordering")
    points = [
        SweepPoint(
            int(k),
            _run_splits(dataset, n, list(ordering[:k]), seeds, opts, splits),
        )
        for k in ks
    ]
    return SweepResult("k", tuple(points))
