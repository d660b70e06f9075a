"""Attribute transforms and dependence-based feature selection.

Skewed attributes get a shifted Box-Cox power transform (exponent found by
golden-section search on the profile log-likelihood), then every attribute
is min-max scaled to the unit interval of its training range.  Values seen
later may fall outside [0, 1]; scaling never clamps.

Selection ranks features by distance correlation with the transformed
target, keeps at most three per group, and refuses any feature that is
nearly a copy (pairwise distance correlation above a threshold) of one
already kept.  A balanced ordering interleaves the groups so that the first
k features always spread across them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .audit import record_fit
from .errors import InputError, RangeError

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# Box-Cox


def boxcox_shift(values: np.ndarray) -> float:
    """Shift making the data strictly positive with a tiny margin.

    max(0, eps - min) with eps a millionth of the data range, so positive
    data is untouched and shifted data starts at eps.
    """
    v = np.asarray(values, dtype=float)
    span = float(v.max() - v.min())
    eps = 1e-6 * span
    return max(0.0, eps - float(v.min()))


def boxcox_apply(x: np.ndarray | float, shift: float, lam: float) -> np.ndarray | float:
    """Shifted power transform; out-of-domain inputs (x + shift <= 0) -> NaN."""
    z = np.asarray(x, dtype=float) + shift
    with np.errstate(divide="ignore", invalid="ignore"):
        if lam == 0.0:
            out = np.where(z > 0.0, np.log(np.where(z > 0.0, z, 1.0)), np.nan)
        else:
            out = np.where(z > 0.0, (np.power(np.where(z > 0.0, z, 1.0), lam) - 1.0) / lam, np.nan)
    return out if np.ndim(x) else float(out)


def boxcox_invert(y: np.ndarray | float, shift: float, lam: float) -> np.ndarray | float:
    """Inverse of boxcox_apply; outputs NaN where the inverse does not exist."""
    yv = np.asarray(y, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        if lam == 0.0:
            z = np.exp(yv)
        else:
            base = lam * yv + 1.0
            z = np.where(base > 0.0, np.power(np.where(base > 0.0, base, 1.0), 1.0 / lam), np.nan)
    out = z - shift
    return out if np.ndim(y) else float(out)


def fit_boxcox_lambda(
    values: np.ndarray,
    shift: float,
    lam_lo: float = -5.0,
    lam_hi: float = 5.0,
    tol: float = 1e-6,
) -> float:
    """Golden-section maximum of the profile log-likelihood over the exponent."""
    z = np.asarray(values, dtype=float) + shift
    if np.any(z <= 0.0):
        raise InputError("shifted data must be strictly positive")

    def llf(lam: float) -> float:
        return float(stats.boxcox_llf(lam, z))

    a, b = lam_lo, lam_hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = llf(c), llf(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = llf(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = llf(d)
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# per-attribute transform


@dataclass(frozen=True)
class AttributeTransform:
    """Optional Box-Cox followed by min-max scaling to the training range."""

    use_boxcox: bool
    shift: float
    lam: float
    lo: float  # training min/max in post-power space
    hi: float

    @property
    def degenerate(self) -> bool:
        return self.hi <= self.lo

    def apply(self, x: np.ndarray | float) -> np.ndarray | float:
        z = boxcox_apply(x, self.shift, self.lam) if self.use_boxcox else np.asarray(x, float)
        if self.degenerate:
            out = np.asarray(z, float) - self.lo
        else:
            out = (np.asarray(z, float) - self.lo) / (self.hi - self.lo)
        return out if np.ndim(x) else float(out)

    def invert(self, y: np.ndarray | float) -> np.ndarray | float:
        z = np.asarray(y, dtype=float)
        z = z + self.lo if self.degenerate else z * (self.hi - self.lo) + self.lo
        out = boxcox_invert(z, self.shift, self.lam) if self.use_boxcox else z
        return out if np.ndim(y) else float(out)

    def to_dict(self) -> dict:
        return {
            "use_boxcox": self.use_boxcox,
            "shift": self.shift,
            "lam": self.lam,
            "lo": self.lo,
            "hi": self.hi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttributeTransform":
        return cls(
            use_boxcox=bool(d["use_boxcox"]),
            shift=float(d["shift"]),
            lam=float(d["lam"]),
            lo=float(d["lo"]),
            hi=float(d["hi"]),
        )


def fit_attribute(
    values: np.ndarray,
    skew_threshold: float = 0.5,
    lam_lo: float = -5.0,
    lam_hi: float = 5.0,
    tol: float = 1e-6,
) -> AttributeTransform:
    """Fit one attribute's transform on training values.

    The power transform engages only when the sample skewness exceeds the
    threshold in magnitude; constant attributes get the identity transform
    with a degenerate scale.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise InputError("need a vector of at least two training values")
    if not np.all(np.isfinite(v)):
        raise InputError("training values must be finite")
    if np.ptp(v) == 0.0:
        return AttributeTransform(False, 0.0, 1.0, float(v[0]), float(v[0]))
    skew = float(stats.skew(v))
    if abs(skew) > skew_threshold:
        shift = boxcox_shift(v)
        lam = fit_boxcox_lambda(v, shift, lam_lo, lam_hi, tol)
        z = np.asarray(boxcox_apply(v, shift, lam))
        return AttributeTransform(True, shift, lam, float(z.min()), float(z.max()))
    return AttributeTransform(False, 0.0, 1.0, float(v.min()), float(v.max()))


@dataclass(frozen=True)
class TransformSpec:
    """Fitted transforms for every feature column plus the target."""

    features: dict[str, AttributeTransform]
    target: AttributeTransform

    def transform_X(self, X: np.ndarray, names: list[str] | tuple[str, ...]) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty_like(X)
        for j, name in enumerate(names):
            out[:, j] = self.features[name].apply(X[:, j])
        return out

    def transform_y(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(self.target.apply(y))

    def invert_y(self, yt: np.ndarray) -> np.ndarray:
        return np.asarray(self.target.invert(yt))

    def to_dict(self) -> dict:
        return {
            "features": {k: t.to_dict() for k, t in self.features.items()},
            "target": self.target.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransformSpec":
        return cls(
            features={k: AttributeTransform.from_dict(v) for k, v in d["features"].items()},
            target=AttributeTransform.from_dict(d["target"]),
        )


def fit_transforms(
    X: np.ndarray,
    names: list[str] | tuple[str, ...],
    y: np.ndarray,
    skew_threshold: float = 0.5,
    row_ids: list[int] | np.ndarray | None = None,
) -> TransformSpec:
    """Fit every column's transform plus the target's on training rows only."""
    X = np.asarray(X, dtype=float)
    if X.shape[1] != len(names):
        raise InputError("one name per column required")
    record_fit("transform", row_ids)
    feats = {
        name: fit_attribute(X[:, j], skew_threshold=skew_threshold)
        for j, name in enumerate(names)
    }
    return TransformSpec(features=feats, target=fit_attribute(y, skew_threshold=skew_threshold))


# ---------------------------------------------------------------------------
# distance correlation


def _centered_distances(v: np.ndarray) -> np.ndarray:
    d = np.abs(v[:, None] - v[None, :])
    return d - d.mean(axis=1, keepdims=True) - d.mean(axis=0, keepdims=True) + d.mean()


def _dcor_centered(A: np.ndarray, B: np.ndarray) -> float:
    dcov2 = float((A * B).mean())
    dvx = float((A * A).mean())
    dvy = float((B * B).mean())
    if dvx <= 0.0 or dvy <= 0.0:
        return 0.0
    return math.sqrt(max(dcov2, 0.0) / math.sqrt(dvx * dvy))


def dcor(x: np.ndarray, y: np.ndarray) -> float:
    """Distance correlation between two scalar samples.

    Double-centred distance matrices, V-statistic normalisation.  Zero when
    either sample has no distance variance (a constant); one when the
    samples are identical up to an affine map.
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.shape != yv.shape or xv.ndim != 1:
        raise InputError("samples must be equal-length vectors")
    if xv.size < 4:
        raise InputError("need at least four observations")
    if not (np.all(np.isfinite(xv)) and np.all(np.isfinite(yv))):
        raise InputError("samples must be finite")
    return _dcor_centered(_centered_distances(xv), _centered_distances(yv))


# ---------------------------------------------------------------------------
# selection


@dataclass(frozen=True)
class SelectionReport:
    target_dcor: dict[str, float]
    groups: dict[str, str]
    selected: dict[str, tuple[str, ...]]  # group -> names, descending dcor
    excluded: tuple[tuple[str, str, float], ...]  # candidate, kept feature, their dcor
    ordering: tuple[str, ...]
    subsample_n: int | None

    def to_json(self, path: str | Path) -> None:
        doc = {
            "target_dcor": self.target_dcor,
            "groups": self.groups,
            "selected": {g: list(v) for g, v in self.selected.items()},
            "excluded": [list(e) for e in self.excluded],
            "ordering": list(self.ordering),
            "subsample_n": self.subsample_n,
        }
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "SelectionReport":
        d = json.loads(Path(path).read_text())
        return cls(
            target_dcor={k: float(v) for k, v in d["target_dcor"].items()},
            groups=dict(d["groups"]),
            selected={g: tuple(v) for g, v in d["selected"].items()},
            excluded=tuple((a, b, float(c)) for a, b, c in d["excluded"]),
            ordering=tuple(d["ordering"]),
            subsample_n=d.get("subsample_n"),
        )


def _balanced_ordering(
    selected: dict[str, tuple[str, ...]], target_dcor: dict[str, float]
) -> tuple[str, ...]:
    """Interleave groups: always extend the least-represented group next,
    breaking ties by the strength of its best remaining feature."""
    remaining = {g: list(names) for g, names in selected.items() if names}
    counts = {g: 0 for g in remaining}
    order: list[str] = []
    while remaining:
        m = min(counts[g] for g in remaining)
        cands = [g for g in remaining if counts[g] == m]
        best = sorted(
            cands, key=lambda g: (-target_dcor[remaining[g][0]], remaining[g][0])
        )[0]
        order.append(remaining[best].pop(0))
        counts[best] += 1
        if not remaining[best]:
            del remaining[best]
    return tuple(order)


def select_features(
    X_t: np.ndarray,
    names: list[str] | tuple[str, ...],
    groups: dict[str, str],
    y_t: np.ndarray,
    max_per_group: int = 3,
    exclusion_threshold: float = 0.8,
    max_n: int | None = None,
    subsample_seed: int = 0,
) -> SelectionReport:
    """Greedy dependence-ranked selection on transformed data.

    One pass over features in descending target-dcor order (ties broken by
    name): a feature is kept unless its group is full or it is too close to
    any already-kept feature across groups.  Distance matrices are O(n^2),
    so rows may be subsampled deterministically via ``max_n``.
    """
    X_t = np.asarray(X_t, dtype=float)
    y_t = np.asarray(y_t, dtype=float)
    if X_t.shape[0] != y_t.size or X_t.shape[1] != len(names):
        raise InputError("X, y, and names must agree in shape")
    missing = [n for n in names if n not in groups]
    if missing:
        raise InputError(f"no group for: {missing}")
    n = X_t.shape[0]
    sub_n = None
    if max_n is not None and n > max_n:
        rng = np.random.default_rng(subsample_seed)
        rows = np.sort(rng.choice(n, size=max_n, replace=False))
        X_t, y_t = X_t[rows], y_t[rows]
        sub_n = max_n

    B = _centered_distances(y_t)
    cols = {name: X_t[:, j] for j, name in enumerate(names)}
    target_dcor = {
        name: _dcor_centered(_centered_distances(cols[name]), B) for name in names
    }

    order = sorted(names, key=lambda f: (-target_dcor[f], f))
    group_names = sorted(set(groups[n_] for n_ in names))
    selected: dict[str, list[str]] = {g: [] for g in group_names}
    cached: dict[str, np.ndarray] = {}
    excluded: list[tuple[str, str, float]] = []
    for f in order:
        g = groups[f]
        if len(selected[g]) >= max_per_group:
            continue
        A = _centered_distances(cols[f])
        too_close = None
        for kept, A_kept in cached.items():
            r = _dcor_centered(A, A_kept)
            if r > exclusion_threshold:
                too_close = (f, kept, r)
                break
        if too_close is not None:
            excluded.append(too_close)
            continue
        selected[g].append(f)
        cached[f] = A

    selected_t = {g: tuple(v) for g, v in selected.items()}
    ordering = _balanced_ordering(selected_t, target_dcor)
    return SelectionReport(
        target_dcor=target_dcor,
        groups={n_: groups[n_] for n_ in names},
        selected=selected_t,
        excluded=tuple(excluded),
        ordering=ordering,
        subsample_n=sub_n,
    )


def order_features(report: SelectionReport, k: int) -> list[str]:
    """First k features of the balanced ordering."""
    if not 1 <= k <= len(report.ordering):
        raise RangeError(f"k must be in 1..{len(report.ordering)}")
    return list(report.ordering[:k])
