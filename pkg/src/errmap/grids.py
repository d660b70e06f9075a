"""Prediction grids: error surfaces, uncertainty, density, and domain.

A grid sweeps one or two model features over their (slightly extended)
training ranges while pinning every other feature at its weighted median.
Each cell carries the model's mean and standard deviation (signal only, no
white noise -- the grid maps the error surface, not a future observation),
the back-transformed mean, the fraction of training points falling in the
cell, and whether the cell lies inside the convex hull of the training
cloud projected onto the grid axes.

Everything is computed in the transformed/scaled feature space the model
was fitted in; axis coordinates are reported in both spaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay, QhullError

from . import gp
from .errors import InputError, RangeError
from .gp import GPModel
from .transforms import TransformSpec

DEFAULT_RESOLUTION = 50
DEFAULT_EXTEND = 0.25


def weighted_median(values: np.ndarray, weights: np.ndarray | None = None) -> float:
    """Smallest value whose cumulative weight reaches half the total."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise InputError("median of empty sequence")
    if weights is None:
        w = np.ones_like(v)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != v.shape or np.any(w < 0) or w.sum() <= 0:
            raise InputError("weights must be non-negative with positive total")
    order = np.argsort(v, kind="stable")
    cum = np.cumsum(w[order])
    idx = int(np.searchsorted(cum, 0.5 * cum[-1]))
    return float(v[order][min(idx, v.size - 1)])


@dataclass(frozen=True)
class GridResult:
    axes: tuple[str, ...]  # 1 or 2 feature names
    coords: tuple[np.ndarray, ...]  # transformed-space axis values
    coords_raw: tuple[np.ndarray, ...]  # same axes, raw units
    mean: np.ndarray  # transformed target space; (r,) or (r1, r2)
    std: np.ndarray
    mean_raw: np.ndarray
    in_domain: np.ndarray  # bool
    density: np.ndarray  # fraction of training rows per cell; sums to 1
    pinned: dict[str, float]  # non-axis features, transformed space

    @property
    def ndim(self) -> int:
        return len(self.axes)


def _axis_grid(
    col: np.ndarray, resolution: int, extend_fraction: float
) -> np.ndarray:
    lo = float(col.min())
    hi = float(col.max())
    span = hi - lo
    return np.linspace(lo - extend_fraction * span, hi + extend_fraction * span, resolution)


def _cell_edges(coords: np.ndarray) -> np.ndarray:
    """Voronoi-style bin edges around grid points (half-step margins)."""
    if coords.size == 1:
        half = 0.5 if coords[0] == 0 else 0.5 * abs(coords[0]) + 0.5
        return np.array([coords[0] - half, coords[0] + half])
    mids = 0.5 * (coords[:-1] + coords[1:])
    first = coords[0] - (mids[0] - coords[0])
    last = coords[-1] + (coords[-1] - mids[-1])
    return np.concatenate(([first], mids, [last]))


def _hull_mask(train_pts: np.ndarray, query_pts: np.ndarray) -> np.ndarray:
    """Convex-hull membership; degenerate clouds fall back to the bounding box."""
    if train_pts.shape[1] == 1:
        lo, hi = float(train_pts.min()), float(train_pts.max())
        q = query_pts[:, 0]
        return (q >= lo) & (q <= hi)
    try:
        tri = Delaunay(train_pts)
        return tri.find_simplex(query_pts) >= 0
    except QhullError:
        ok = np.ones(query_pts.shape[0], dtype=bool)
        for j in range(train_pts.shape[1]):
            lo, hi = float(train_pts[:, j].min()), float(train_pts[:, j].max())
            ok &= (query_pts[:, j] >= lo) & (query_pts[:, j] <= hi)
        return ok


def grid_predict(
    model: GPModel,
    spec: TransformSpec,
    features: list[str] | tuple[str, ...],
    axes: list[str] | tuple[str, ...],
    weights: np.ndarray | None = None,
    resolution: int = DEFAULT_RESOLUTION,
    extend_fraction: float = DEFAULT_EXTEND,
) -> GridResult:
    """Evaluate the model over a 1-D or 2-D feature grid.

    ``features`` names the model's input columns in training order; ``axes``
    picks one or two of them to sweep.  ``weights`` (dataset weights of the
    training rows) steer the pinned medians of the remaining features.
    """
    features = list(features)
    if model.X.shape[1] != len(features):
        raise InputError("feature list does not match the model dimensionality")
    if not 1 <= len(axes) <= 2:
        raise InputError("grids are one- or two-dimensional")
    for ax in axes:
        if ax not in features:
            raise RangeError(f"axis {ax!r} is not a model feature")
    if len(set(axes)) != len(axes):
        raise InputError("grid axes must be distinct")
    if resolution < 2:
        raise InputError("resolution must be at least 2")
    if extend_fraction < 0:
        raise InputError("extension must be non-negative")

    ax_idx = [features.index(a) for a in axes]
    coords = tuple(
        _axis_grid(model.X[:, j], resolution, extend_fraction) for j in ax_idx
    )

    pinned: dict[str, float] = {}
    for j, name in enumerate(features):
        if name not in axes:
            pinned[name] = weighted_median(model.X[:, j], weights)

    if len(axes) == 1:
        mesh = coords[0][:, None]
        shape: tuple[int, ...] = (resolution,)
    else:
        g0, g1 = np.meshgrid(coords[0], coords[1], indexing="ij")
        mesh = np.column_stack([g0.ravel(), g1.ravel()])
        shape = (resolution, resolution)

    query = np.empty((mesh.shape[0], len(features)))
    for j, name in enumerate(features):
        if name in axes:
            query[:, j] = mesh[:, axes.index(name)]
        else:
            query[:, j] = pinned[name]

    mean, std = gp.predict(model, query, include_noise=False)
    mean_raw = np.asarray(spec.invert_y(mean))

    train_proj = model.X[:, ax_idx]
    in_domain = _hull_mask(train_proj, mesh)

    edges = [_cell_edges(c) for c in coords]
    if len(axes) == 1:
        counts, _ = np.histogram(train_proj[:, 0], bins=edges[0])
    else:
        counts, _, _ = np.histogram2d(
            train_proj[:, 0], train_proj[:, 1], bins=(edges[0], edges[1])
        )
    density = counts / model.X.shape[0]

    coords_raw = tuple(
        np.asarray(spec.features[a].invert(c)) for a, c in zip(axes, coords)
    )
    return GridResult(
        axes=tuple(axes),
        coords=coords,
        coords_raw=coords_raw,
        mean=mean.reshape(shape),
        std=std.reshape(shape),
        mean_raw=mean_raw.reshape(shape),
        in_domain=in_domain.reshape(shape),
        density=np.asarray(density, dtype=float).reshape(shape),
        pinned=pinned,
    )


def density_uncertainty_profile(
    grid: GridResult, n_bins: int = 10
) -> tuple[np.ndarray, np.ndarray]:
    """Mean predictive deviation per density decile over in-domain cells.

    Returns (bin index, mean std); bins order cells from sparsest to
    densest training coverage.  Useful as a sanity check: uncertainty should
    shrink where the data is dense.
    """
    mask = grid.in_domain.ravel()
    dens = grid.density.ravel()[mask]
    stds = grid.std.ravel()[mask]
    if dens.size < n_bins:
        raise InputError("too few in-domain cells to profile")
    order = np.argsort(dens, kind="stable")
    splits = np.array_split(order, n_bins)
    means = np.array([float(stds[s].mean()) for s in splits])
    return np.arange(n_bins), means


def write_grid_csv(grid: GridResult, path: str | Path) -> None:
    """Flat CSV: axis1,axis2,mean,std,in_domain,density,mean_backtransformed.

    One row per cell, row-major in the first axis; axis2 is empty for 1-D
    grids.  Axis columns are in transformed space (the model's own units).
    """
    lines = ["axis1,axis2,mean,std,in_domain,density,mean_backtransformed"]
    if grid.ndim == 1:
        for i, a1 in enumerate(grid.coords[0]):
            lines.append(
                ",".join(
                    [
                        repr(float(a1)),
                        "",
                        repr(float(grid.mean[i])),
                        repr(float(grid.std[i])),
                        str(int(grid.in_domain[i])),
                        repr(float(grid.density[i])),
                        repr(float(grid.mean_raw[i])),
                    ]
                )
            )
    else:
        for i, a1 in enumerate(grid.coords[0]):
            for j, a2 in enumerate(grid.coords[1]):
                lines.append(
                    ",".join(
                        [
                            repr(float(a1)),
                            repr(float(a2)),
                            repr(float(grid.mean[i, j])),
                            repr(float(grid.std[i, j])),
                            str(int(grid.in_domain[i, j])),
                            repr(float(grid.density[i, j])),
                            repr(float(grid.mean_raw[i, j])),
                        ]
                    )
                )
    Path(path).write_text("\n".join(lines) + "\n")


def structure_report(
    model: GPModel,
    spec: TransformSpec,
    features: list[str] | tuple[str, ...],
    weights: np.ndarray | None = None,
    resolution: int = DEFAULT_RESOLUTION,
    extend_fraction: float = DEFAULT_EXTEND,
    pairs: bool = True,
) -> dict[tuple[str, ...], GridResult]:
    """One 1-D grid per feature, plus every 2-D pair when ``pairs``."""
    features = list(features)
    out: dict[tuple[str, ...], GridResult] = {}
    for f in features:
        out[(f,)] = grid_predict(
            model, spec, features, (f,), weights, resolution, extend_fraction
        )
    if pairs:
        for i, f1 in enumerate(features):
            for f2 in features[i + 1:]:
                out[(f1, f2)] = grid_predict(
                    model, spec, features, (f1, f2), weights, resolution, extend_fraction
                )
    return out
