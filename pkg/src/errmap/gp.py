"""Gaussian-process regression with per-sample noise floors.

The covariance is a constant times a squared-exponential plus a fixed
per-sample diagonal (derived from dataset weights) plus a fitted white
term:

    M = s2 * R(l) + diag(alpha) + n2 * I

Hyperparameters (s2, l, n2) are fitted by maximising the exact log marginal
likelihood with analytic gradients in log-parameter space, multi-start
L-BFGS-B, deterministic per seed.  The per-sample floor alpha_i shrinks with
the sample's weight, so heavily weighted samples pin the surface harder.

Inputs are expected in transformed/scaled space; this module knows nothing
about raw units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .errors import FitError, InputError

LOG_2PI = math.log(2.0 * math.pi)
_PENALTY = 1e25


@dataclass(frozen=True)
class KernelParams:
    signal_variance: float
    lengthscales: np.ndarray  # shape (1,) shared across dims, or (d,)
    noise_variance: float

    def __post_init__(self) -> None:
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if np.any(ls <= 0) or self.signal_variance <= 0 or self.noise_variance < 0:
            raise InputError("kernel parameters must be positive")
        ls.flags.writeable = False
        object.__setattr__(self, "lengthscales", ls)


@dataclass(frozen=True)
class GPBounds:
    """Hyperparameter box, shared by every restart."""

    signal: tuple[float, float] = (1e-4, 1e2)
    lengthscale: tuple[float, float] = (1e-2, 1e2)
    noise: tuple[float, float] = (1e-8, 1.0)

    def __post_init__(self) -> None:
        for lo, hi in (self.signal, self.lengthscale, self.noise):
            if not (0 < lo < hi):
                raise InputError("bounds must satisfy 0 < low < high")

    def to_dict(self) -> dict:
        return {
            "signal": list(self.signal),
            "lengthscale": list(self.lengthscale),
            "noise": list(self.noise),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GPBounds":
        return cls(
            signal=tuple(d["signal"]),
            lengthscale=tuple(d["lengthscale"]),
            noise=tuple(d["noise"]),
        )


def kernel_eval(params: KernelParams, a: np.ndarray, b: np.ndarray) -> float:
    """Signal covariance between two points (no noise terms)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError("points must be equal-length vectors")
    diff = (a - b) / params.lengthscales
    return params.signal_variance * math.exp(-0.5 * float(diff @ diff))


def alpha_from_weights(weights: np.ndarray, base_alpha: float = 0.01) -> np.ndarray:
    """Per-sample noise floor, inverse in the log of the sample weight.

    alpha_i = base * log(1 + mean w) / log(1 + w_i): a sample at the mean
    weight gets exactly the base floor; heavier samples get less noise.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise InputError("weights must be a non-empty vector")
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise InputError("weights must be positive and finite")
    if base_alpha <= 0:
        raise InputError("base alpha must be positive")
    return base_alpha * math.log1p(float(w.mean())) / np.log1p(w)


# ---------------------------------------------------------------------------
# linear algebra


def _scaled_sq_dists(X: np.ndarray, ls: np.ndarray) -> np.ndarray:
    Xs = X / ls
    sq = np.einsum("ij,ij->i", Xs, Xs)
    S = sq[:, None] + sq[None, :] - 2.0 * (Xs @ Xs.T)
    np.maximum(S, 0.0, out=S)
    return S


def _cross_sq_dists(A: np.ndarray, B: np.ndarray, ls: np.ndarray) -> np.ndarray:
    As = A / ls
    Bs = B / ls
    sa = np.einsum("ij,ij->i", As, As)
    sb = np.einsum("ij,ij->i", Bs, Bs)
    S = sa[:, None] + sb[None, :] - 2.0 * (As @ Bs.T)
    np.maximum(S, 0.0, out=S)
    return S


def _chol_with_jitter(M: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky with an escalating diagonal jitter.

    First a clean attempt, then 1e-10 .. 1e-4 times the mean diagonal in
    decade steps.  Exhausting the ladder is a fit failure.
    """
    mean_diag = float(np.mean(np.diag(M)))
    n = M.shape[0]
    for exponent in (None, -10, -9, -8, -7, -6, -5, -4):
        jitter = 0.0 if exponent is None else mean_diag * 10.0 ** exponent
        try:
            L = np.linalg.cholesky(M if jitter == 0.0 else M + jitter * np.eye(n))
            return L, jitter
        except np.linalg.LinAlgError:
            continue
    raise FitError("covariance is not positive definite even with maximum jitter")


def _build_cov(
    X: np.ndarray, alpha: np.ndarray, params: KernelParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(M, Kf, S): full covariance, signal part, scaled square distances."""
    S = _scaled_sq_dists(X, params.lengthscales)
    Kf = params.signal_variance * np.exp(-0.5 * S)
    M = Kf + np.diag(alpha) + params.noise_variance * np.eye(X.shape[0])
    return M, Kf, S


def log_marginal_likelihood(
    X: np.ndarray,
    y: np.ndarray,
    alpha: np.ndarray,
    params: KernelParams,
    with_grad: bool = True,
) -> tuple[float, np.ndarray | None]:
    """Exact log marginal likelihood and its gradient.

    The gradient is taken with respect to the logs of (signal variance,
    each lengthscale, noise variance), in that order.
    """
    X, y, alpha = _check_training(X, y, alpha)
    M, Kf, S = _build_cov(X, alpha, params)
    L, _ = _chol_with_jitter(M)
    a = cho_solve((L, True), y)
    n = y.size
    value = float(
        -0.5 * (y @ a) - np.sum(np.log(np.diag(L))) - 0.5 * n * LOG_2PI
    )
    if not with_grad:
        return value, None

    Minv = cho_solve((L, True), np.eye(n))
    A = np.outer(a, a) - Minv
    AKf = A * Kf
    g_signal = 0.5 * float(AKf.sum())
    ls = params.lengthscales
    if ls.size == 1:
        g_ls = [0.5 * float((AKf * S).sum())]
    else:
        g_ls = []
        for j in range(ls.size):
            dj = X[:, j][:, None] - X[:, j][None, :]
            g_ls.append(0.5 * float((AKf * (dj * dj)).sum()) / (ls[j] ** 2))
    g_noise = 0.5 * params.noise_variance * float(np.trace(A))
    return value, np.array([g_signal, *g_ls, g_noise])


def _check_training(
    X: np.ndarray, y: np.ndarray, alpha: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if X.ndim != 2:
        raise InputError("X must be (n, d)")
    n = X.shape[0]
    if y.shape != (n,) or alpha.shape != (n,):
        raise InputError("y and alpha must have one entry per row of X")
    if n < 1:
        raise InputError("need at least one training point")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y)) and np.all(np.isfinite(alpha))):
        raise InputError("training data must be finite")
    if np.any(alpha < 0):
        raise InputError("alpha must be non-negative")
    return X, y, alpha


# ---------------------------------------------------------------------------
# fitted model


@dataclass(frozen=True)
class GPModel:
    params: KernelParams
    X: np.ndarray
    y: np.ndarray
    alpha: np.ndarray
    L: np.ndarray
    dual: np.ndarray  # M^{-1} y
    jitter: float
    lml: float


@dataclass(frozen=True)
class PredictiveDistribution:
    mean: float
    std: float
    includes_noise: bool


def rebuild(
    X: np.ndarray, y: np.ndarray, alpha: np.ndarray, params: KernelParams
) -> GPModel:
    """Factorize a model at known hyperparameters (no optimisation)."""
    X, y, alpha = _check_training(X, y, alpha)
    M, _, _ = _build_cov(X, alpha, params)
    L, jitter = _chol_with_jitter(M)
    dual = cho_solve((L, True), y)
    value = float(
        -0.5 * (y @ dual) - np.sum(np.log(np.diag(L))) - 0.5 * y.size * LOG_2PI
    )
    return GPModel(params, X, y, alpha, L, dual, jitter, value)


def _default_start(
    y: np.ndarray, d: int, n_ls: int, bounds: GPBounds
) -> np.ndarray:
    var = float(np.var(y))
    s0 = min(max(var, bounds.signal[0]), bounds.signal[1])
    l0 = min(max(0.5 * math.sqrt(d), bounds.lengthscale[0]), bounds.lengthscale[1])
    n0 = min(max(0.1 * var + 1e-6, bounds.noise[0]), bounds.noise[1])
    return np.log(np.array([s0] + [l0] * n_ls + [n0]))


def fit(
    X: np.ndarray,
    y: np.ndarray,
    alpha: np.ndarray,
    bounds: GPBounds | None = None,
    restarts: int = 5,
    seed: int = 0,
    maxiter: int = 100,
    lengthscale_per_dim: bool = False,
) -> GPModel:
    """Maximum-marginal-likelihood fit, multi-start, deterministic per seed.

    Start 0 is a data-driven heuristic; the rest are drawn log-uniform
    inside the bounds.  The restart with the best objective wins; exact ties
    go to the lower restart index.
    """
    X, y, alpha = _check_training(X, y, alpha)
    if y.size < 2:
        raise InputError("need at least two training points to fit")
    if restarts < 1:
        raise InputError("need at least one restart")
    bounds = bounds or GPBounds()
    d = X.shape[1]
    n_ls = d if lengthscale_per_dim else 1

    lb = np.log(np.array([bounds.signal[0]] + [bounds.lengthscale[0]] * n_ls + [bounds.noise[0]]))
    ub = np.log(np.array([bounds.signal[1]] + [bounds.lengthscale[1]] * n_ls + [bounds.noise[1]]))

    def unpack(theta: np.ndarray) -> KernelParams:
        return KernelParams(
            signal_variance=float(np.exp(theta[0])),
            lengthscales=np.exp(theta[1:1 + n_ls]),
            noise_variance=float(np.exp(theta[-1])),
        )

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        try:
            value, grad = log_marginal_likelihood(X, y, alpha, unpack(theta))
        except FitError:
            return _PENALTY, np.zeros_like(theta)
        return -value, -np.asarray(grad)

    rng = np.random.default_rng(np.random.SeedSequence((seed, 505)))
    starts = [_default_start(y, d, n_ls, bounds)]
    for _ in range(restarts - 1):
        starts.append(rng.uniform(lb, ub))

    best: tuple[float, int, np.ndarray] | None = None
    for idx, x0 in enumerate(starts):
        res = minimize(
            objective,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=list(zip(lb, ub)),
            options={"maxiter": maxiter},
        )
        cand = (float(res.fun), idx, np.asarray(res.x))
        if best is None or (cand[0], cand[1]) < (best[0], best[1]):
            best = cand
    assert best is not None
    if best[0] >= _PENALTY:
        raise FitError("every restart failed to factorize the covariance")
    return rebuild(X, y, alpha, unpack(best[2]))


# ---------------------------------------------------------------------------
# prediction


def predict(
    model: GPModel, X_star: np.ndarray, include_noise: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Predictive mean and standard deviation at new points.

    ``include_noise`` adds the fitted white variance (not the per-sample
    alpha, which belongs to the training points).
    """
    X_star = np.asarray(X_star, dtype=float)
    if X_star.ndim != 2 or X_star.shape[1] != model.X.shape[1]:
        raise InputError("query points must be (m, d) matching the training dims")
    p = model.params
    S = _cross_sq_dists(X_star, model.X, p.lengthscales)
    K_star = p.signal_variance * np.exp(-0.5 * S)
    mean = K_star @ model.dual
    V = solve_triangular(model.L, K_star.T, lower=True)
    var = p.signal_variance - np.einsum("ij,ij->j", V, V)
    if include_noise:
        var = var + p.noise_variance
    np.maximum(var, 0.0, out=var)
    return mean, np.sqrt(var)


def predict_one(
    model: GPModel, x: np.ndarray, include_noise: bool = False
) -> PredictiveDistribution:
    mean, std = predict(model, np.asarray(x, dtype=float)[None, :], include_noise)
    return PredictiveDistribution(float(mean[0]), float(std[0]), include_noise)
