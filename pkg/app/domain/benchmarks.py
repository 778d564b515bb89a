"""Comparison forecasters: direct AR, diffusion index, PCA factors, lasso and
time-invariant / rolling componentwise boosting."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.domain.boost import BoostConfig, BoostFit, fit_forecast
from app.domain.entities import Design, Panel
from app.domain.exceptions import ConvergenceError, InsufficientDataError
from app.domain.kernel import KernelFamily, KernelSpec, Sidedness
from app.domain.panel import first_valid, standardize, transform_panel

logger = logging.getLogger(__name__)

RIDGE_JITTER = 1e-8


# ── Direct autoregressions ───────────────────────────────────────────


@dataclass(frozen=True)
class ArSpec:
    order: int = 4
    rolling: Optional[int] = None

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("AR order must be >= 1")
        if self.rolling is not None and self.rolling <= self.order + 2:
            raise ValueError(f"Rolling window {self.rolling} too short for AR({self.order})")

    @property
    def window(self) -> str:
        return "expanding" if self.rolling is None else f"rolling({self.rolling})"


@dataclass(frozen=True)
class DirectFit:
    prediction: float
    coef: np.ndarray
    n_rows: int
    singular: bool = False


def _direct_rows(
    y: np.ndarray,
    lag_source: np.ndarray,
    h: int,
    own_lags: int,
    extra: Optional[np.ndarray],
    extra_lags: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Regressor rows (1, own lags, extra lags) for responses y[t] read at t - h."""
    T = y.size
    columns: list[tuple[np.ndarray, int]] = [(lag_source, lag) for lag in range(own_lags)]
    if extra is not None:
        columns += [(extra[:, i], lag) for i in range(extra.shape[1]) for lag in range(extra_lags + 1)]
    start = max([first_valid(y)] + [first_valid(s) + h + lag for s, lag in columns])
    rows = np.arange(start, T)
    X = np.column_stack([np.ones(rows.size)] + [s[rows - h - lag] for s, lag in columns])
    x_last = np.array([1.0] + [s[T - 1 - lag] for s, lag in columns])
    return X, y[rows], x_last


def direct_fit(
    y: np.ndarray,
    h: int,
    own_lags: int,
    lag_source: Optional[np.ndarray] = None,
    extra: Optional[np.ndarray] = None,
    extra_lags: int = 0,
    rolling: Optional[int] = None,
    ridge: bool = False,
) -> DirectFit:
    """OLS of y[t] on (1, lag_source[t-h..t-h-own_lags+1], extra lags), predicting T-1+h.

    Rank-deficient systems fall back to the window mean, or to a ridge jitter
    on the Gram diagonal when ``ridge`` is set.
    """
    y = np.asarray(y, dtype=float)
    lag_source = y if lag_source is None else np.asarray(lag_source, dtype=float)
    if extra is not None:
        extra = np.asarray(extra, dtype=float)
        if extra.ndim == 1:
            extra = extra[:, None]
    X, target, x_last = _direct_rows(y, lag_source, h, own_lags, extra, extra_lags)
    if rolling is not None:
        X, target = X[-rolling:], target[-rolling:]
    if target.size <= X.shape[1]:
        raise InsufficientDataError(X.shape[1] + 1, target.size, "rows for the direct regression")

    coef, _, rank, _ = np.linalg.lstsq(X, target, rcond=None)
    if rank == X.shape[1]:
        return DirectFit(prediction=float(x_last @ coef), coef=coef, n_rows=target.size)
    if ridge:
        gram = X.T @ X + RIDGE_JITTER * np.eye(X.shape[1])
        coef = np.linalg.solve(gram, X.T @ target)
        logger.debug("Rank-deficient direct regression solved with ridge jitter")
        return DirectFit(prediction=float(x_last @ coef), coef=coef, n_rows=target.size, singular=True)
    logger.warning("Singular AR normal equations; forecasting the window mean")
    return DirectFit(
        prediction=float(target.mean()),
        coef=np.zeros(X.shape[1]),
        n_rows=target.size,
        singular=True,
    )


def ar_forecast(y, spec: ArSpec, h: int, lag_source=None) -> float:
    """Direct h-step AR(p) forecast over an expanding or rolling window."""
    return direct_fit(y, h, spec.order, lag_source=lag_source, rolling=spec.rolling).prediction


# ── Principal-component factors ──────────────────────────────────────


@dataclass(frozen=True)
class FactorSet:
    scores: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray
    explained: np.ndarray

    @property
    def k(self) -> int:
        return self.scores.shape[1]

    def reconstruct(self) -> np.ndarray:
        return self.scores @ self.loadings.T


def pca_factors(X: np.ndarray, k: int) -> FactorSet:
    """First ``k`` principal-component scores of a standardized n x p window."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if k < 0:
        raise ValueError("Factor count must be >= 0")
    U, S, Vt = np.linalg.svd(X, full_matrices=False)
    rank = int((S > S[0] * max(n, p) * np.finfo(float).eps).sum()) if S.size and S[0] > 0 else 0
    if k > rank:
        logger.warning("Requested %d factors but the window has rank %d; using %d", k, rank, rank)
        k = rank
    loadings = Vt[:k].T
    signs = np.sign(loadings[np.argmax(np.abs(loadings), axis=0), np.arange(k)])
    signs[signs == 0] = 1.0
    loadings = loadings * signs
    scores = U[:, :k] * S[:k] * signs
    total = float((S**2).sum())
    return FactorSet(
        scores=scores,
        loadings=loadings,
        eigenvalues=S[:k] ** 2 / n,
        explained=S[:k] ** 2 / total if total > 0 else np.zeros(k),
    )


def extract_factors(panel: Panel, k: int, remap=None) -> tuple[np.ndarray, FactorSet]:
    """Factors of the transformed, standardized panel, padded to its T rows.

    Only the balanced tail (rows where every transformed series is observed)
    enters the estimation; earlier rows are NaN.
    """
    stationary = transform_panel(panel, remap).values
    start = max(first_valid(stationary[:, i]) for i in range(stationary.shape[1]))
    block = stationary[start:]
    if block.shape[0] < 2:
        raise InsufficientDataError(2, block.shape[0], "balanced rows for factor extraction")
    sd = block.std(axis=0)
    keep = sd > 0
    block = (block[:, keep] - block[:, keep].mean(axis=0)) / sd[keep]
    factors = pca_factors(block, k)
    padded = np.full((panel.n_periods, factors.k), np.nan)
    padded[start:] = factors.scores
    return padded, factors


def di_forecast(
    y,
    factors,
    h: int,
    lag_source=None,
    own_lags: int = 4,
    factor_lags: int = 0,
) -> float:
    """OLS of Y^h on (1, own lags, factor lags) with a ridge fallback.

    ``factors`` is a T x k array aligned with ``y`` (NaN before the balanced
    block) or a :class:`FactorSet` whose scores are.
    """
    scores = factors.scores if isinstance(factors, FactorSet) else np.asarray(factors, dtype=float)
    extra = scores if scores.size else None
    return direct_fit(
        y, h, own_lags, lag_source=lag_source, extra=extra, extra_lags=factor_lags, ridge=True
    ).prediction


# ── Lasso ────────────────────────────────────────────────────────────


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def lasso_objective(beta: np.ndarray, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    r = y - X @ beta
    return float(r @ r / (2.0 * y.size) + lam * np.abs(beta).sum())


def lasso_coordinate_descent(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    beta0: Optional[np.ndarray] = None,
    tol: float = 1e-7,
    max_sweeps: int = 100_000,
) -> np.ndarray:
    """Cyclic coordinate descent for (1/2n)||y - X b||^2 + lam ||b||_1."""
    n, q = X.shape
    beta = np.zeros(q) if beta0 is None else np.array(beta0, dtype=float)
    col_sq = np.einsum("ij,ij->j", X, X) / n
    resid = y - X @ beta
    change = np.inf
    for _ in range(max_sweeps):
        change = 0.0
        for j in range(q):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            rho = X[:, j] @ resid / n + col_sq[j] * old
            new = soft_threshold(rho, lam) / col_sq[j]
            if new != old:
                resid -= X[:, j] * (new - old)
                beta[j] = new
                change = max(change, abs(new - old))
        if change < tol:
            return beta
    raise ConvergenceError(max_sweeps, change)


def lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty with an all-zero solution for centered data."""
    return float(np.max(np.abs(X.T @ y)) / y.size)


def lasso_path(X: np.ndarray, y: np.ndarray, lambdas) -> np.ndarray:
    """Warm-started solutions along ``lambdas`` taken in descending order."""
    lambdas = np.asarray(lambdas, dtype=float)
    order = np.argsort(-lambdas, kind="stable")
    coefs = np.empty((lambdas.size, X.shape[1]))
    beta = np.zeros(X.shape[1])
    for i in order:
        beta = lasso_coordinate_descent(X, y, lambdas[i], beta0=beta)
        coefs[i] = beta
    return coefs


@dataclass(frozen=True)
class LassoFit:
    coef: np.ndarray
    intercept: float
    lam: float
    lambdas: np.ndarray
    bic_path: np.ndarray

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.coef)

    def predict(self, x) -> float:
        return float(self.intercept + np.asarray(x, dtype=float) @ self.coef)


def lasso_fit(X, y, lambdas=None, n_lambdas: int = 100, min_ratio: float = 1e-3) -> LassoFit:
    """BIC-selected lasso over a descending log-spaced penalty path."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.size
    x_mean, y_mean = X.mean(axis=0), y.mean()
    Xc, yc = X - x_mean, y - y_mean
    if lambdas is None:
        top = lambda_max(Xc, yc)
        if top <= 0:
            lambdas = np.array([0.0])
        else:
            lambdas = np.logspace(np.log10(top), np.log10(top * min_ratio), n_lambdas)
    lambdas = np.asarray(lambdas, dtype=float)
    coefs = lasso_path(Xc, yc, lambdas)
    resid = yc[None, :] - coefs @ Xc.T
    ssr = np.maximum((resid**2).sum(axis=1), np.finfo(float).tiny)
    df = (coefs != 0).sum(axis=1)
    bic = n * np.log(ssr / n) + df * np.log(n)
    best = int(np.argmin(bic))
    coef = coefs[best]
    return LassoFit(
        coef=coef,
        intercept=float(y_mean - x_mean @ coef),
        lam=float(lambdas[best]),
        lambdas=lambdas,
        bic_path=bic,
    )


def lasso_forecast(design: Design) -> float:
    scaled, _ = standardize(design)
    return lasso_fit(scaled.regressors, scaled.response).predict(scaled.forecast_row)


# ── Time-invariant and rolling boosting ──────────────────────────────


def invariant_boost_forecast(
    design: Design,
    config: BoostConfig,
    window_fraction: Optional[float] = None,
) -> tuple[float, BoostFit]:
    """Boosting with flat weights over the full sample or its last fraction.

    The full-sample case is the two-sided uniform kernel with b = 1; the
    rolling case is the one-sided uniform kernel with b = ``window_fraction``.
    """
    if window_fraction is None:
        kernel = KernelSpec(KernelFamily.UNIFORM, 1.0, Sidedness.TWO_SIDED)
    else:
        kernel = KernelSpec(KernelFamily.UNIFORM, window_fraction, Sidedness.ONE_SIDED_PAST)
    prediction, fit, _ = fit_forecast(design, config.replace(kernel=kernel), u=1.0)
    return prediction, fit


def rolling_bandwidth(length: int, n: int) -> float:
    """One-sided uniform bandwidth covering exactly the last ``length`` of ``n`` rows."""
    if length < 1:
        raise ValueError("Rolling length must be >= 1")
    return min(1.0, length / n)
