"""Componentwise kernel-weighted boosting.

One engine, :func:`boost_path`, serves the local-constant (squared loss),
local-linear (squared loss) and generic-loss local-constant variants. The
full path of ``max_iter`` iterations is fitted once and the stopping
iteration is chosen afterwards from the stored AICc or held-out loss path.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from app.domain.entities import Design
from app.domain.exceptions import (
    AllColumnsDegenerateError,
    ConfigurationError,
    HatTraceCapacityError,
    SaturatedModelError,
)
from app.domain.kernel import KernelSpec, kernel_weights
from app.domain.learner import MAX_CONDITION, ll_fit_or_fallback
from app.domain.losses import Loss, SquaredLoss, parse_loss
from app.domain.panel import ColumnScaler, standardize

logger = logging.getLogger(__name__)

DEGENERATE_TOL = 1e-14


class Stopping(str, Enum):
    AICC = "aicc"
    FIXED = "fixed"
    CV = "cv"


class LearnerKind(str, Enum):
    LC = "lc"
    LL = "ll"

    @classmethod
    def parse(cls, text: str) -> "LearnerKind":
        aliases = {"local-constant": cls.LC, "local-linear": cls.LL}
        return aliases.get(text, None) or cls(text)


@dataclass(frozen=True)
class BoostConfig:
    nu: float = 0.1
    max_iter: int = 100
    stopping: Stopping = Stopping.AICC
    learner: LearnerKind = LearnerKind.LC
    loss: Union[Loss, str] = field(default_factory=SquaredLoss)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    hat_trace_cap: int = 3000
    cv_holdout: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("Step length nu must lie in (0, 1]")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0.0 < self.cv_holdout < 1.0:
            raise ValueError("cv_holdout must lie in (0, 1)")
        object.__setattr__(self, "max_iter", int(self.max_iter))
        object.__setattr__(self, "stopping", Stopping(self.stopping))
        learner = self.learner if isinstance(self.learner, LearnerKind) else LearnerKind.parse(self.learner)
        object.__setattr__(self, "learner", learner)
        if isinstance(self.loss, str):
            object.__setattr__(self, "loss", parse_loss(self.loss))

    def replace(self, **changes) -> "BoostConfig":
        return dataclasses.replace(self, **changes)

    def with_bandwidth(self, bandwidth: float) -> "BoostConfig":
        return self.replace(kernel=self.kernel.with_bandwidth(bandwidth))

    def validate(self) -> None:
        """Reject option combinations the engine cannot honour."""
        if self.learner is LearnerKind.LL and not self.loss.is_squared:
            raise ConfigurationError("The local-linear learner is only available with squared loss")
        if self.stopping is Stopping.AICC and not self.loss.is_squared:
            raise ConfigurationError(
                f"AICc stopping needs squared loss, got {self.loss.name}; use fixed or cv stopping"
            )


@dataclass(frozen=True)
class BoostFit:
    intercept: float
    u: float
    nu: float
    learner: LearnerKind
    n_columns: int
    selected: np.ndarray
    alphas: np.ndarray
    alpha_dots: np.ndarray
    loss_path: np.ndarray
    chosen_m: int
    fitted: np.ndarray
    residuals: np.ndarray
    weights: np.ndarray
    times: np.ndarray
    df_path: Optional[np.ndarray] = None
    aicc_path: Optional[np.ndarray] = None
    loss_name: str = "l2"

    @property
    def path_length(self) -> int:
        return int(self.selected.size)

    def _upto(self, m: Optional[int]) -> int:
        m = self.chosen_m if m is None else int(m)
        if not 0 <= m <= self.path_length:
            raise ValueError(f"Iteration {m} outside path 0..{self.path_length}")
        return m

    def coefficients(self, m: Optional[int] = None) -> np.ndarray:
        """Aggregated level coefficient per column after ``m`` iterations."""
        m = self._upto(m)
        coef = np.zeros(self.n_columns)
        np.add.at(coef, self.selected[:m], self.nu * self.alphas[:m])
        return coef

    def slopes(self, m: Optional[int] = None) -> np.ndarray:
        m = self._upto(m)
        slope = np.zeros(self.n_columns)
        np.add.at(slope, self.selected[:m], self.nu * self.alpha_dots[:m])
        return slope

    def predict(self, x_new, time: Optional[float] = None, m: Optional[int] = None):
        """F at ``x_new``; the slope part enters only when ``time`` is given."""
        x_new = np.asarray(x_new, dtype=float)
        if x_new.shape[-1] != self.n_columns:
            raise ValueError(f"Expected {self.n_columns} regressors, got {x_new.shape[-1]}")
        value = self.intercept + x_new @ self.coefficients(m)
        if time is not None and self.learner is LearnerKind.LL:
            value = value + (x_new @ self.slopes(m)) * (np.asarray(time, dtype=float) - self.u)
        return float(value) if np.ndim(value) == 0 else value


# ── AICc ─────────────────────────────────────────────────────────────


def aicc(sigma2_hat: float, df: float, n: int) -> float:
    """log(sigma2) + (1 + df/n) / (1 - (df + 2)/n)."""
    if df + 2 >= n:
        raise SaturatedModelError(df, n)
    if sigma2_hat <= 0:
        raise ValueError("sigma2_hat must be positive")
    return float(np.log(sigma2_hat) + (1.0 + df / n) / (1.0 - (df + 2.0) / n))


def _aicc_path(sigma2: np.ndarray, df: np.ndarray, n: int) -> np.ndarray:
    path = np.full(df.size, np.inf)
    floor = np.finfo(float).tiny
    for m, (s2, d) in enumerate(zip(sigma2, df)):
        try:
            path[m] = aicc(max(s2, floor), d, n)
        except SaturatedModelError as exc:
            logger.debug("AICc search stopped at m=%d: %s", m, exc)
            break
    return path


# ── Engine ───────────────────────────────────────────────────────────


@dataclass
class _Window:
    """Column statistics of one weighted window."""

    X: np.ndarray
    w: np.ndarray
    times: np.ndarray
    u: float
    learner: LearnerKind
    active: np.ndarray = field(init=False)
    sxx: np.ndarray = field(init=False)
    Z: Optional[np.ndarray] = field(init=False, default=None)
    gram: Optional[np.ndarray] = field(init=False, default=None)
    ll_ok: Optional[np.ndarray] = field(init=False, default=None)

    def __post_init__(self):
        wx = self.w[:, None] * self.X
        self.sxx = np.einsum("ij,ij->j", wx, self.X)
        scale = self.sxx.max() if self.sxx.size else 0.0
        self.active = self.sxx > DEGENERATE_TOL * scale if scale > 0 else np.zeros_like(self.sxx, dtype=bool)
        if not self.active.any():
            raise AllColumnsDegenerateError("No column has positive weighted second moment in the window")
        skipped = int((~self.active).sum())
        if skipped:
            logger.debug("Skipping %d degenerate columns at u=%.4f", skipped, self.u)
        if self.learner is LearnerKind.LL:
            self.Z = self.X * (self.times - self.u)[:, None]
            sxz = np.einsum("ij,ij->j", wx, self.Z)
            szz = np.einsum("ij,ij->j", self.w[:, None] * self.Z, self.Z)
            self.gram = np.stack([self.sxx, sxz, szz], axis=1)
            # eigenvalues of [[a, b], [b, c]]
            a, b, c = self.sxx, sxz, szz
            half_gap = np.sqrt(0.25 * (a - c) ** 2 + b * b)
            lam_max = 0.5 * (a + c) + half_gap
            lam_min = 0.5 * (a + c) - half_gap
            with np.errstate(divide="ignore", invalid="ignore"):
                self.ll_ok = self.active & (lam_min > 0) & (lam_max / lam_min <= MAX_CONDITION)

    def select(self, g: np.ndarray) -> tuple[int, float, float]:
        """Column minimizing the weighted SSR of its learner fitted to ``g``."""
        wg = self.w * g
        sxr = wg @ self.X
        with np.errstate(divide="ignore", invalid="ignore"):
            lc_alpha = np.where(self.active, sxr / self.sxx, 0.0)
        if self.learner is LearnerKind.LC:
            gains = np.where(self.active, sxr * lc_alpha, -np.inf)
            j = int(np.argmax(gains))
            return j, float(lc_alpha[j]), 0.0

        szr = wg @ self.Z
        a, b, c = self.gram.T
        with np.errstate(divide="ignore", invalid="ignore"):
            det = a * c - b * b
            alpha = np.where(self.ll_ok, (c * sxr - b * szr) / det, lc_alpha)
            alpha_dot = np.where(self.ll_ok, (a * szr - b * sxr) / det, 0.0)
        gains = np.where(self.active, alpha * sxr + alpha_dot * szr, -np.inf)
        j = int(np.argmax(gains))
        coef = ll_fit_or_fallback(self.X[:, j], g, self.w, self.times, self.u)
        return j, coef.alpha, coef.alpha_dot

    def update(self, j: int, alpha: float, alpha_dot: float) -> np.ndarray:
        step = alpha * self.X[:, j]
        if self.learner is LearnerKind.LL:
            step = step + alpha_dot * self.Z[:, j]
        return step


def _trace_path(window: _Window, selected: np.ndarray, nu: float, cap: int) -> np.ndarray:
    """trace(B_m) for m = 0..M, with B_0 = 1 w' and B_m = B_{m-1} + nu H_j (I - B_{m-1})."""
    support = np.flatnonzero(window.w > 0)
    n = support.size
    if n > cap:
        raise HatTraceCapacityError(n, cap)
    w = window.w[support]
    X = window.X[support]
    Z = None if window.Z is None else window.Z[support]
    B = np.tile(w, (n, 1))
    df = np.empty(selected.size + 1)
    df[0] = np.trace(B)
    for m, j in enumerate(selected, start=1):
        x = X[:, j]
        if window.learner is LearnerKind.LL and window.ll_ok[j]:
            U = np.column_stack([x, Z[:, j]])
            V = w[:, None] * U
            R = V.T - V.T @ B
            P = np.linalg.solve(U.T @ V, R)
            B += nu * U @ P
            df[m] = df[m - 1] + nu * np.einsum("ik,ki->", U, P)
        else:
            v = w * x / window.sxx[j]
            r = v - v @ B
            B += nu * np.outer(x, r)
            df[m] = df[m - 1] + nu * float(x @ r)
    return df


def _run_path(
    X: np.ndarray,
    y: np.ndarray,
    times: np.ndarray,
    u: float,
    config: BoostConfig,
) -> tuple[_Window, float, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    w = kernel_weights(config.kernel, times, u).weights
    window = _Window(X=X, w=w, times=times, u=u, learner=config.learner)
    loss = config.loss
    M = config.max_iter
    intercept = loss.offset(y, w)
    F = np.full(y.size, intercept)
    selected = np.empty(M, dtype=int)
    alphas = np.empty(M)
    alpha_dots = np.empty(M)
    loss_path = np.empty(M + 1)
    loss_path[0] = _path_loss(loss, y, F, w)
    for m in range(M):
        j, alpha, alpha_dot = window.select(loss.negative_gradient(y, F))
        F = F + config.nu * window.update(j, alpha, alpha_dot)
        selected[m], alphas[m], alpha_dots[m] = j, alpha, alpha_dot
        loss_path[m + 1] = _path_loss(loss, y, F, w)
    return window, intercept, selected, alphas, alpha_dots, loss_path, F


def _path_loss(loss: Loss, y: np.ndarray, F: np.ndarray, w: np.ndarray) -> float:
    if loss.is_squared:
        r = y - F
        return float(np.dot(w, r * r))
    return loss.weighted_risk(y, F, w)


def _fitted_upto(X, times, u, learner, intercept, nu, selected, alphas, alpha_dots, m) -> np.ndarray:
    F = np.full(X.shape[0], intercept)
    for j, a, d in zip(selected[:m], alphas[:m], alpha_dots[:m]):
        step = a * X[:, j]
        if learner is LearnerKind.LL:
            step = step + d * X[:, j] * (times - u)
        F += nu * step
    return F


def _holdout_choice(X, y, times, u, config: BoostConfig) -> int:
    """Iteration minimizing the weighted loss on the last rows of the window."""
    w = kernel_weights(config.kernel, times, u).weights
    rows = np.flatnonzero(w > 0)
    n_hold = max(1, int(np.ceil(config.cv_holdout * rows.size)))
    if rows.size - n_hold < 2:
        raise ConfigurationError(f"Window of {rows.size} rows is too small for held-out stopping")
    train, hold = rows[:-n_hold], rows[-n_hold:]
    _, intercept, selected, alphas, alpha_dots, _, _ = _run_path(
        X[train], y[train], times[train], u, config.replace(stopping=Stopping.FIXED)
    )
    hold_w = w[hold] / w[hold].sum()
    Xh, th = X[hold], times[hold]
    F = np.full(hold.size, intercept)
    scores = np.empty(config.max_iter + 1)
    scores[0] = _path_loss(config.loss, y[hold], F, hold_w)
    for m, (j, a, d) in enumerate(zip(selected, alphas, alpha_dots), start=1):
        step = a * Xh[:, j]
        if config.learner is LearnerKind.LL:
            step = step + d * Xh[:, j] * (th - u)
        F = F + config.nu * step
        scores[m] = _path_loss(config.loss, y[hold], F, hold_w)
    return int(np.argmin(scores))


def boost_path(
    X: np.ndarray,
    y: np.ndarray,
    times: np.ndarray,
    u: float,
    config: BoostConfig,
    trace: bool = False,
) -> BoostFit:
    """Fit ``config.max_iter`` boosting iterations at rescaled time ``u``.

    ``trace=True`` computes the hat-matrix trace path under any stopping rule.
    """
    config.validate()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    times = np.asarray(times, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size or times.size != y.size:
        raise ValueError(f"Inconsistent shapes: X {X.shape}, y {y.shape}, times {times.shape}")

    window, intercept, selected, alphas, alpha_dots, loss_path, F = _run_path(X, y, times, u, config)
    M = config.max_iter

    df_path = aicc_path = None
    if trace or config.stopping is Stopping.AICC:
        df_path = _trace_path(window, selected, config.nu, config.hat_trace_cap)
        aicc_path = _aicc_path(loss_path, df_path, int((window.w > 0).sum()))

    if config.stopping is Stopping.AICC:
        chosen = int(np.argmin(aicc_path))
    elif config.stopping is Stopping.CV:
        chosen = _holdout_choice(X, y, times, u, config)
    else:
        chosen = M

    fitted = F if chosen == M else _fitted_upto(
        X, times, u, config.learner, intercept, config.nu, selected, alphas, alpha_dots, chosen
    )
    return BoostFit(
        intercept=float(intercept),
        u=float(u),
        nu=config.nu,
        learner=config.learner,
        n_columns=X.shape[1],
        selected=selected,
        alphas=alphas,
        alpha_dots=alpha_dots,
        loss_path=loss_path,
        chosen_m=chosen,
        fitted=fitted,
        residuals=y - fitted,
        weights=window.w,
        times=times,
        df_path=df_path,
        aicc_path=aicc_path,
        loss_name=config.loss.name,
    )


# ── Public entry points ──────────────────────────────────────────────


def _design_path(design: Design, u: float, config: BoostConfig, trace: bool = False) -> BoostFit:
    return boost_path(design.regressors, design.response, design.times, u, config, trace=trace)


def lc_boost(design: Design, u: float, config: BoostConfig) -> BoostFit:
    """Local-constant L2 boosting."""
    if not config.loss.is_squared:
        raise ConfigurationError("lc_boost uses squared loss; call generic_boost for other losses")
    return _design_path(design, u, config.replace(learner=LearnerKind.LC))


def ll_boost(design: Design, u: float, config: BoostConfig) -> BoostFit:
    """Local-linear L2 boosting."""
    return _design_path(design, u, config.replace(learner=LearnerKind.LL))


def generic_boost(design: Design, u: float, config: BoostConfig) -> BoostFit:
    """Local-constant boosting on the negative gradient of ``config.loss``."""
    return _design_path(design, u, config.replace(learner=LearnerKind.LC))


def hat_trace_path(design: Design, u: float, config: BoostConfig) -> np.ndarray:
    """df_m = trace(B_m) for m = 0..max_iter."""
    if not config.loss.is_squared:
        raise ConfigurationError("The hat-matrix trace is defined for squared loss only")
    fit = _design_path(design, u, config.replace(stopping=Stopping.FIXED), trace=True)
    return fit.df_path


def predict(fit: BoostFit, x_new) -> float:
    return fit.predict(x_new)


def fit_forecast(
    design: Design,
    config: BoostConfig,
    u: float = 1.0,
) -> tuple[float, BoostFit, ColumnScaler]:
    """Standardize, fit at ``u`` and predict the design's forecast row."""
    if design.forecast_row is None:
        raise ValueError("Design carries no forecast row")
    scaled, scaler = standardize(design)
    fit = _design_path(scaled, u, config)
    return fit.predict(scaled.forecast_row), fit, scaler
