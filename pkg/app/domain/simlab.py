"""Data-generating processes for the simulation laboratory.

Fourteen DGPs share one design: an AR(1) response driven by the first four of
``d`` exogenous VAR(1) series with coefficients ``b + beta_j(t/T)``. They
differ in ``beta_j`` (none, breaks, random walks, logistic transitions,
polynomial and trigonometric paths), in the error variance (DGP 2) and in the
exogenous transition matrix (locally stationary for DGPs 13 and 14).
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
import pandas as pd
from scipy.special import expit

from app.domain.entities import DgpSpec, Innovation, Panel, TransformCode, VarianceBreak

logger = logging.getLogger(__name__)

N_COEFFICIENTS = 4
GAMMAS = (10.0, 5.0, 20.0, 10.0)
LOGISTIC_CENTERS = {8: 0.25, 9: 0.75, 10: 0.90, 13: 0.75}
BREAK_FRACTIONS = {3: 0.25, 4: 0.5, 5: 0.75, 14: 0.75}
RANDOM_WALK_SCALES = {6: 0.5, 7: 1.0}
VARIANCE_BREAK_FRACTION = 0.75
POST_BREAK_DISPERSION = 2.5
T5_SCALE = np.sqrt(3.0 / 5.0)


def replication_rng(master_seed: int, rep: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for (replication, stream), independent of execution order."""
    seed_seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(rep), int(stream)))
    return np.random.Generator(np.random.Philox(seed_seq))


def lgt(gamma: float, c: float, u):
    """Logistic transition 1 / (1 + exp(-gamma (u - c)))."""
    return expit(gamma * (np.asarray(u, dtype=float) - c))


def random_walk_increments(dgp_id: int, T: int, rng: np.random.Generator) -> np.ndarray:
    """T x 4 Gaussian increments with standard deviation scale / sqrt(T)."""
    if dgp_id not in RANDOM_WALK_SCALES:
        raise ValueError(f"DGP {dgp_id} has no random-walk coefficients")
    return rng.normal(0.0, RANDOM_WALK_SCALES[dgp_id] / np.sqrt(T), size=(T, N_COEFFICIENTS))


def coefficient_path(dgp_id: int, j: int, t, T: int, increments: Optional[np.ndarray] = None):
    """beta_j(t/T) for coefficient j in 1..4 at period(s) t in 0..T.

    Random-walk DGPs need ``increments`` (T x 4, or length T for column j)
    and start from beta_j(0) = 0.
    """
    if not 1 <= j <= N_COEFFICIENTS:
        raise ValueError("Coefficient index j must be in 1..4")
    t_arr = np.asarray(t, dtype=float)
    u = t_arr / T
    if dgp_id in (1, 2):
        out = np.zeros_like(u)
    elif dgp_id in BREAK_FRACTIONS:
        out = np.where(t_arr > BREAK_FRACTIONS[dgp_id] * T, -1.0, 0.0)
    elif dgp_id in RANDOM_WALK_SCALES:
        if increments is None:
            raise ValueError(f"DGP {dgp_id} needs random-walk increments")
        inc = np.asarray(increments, dtype=float)
        inc = inc[:, j - 1] if inc.ndim == 2 else inc
        path = np.concatenate([[0.0], np.cumsum(inc)])
        out = path[t_arr.astype(int)]
    elif dgp_id in LOGISTIC_CENTERS:
        out = lgt(GAMMAS[j - 1], LOGISTIC_CENTERS[dgp_id], u)
    elif dgp_id == 11:
        out = (-0.3 * u**2, u**2, -0.4 * u, u)[j - 1]
    elif dgp_id == 12:
        out = (np.zeros_like(u), np.zeros_like(u), 3.0 * np.cos(2 * np.pi * u), 2.0 * u * np.sin(2 * np.pi * u))[j - 1]
    else:
        raise ValueError(f"Unknown DGP id {dgp_id}")
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def toeplitz_power(d: int, base: float) -> np.ndarray:
    """{base^(|i-j|+1)}."""
    idx = np.arange(d)
    return base ** (np.abs(idx[:, None] - idx[None, :]) + 1.0)


def transition_matrix(spec: DgpSpec, u: float) -> np.ndarray:
    if spec.locally_stationary:
        return (1.0 - u) * toeplitz_power(spec.d, 0.2) + u * toeplitz_power(spec.d, 0.4)
    return toeplitz_power(spec.d, 0.4)


def draw_innovations(innovation: Innovation, rng: np.random.Generator, size) -> np.ndarray:
    """Unit-variance Gaussian or scaled Student t(5) draws."""
    if innovation is Innovation.T5:
        return rng.standard_t(5, size=size) * T5_SCALE
    return rng.standard_normal(size=size)


def error_scale(spec: DgpSpec, t: int) -> float:
    if spec.dgp_id != 2 or t < VARIANCE_BREAK_FRACTION * spec.T:
        return spec.noise_scale
    if spec.variance_break is VarianceBreak.VARIANCE:
        return spec.noise_scale * np.sqrt(POST_BREAK_DISPERSION)
    return spec.noise_scale * POST_BREAK_DISPERSION


def coefficient_matrix(spec: DgpSpec, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """(T + 1) x 4 matrix of beta_j(t/T) for t = 0..T."""
    increments = None
    if spec.dgp_id in RANDOM_WALK_SCALES:
        increments = random_walk_increments(spec.dgp_id, spec.T, rng)
    t = np.arange(spec.T + 1)
    return np.column_stack(
        [
            np.broadcast_to(coefficient_path(spec.dgp_id, j, t, spec.T, increments), t.shape)
            for j in range(1, N_COEFFICIENTS + 1)
        ]
    )


def simulate(spec: DgpSpec, rng: Optional[np.random.Generator] = None) -> tuple[np.ndarray, np.ndarray]:
    """Simulate (Y, Z) with Y of length T and Z of shape T x d.

    The burn-in starts from zero states and runs with the t = 0 coefficients
    and transition matrix; it is discarded.
    """
    rng = rng or replication_rng(spec.seed, 0)
    beta = coefficient_matrix(spec, rng)
    total = spec.burn_in + spec.T
    eta = draw_innovations(spec.innovation, rng, (total, spec.d))
    eps = draw_innovations(spec.innovation, rng, total)

    fixed_a = None if spec.locally_stationary else transition_matrix(spec, 0.0)
    y_prev, z_prev = 0.0, np.zeros(spec.d)
    Y = np.empty(spec.T)
    Z = np.empty((spec.T, spec.d))
    for s in range(total):
        t = max(s - spec.burn_in + 1, 0)
        a = fixed_a if fixed_a is not None else transition_matrix(spec, t / spec.T)
        z = a @ z_prev + eta[s]
        y = (
            spec.rho * y_prev
            + (spec.base_coef + beta[t]) @ z_prev[:N_COEFFICIENTS]
            + error_scale(spec, t) * eps[s]
        )
        if t >= 1:
            Y[t - 1] = y
            Z[t - 1] = z
        y_prev, z_prev = y, z
    return Y, Z


def simulation_panel(Y: np.ndarray, Z: np.ndarray, start: str = "1900-01") -> Panel:
    """Monthly panel with columns y, z1..zd, all at level code."""
    names = ("y",) + tuple(f"z{i + 1}" for i in range(Z.shape[1]))
    return Panel(
        values=np.column_stack([Y, Z]),
        dates=pd.period_range(start, periods=Y.size, freq="M"),
        names=names,
    )


# ── Factor-structured macro panel ────────────────────────────────────

_RAW_CODES = (TransformCode.LEVEL, TransformCode.DIFF, TransformCode.DIFF_LOG)


def _to_levels(x: np.ndarray, code: TransformCode) -> np.ndarray:
    if code is TransformCode.LEVEL:
        return x
    if code is TransformCode.DIFF:
        return 50.0 + np.cumsum(x)
    return 100.0 * np.exp(np.cumsum(x / 100.0))


def simulate_factor_panel(
    T: int = 360,
    n_series: int = 20,
    k: int = 2,
    rng: Optional[np.random.Generator] = None,
    time_varying: bool = True,
    start: str = "1960-01",
    noise: float = 0.5,
) -> Panel:
    """Raw-level panel with transform codes: a target ``y`` and ``x01..xNN``.

    Predictors load on ``k`` AR(1) factors. The target's annualized log growth
    depends on the lagged factors, with a logistic shift in the first
    coefficient when ``time_varying``.
    """
    if k < 1 or n_series < k:
        raise ValueError("Need 1 <= k <= n_series")
    rng = rng or replication_rng(0, 0)
    factors = np.zeros((T, k))
    shocks = rng.standard_normal((T, k))
    for t in range(1, T):
        factors[t] = 0.5 * factors[t - 1] + shocks[t]
    loadings = rng.normal(1.0, 0.5, size=(n_series, k)) * rng.choice([-1.0, 1.0], size=(n_series, k))
    stationary = factors @ loadings.T + noise * rng.standard_normal((T, n_series))

    u = np.arange(1, T + 1) / T
    coef = np.tile(np.linspace(1.0, 0.5, k), (T, 1))
    if time_varying:
        coef[:, 0] += -2.0 * lgt(10.0, 0.6, u)
    growth = np.zeros(T)
    growth[1:] = 2.0 + np.einsum("ij,ij->i", coef[1:], factors[:-1]) + noise * rng.standard_normal(T - 1)
    target = 100.0 * np.exp(np.cumsum(growth) / 1200.0)

    codes = [TransformCode.DIFF_LOG]
    columns = [target]
    for i in range(n_series):
        code = _RAW_CODES[i % len(_RAW_CODES)]
        codes.append(code)
        columns.append(_to_levels(stationary[:, i], code))
    return Panel(
        values=np.column_stack(columns),
        dates=pd.period_range(start, periods=T, freq="M"),
        names=("y",) + tuple(f"x{i + 1:02d}" for i in range(n_series)),
        codes=tuple(codes),
    )
