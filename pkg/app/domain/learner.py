"""Componentwise kernel-weighted base learners.

The local-constant learner fits one coefficient per column; the local-linear
learner adds a slope in rescaled time around the evaluation point ``u``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from app.domain.exceptions import DegenerateColumnError, SingularLearnerError
from app.domain.kernel import WeightVector

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class LcCoef:
    alpha: float

    def __post_init__(self):
        if not np.isfinite(self.alpha):
            raise ValueError("Local-constant coefficient must be finite")

    def fitted(self, x: np.ndarray, times=None, u: float = 0.0) -> np.ndarray:
        return self.alpha * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class LlCoef:
    alpha: float
    alpha_dot: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.alpha_dot)):
            raise ValueError("Local-linear coefficients must be finite")

    def fitted(self, x: np.ndarray, times=None, u: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if times is None:
            return self.alpha * x
        return x * (self.alpha + self.alpha_dot * (np.asarray(times, dtype=float) - u))


Coef = Union[LcCoef, LlCoef]


def _weights(w) -> np.ndarray:
    return w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=float)


def lc_fit(x: np.ndarray, r: np.ndarray, w) -> LcCoef:
    """alpha = sum(w x r) / sum(w x^2)."""
    x = np.asarray(x, dtype=float)
    weights = _weights(w)
    sxx = float(np.dot(weights, x * x))
    if sxx <= 0.0:
        raise DegenerateColumnError()
    return LcCoef(alpha=float(np.dot(weights, x * np.asarray(r, dtype=float))) / sxx)


def _solve_2x2(g: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    adj = np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]])
    sol = adj @ rhs / det
    # one refinement step
    return sol + adj @ (rhs - g @ sol) / det


def ll_gram(x: np.ndarray, w, times: np.ndarray, u: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    weights = _weights(w)
    z = x * (np.asarray(times, dtype=float) - u)
    return np.array(
        [
            [np.dot(weights, x * x), np.dot(weights, x * z)],
            [np.dot(weights, x * z), np.dot(weights, z * z)],
        ]
    )


def ll_fit(x: np.ndarray, r: np.ndarray, w, times: np.ndarray, u: float) -> LlCoef:
    """Weighted least squares of r on (x, x * (times - u))."""
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    weights = _weights(w)
    gram = ll_gram(x, weights, times, u)
    eig = np.linalg.eigvalsh(gram)
    if eig[0] <= 0.0 or eig[1] / eig[0] > MAX_CONDITION:
        condition = np.inf if eig[0] <= 0.0 else eig[1] / eig[0]
        raise SingularLearnerError(condition)
    z = x * (np.asarray(times, dtype=float) - u)
    rhs = np.array([np.dot(weights, x * r), np.dot(weights, z * r)])
    alpha, alpha_dot = _solve_2x2(gram, rhs)
    return LlCoef(alpha=float(alpha), alpha_dot=float(alpha_dot))


def ll_fit_or_fallback(x: np.ndarray, r: np.ndarray, w, times: np.ndarray, u: float) -> LlCoef:
    """ll_fit, falling back to the local-constant level with zero slope."""
    try:
        return ll_fit(x, r, w, times, u)
    except SingularLearnerError as exc:
        logger.debug("Local-linear fallback to local-constant: %s", exc)
        return LlCoef(alpha=lc_fit(x, r, w).alpha, alpha_dot=0.0)


def learner_ssr(x, r, w, coef: Coef, times=None, u: float = 0.0) -> float:
    """Weighted residual sum of squares of the fitted learner."""
    resid = np.asarray(r, dtype=float) - coef.fitted(x, times, u)
    return float(np.dot(_weights(w), resid * resid))
