"""Loss functions for generic local-constant boosting."""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar


def weighted_quantile(values: np.ndarray, weights: np.ndarray, tau: float) -> float:
    """Smallest value whose cumulative normalized weight reaches ``tau``."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    keep = weights > 0
    order = np.argsort(values[keep], kind="stable")
    sorted_values = values[keep][order]
    cum = np.cumsum(weights[keep][order])
    cum /= cum[-1]
    idx = int(np.searchsorted(cum, tau - 1e-12, side="left"))
    return float(sorted_values[min(idx, sorted_values.size - 1)])


class Loss(abc.ABC):
    name: str = ""
    is_squared: bool = False

    @abc.abstractmethod
    def value(self, y: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Pointwise loss L(y, f)."""
        ...

    @abc.abstractmethod
    def negative_gradient(self, y: np.ndarray, f: np.ndarray) -> np.ndarray:
        ...

    @abc.abstractmethod
    def offset(self, y: np.ndarray, weights: np.ndarray) -> float:
        """argmin_c sum_i w_i L(y_i, c)."""
        ...

    def weighted_risk(self, y: np.ndarray, f: np.ndarray, weights: np.ndarray) -> float:
        return float(np.dot(weights, self.value(y, f)))

    def __repr__(self) -> str:
        return self.name


class SquaredLoss(Loss):
    name = "l2"
    is_squared = True

    def value(self, y, f):
        return 0.5 * (np.asarray(y) - np.asarray(f)) ** 2

    def negative_gradient(self, y, f):
        return np.asarray(y, dtype=float) - np.asarray(f, dtype=float)

    def offset(self, y, weights):
        return float(np.dot(weights, y) / np.sum(weights))


class AbsoluteLoss(Loss):
    name = "l1"

    def value(self, y, f):
        return np.abs(np.asarray(y) - np.asarray(f))

    def negative_gradient(self, y, f):
        return np.sign(np.asarray(y, dtype=float) - np.asarray(f, dtype=float))

    def offset(self, y, weights):
        return weighted_quantile(y, weights, 0.5)


@dataclass(frozen=True, repr=False)
class QuantileLoss(Loss):
    tau: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError("Quantile level tau must lie in (0, 1)")

    @property
    def name(self) -> str:
        return f"quantile:{self.tau:g}"

    def value(self, y, f):
        diff = np.asarray(y, dtype=float) - np.asarray(f, dtype=float)
        return diff * (self.tau - (diff < 0))

    def negative_gradient(self, y, f):
        # at y == f the right derivative is used
        return self.tau - (np.asarray(y) < np.asarray(f)).astype(float)

    def offset(self, y, weights):
        return weighted_quantile(y, weights, self.tau)


@dataclass(frozen=True, repr=False)
class HuberLoss(Loss):
    delta: float = 1.0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("Huber delta must be positive")

    @property
    def name(self) -> str:
        return f"huber:{self.delta:g}"

    def value(self, y, f):
        diff = np.abs(np.asarray(y, dtype=float) - np.asarray(f, dtype=float))
        return np.where(diff <= self.delta, 0.5 * diff * diff, self.delta * (diff - 0.5 * self.delta))

    def negative_gradient(self, y, f):
        return np.clip(np.asarray(y, dtype=float) - np.asarray(f, dtype=float), -self.delta, self.delta)

    def offset(self, y, weights):
        y = np.asarray(y, dtype=float)
        keep = weights > 0
        lo, hi = float(y[keep].min()), float(y[keep].max())
        if hi - lo <= 0:
            return lo
        result = minimize_scalar(
            lambda c: self.weighted_risk(y, np.full_like(y, c), weights),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-10 * max(1.0, hi - lo)},
        )
        return float(result.x)


def parse_loss(text: str) -> Loss:
    """``l2``, ``l1``, ``quantile:<tau>`` or ``huber:<delta>``."""
    text = text.strip().lower()
    if text in ("l2", "squared"):
        return SquaredLoss()
    if text in ("l1", "absolute"):
        return AbsoluteLoss()
    kind, _, arg = text.partition(":")
    try:
        if kind == "quantile":
            return QuantileLoss(tau=float(arg))
        if kind == "huber":
            return HuberLoss(delta=float(arg) if arg else 1.0)
    except ValueError as exc:
        raise ValueError(f"Invalid loss {text!r}: {exc}") from None
    raise ValueError(f"Unknown loss {text!r}; expected l2, l1, quantile:<tau> or huber:<delta>")
