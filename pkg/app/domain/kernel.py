"""Kernel families and realized weight sequences over rescaled time."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from app.domain.exceptions import DegenerateWindowError

# Support tolerance so grid points at exactly |x| = 1 survive rounding.
_SUPPORT_EPS = 1e-10


class KernelFamily(str, Enum):
    UNIFORM = "uniform"
    EPANECHNIKOV = "epanechnikov"
    GAUSSIAN = "gaussian"

    @classmethod
    def parse(cls, text: str) -> "KernelFamily":
        aliases = {"epa": cls.EPANECHNIKOV, "gauss": cls.GAUSSIAN, "unif": cls.UNIFORM}
        return aliases.get(text, None) or cls(text)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self is KernelFamily.GAUSSIAN:
            return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
        inside = np.abs(x) <= 1.0 + _SUPPORT_EPS
        if self is KernelFamily.UNIFORM:
            return np.where(inside, 1.0, 0.0)
        return np.where(inside, 0.75 * np.clip(1.0 - x * x, 0.0, None), 0.0)


class Sidedness(str, Enum):
    TWO_SIDED = "two-sided"
    ONE_SIDED_PAST = "one-sided-past"


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily = KernelFamily.UNIFORM
    bandwidth: float = 1.0
    sided: Sidedness = Sidedness.TWO_SIDED

    def __post_init__(self):
        family = self.family if isinstance(self.family, KernelFamily) else KernelFamily.parse(self.family)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "sided", Sidedness(self.sided))
        if not np.isfinite(self.bandwidth) or self.bandwidth <= 0:
            raise ValueError("Kernel bandwidth must be a positive finite number")
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    def with_bandwidth(self, bandwidth: float) -> "KernelSpec":
        return KernelSpec(family=self.family, bandwidth=bandwidth, sided=self.sided)

    def one_sided(self) -> "KernelSpec":
        return KernelSpec(family=self.family, bandwidth=self.bandwidth, sided=Sidedness.ONE_SIDED_PAST)

    def two_sided(self) -> "KernelSpec":
        return KernelSpec(family=self.family, bandwidth=self.bandwidth, sided=Sidedness.TWO_SIDED)


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1 or (weights < 0).any():
            raise ValueError("Weights must be a nonnegative vector")
        if not (weights > 0).any():
            raise DegenerateWindowError("All kernel weights are zero")
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.weights.size

    @property
    def support(self) -> np.ndarray:
        return self.weights > 0

    @property
    def effective_size(self) -> int:
        return int(self.support.sum())

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls(np.full(n, 1.0 / n))


def kernel_weights(
    spec: KernelSpec,
    times: np.ndarray,
    u: float,
    normalize: bool = True,
) -> WeightVector:
    """K_b(times - u) with K_b(x) = K(x / b) / b, optionally normalized to sum 1."""
    times = np.asarray(times, dtype=float)
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"Evaluation time u={u} outside [0, 1]")
    b = spec.bandwidth
    raw = spec.family.evaluate((times - u) / b) / b
    if spec.sided is Sidedness.ONE_SIDED_PAST:
        keep = times <= u + _SUPPORT_EPS
        if spec.family is not KernelFamily.GAUSSIAN:
            # far edge open: width b keeps ceil(b * n) rows of an n-row grid
            keep &= (times - u) / b > -1.0 + _SUPPORT_EPS
        raw = np.where(keep, raw, 0.0)
    total = raw.sum()
    if total <= 0.0:
        raise DegenerateWindowError(
            f"No {spec.family.value} kernel mass at u={u:.4f} with bandwidth {b:g}"
        )
    return WeightVector(raw / total if normalize else raw, normalized=normalize)
