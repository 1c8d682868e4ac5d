"""Configuration domains, sample points and integration results."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, pi

import numpy as np


@dataclass(frozen=True)
class ConfigDomain:
    """``n_knot`` cyclically ordered points on the knot and ``n_free`` points in R³."""

    n_knot: int
    n_free: int

    def __post_init__(self):
        if self.n_knot < 0 or self.n_free < 0:
            raise ValueError("point counts must be non-negative")

    @property
    def dim(self) -> int:
        return self.n_knot + 3 * self.n_free

    @property
    def knot_volume(self) -> float:
        """Measure of the cyclic-order cell: s_1 anywhere, the rest following in order."""
        if self.n_knot == 0:
            return 1.0
        return (2 * pi) ** self.n_knot / factorial(self.n_knot - 1)


@dataclass
class Configuration:
    s: np.ndarray
    y: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float).reshape(-1)
        self.y = np.asarray(self.y, dtype=float).reshape(-1, 3)

    @property
    def domain(self) -> ConfigDomain:
        return ConfigDomain(len(self.s), len(self.y))


@dataclass
class ConfigBatch:
    """``N`` configurations stored column-wise; ``weight`` = 1/sampling density."""

    s: np.ndarray        # (N, n_knot)
    y: np.ndarray        # (N, n_free, 3)
    weight: np.ndarray   # (N,)
    rejected: int = 0

    def __len__(self):
        return len(self.weight)

    def __getitem__(self, i) -> Configuration:
        return Configuration(self.s[i], self.y[i], float(self.weight[i]))


@dataclass
class Estimate:
    value: float
    std_error: float
    n_samples: int
    seed: int | None = None
    rejection_rate: float = 0.0
    meta: dict = field(default_factory=dict)

    def __add__(self, other: "Estimate") -> "Estimate":
        return Estimate(self.value + other.value, float(np.hypot(self.std_error, other.std_error)),
                        self.n_samples + other.n_samples, self.seed)

    def scaled(self, c: float) -> "Estimate":
        return Estimate(c * self.value, abs(c) * self.std_error, self.n_samples, self.seed,
                        self.rejection_rate, dict(self.meta))

    def consistent_with(self, target: float, nsigma: float = 3.0) -> bool:
        return abs(self.value - target) <= nsigma * self.std_error
