"""Action spaces: a finite label set or an axis-aligned box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Discrete:
    n: int
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"Discrete needs n >= 2, got {self.n}")
        if self.labels and len(self.labels) != self.n:
            raise ValueError("labels must match n")

    def contains(self, action) -> bool:
        try:
            a = int(action)
        except (TypeError, ValueError):
            return False
        return float(action) == a and 0 <= a < self.n

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n))

    def label(self, a: int) -> str:
        return self.labels[a] if self.labels else str(a)


@dataclass(frozen=True)
class Box:
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        low = np.asarray(self.low, dtype=np.float64)
        high = np.asarray(self.high, dtype=np.float64)
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        if low.shape != high.shape or low.ndim != 1:
            raise ValueError("low/high must be 1-D arrays of equal shape")
        if not np.all(low < high):
            raise ValueError("Box requires low < high elementwise")

    @property
    def dim(self) -> int:
        return self.low.shape[0]

    def contains(self, action) -> bool:
        a = np.asarray(action, dtype=np.float64)
        if a.shape != self.low.shape or not np.all(np.isfinite(a)):
            return False
        return bool(np.all(a >= self.low) and np.all(a <= self.high))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high)

    def clip(self, action) -> np.ndarray:
        return np.clip(np.asarray(action, dtype=np.float64), self.low, self.high)


ActionSpace = Discrete | Box
