"""Sampled one-dimensional signal carried between modules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

AXIS_KINDS = ("time", "field", "temperature", "frequency")


@dataclass(frozen=True)
class Trace:
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray | None = None
    axis_kind: str = "time"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or x.shape != y.shape:
            raise DomainError("x and y must be 1-D arrays of equal length")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise DomainError("x must be strictly increasing")
        if self.sigma is not None:
            s = np.asarray(self.sigma, dtype=float)
            if s.shape != x.shape or np.any(s <= 0):
                raise DomainError("sigma must be positive and match x")
            object.__setattr__(self, "sigma", s)
        if self.axis_kind not in AXIS_KINDS:
            raise DomainError(f"axis_kind must be one of {AXIS_KINDS}")

    def __len__(self):
        return self.x.size
