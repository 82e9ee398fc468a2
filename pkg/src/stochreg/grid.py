"""Uniform time grids.

The positive half-line is truncated to [0, T].  Cell i is [t_i, t_{i+1});
step processes carry one value per cell, simulated paths carry one value per
edge t_0..t_N.  Every time-norm in the package evaluates integrands at the
left cell edge, matching the adaptedness convention of the integrators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int

    def __post_init__(self):
        if not (self.horizon > 0.0 and np.isfinite(self.horizon)):
            raise ValidationError(f"horizon must be positive and finite, got {self.horizon}")
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)

    @property
    def cell_left(self) -> np.ndarray:
        return self.edges[:-1]

    def index_of(self, t: float) -> int:
        """Index of the grid edge equal to `t` (rejects off-grid times)."""
        n = int(round(t / self.dt))
        if n < 0 or n > self.steps or abs(n * self.dt - t) > 1e-9 * max(1.0, self.horizon):
            raise ValidationError(f"t={t} is not a grid point of {self}")
        return n

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.horizon, self.steps * factor)
