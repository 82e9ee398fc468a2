"""Result records shared by the probe modules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ValidationError


@dataclass(frozen=True)
class RatioStatistic:
    """Numerator/denominator norms of one inequality probe.

    `mc_standard_error` is 0 for deterministic (quadrature) evaluations.
    `flags` records hypothesis violations the probe tolerated, e.g. the
    deliberate p = 2, q > 2 runs of the counterexample harness.
    """

    numerator: float
    denominator: float
    ratio: float
    mc_standard_error: float = 0.0
    horizon: float = math.nan
    steps: int = 0
    n_mc: int = 0
    n_modes: int = 0
    p: float = math.nan
    q: float = math.nan
    theta: float = 0.0
    delta: float = 0.0
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.denominator > 0.0:
            raise ValidationError(f"denominator must be positive, got {self.denominator}")
        if not math.isclose(self.ratio, self.numerator / self.denominator,
                            rel_tol=1e-12, abs_tol=1e-300):
            raise ValidationError("ratio field inconsistent with numerator/denominator")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps if self.steps else math.nan


@dataclass(frozen=True)
class TracePoint:
    label: str
    value: float


@dataclass(frozen=True)
class ConstantEstimate:
    """Supremum of probe ratios over an ensemble, with its refinement trace."""

    sup_ratio: float
    witness: str
    ensemble: str
    trace: tuple[TracePoint, ...] = ()
    members: tuple[RatioStatistic, ...] = field(default=(), repr=False)
