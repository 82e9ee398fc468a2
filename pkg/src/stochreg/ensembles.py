"""Random and structured step-process ensembles for the probes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .grid import TimeGrid
from .seeding import generator
from .stochastic import StepProcess

KINDS = ("gaussian", "uniform", "blocks", "spikes", "decaying")


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    count: int
    n_modes: int
    n_noise: int = 1
    seed: int = 0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown ensemble kind {self.kind!r}; know {KINDS}")
        if self.count < 1 or self.n_modes < 1 or self.n_noise < 1:
            raise ValidationError(f"invalid ensemble dimensions in {self}")

    def describe(self) -> str:
        return f"{self.kind}(count={self.count}, K={self.n_modes}, m={self.n_noise}, seed={self.seed})"


def random_step_process(grid: TimeGrid, n_modes: int, n_noise: int, kind: str,
                        rng: np.random.Generator, scale: float = 1.0) -> StepProcess:
    shape = (grid.steps, n_modes, n_noise)
    if kind == "gaussian":
        values = rng.normal(0.0, scale, shape)
    elif kind == "uniform":
        values = rng.uniform(-scale, scale, shape)
    elif kind == "blocks":
        # indicator blocks: a random window per (mode, dim) with random height
        values = np.zeros(shape)
        for k in range(n_modes):
            for h in range(n_noise):
                a, b = np.sort(rng.integers(0, grid.steps + 1, size=2))
                if a == b:
                    b = min(a + 1, grid.steps)
                values[a:b, k, h] = rng.normal(0.0, scale)
    elif kind == "spikes":
        values = np.zeros(shape)
        n_spikes = max(1, grid.steps // 16)
        for k in range(n_modes):
            for h in range(n_noise):
                idx = rng.integers(0, grid.steps, size=n_spikes)
                values[idx, k, h] = rng.normal(0.0, scale * np.sqrt(grid.steps / n_spikes))
    elif kind == "decaying":
        profile = np.exp(-np.linspace(0.0, 4.0, grid.steps))
        values = rng.normal(0.0, scale, shape) * profile[:, None, None]
    else:
        raise ValidationError(f"unknown ensemble kind {kind!r}")
    return StepProcess(values, grid)


def step_ensemble(grid: TimeGrid, spec: EnsembleSpec) -> list[StepProcess]:
    """Deterministic ensemble: member j is a pure function of (spec.seed, j)."""
    out = []
    for j in range(spec.count):
        rng = generator(spec.seed, j)
        out.append(random_step_process(grid, spec.n_modes, spec.n_noise,
                                       spec.kind, rng, spec.scale))
    return out
