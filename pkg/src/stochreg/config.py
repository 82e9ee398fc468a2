"""Experiment configuration: one human-editable JSON document per run.

Configs round-trip losslessly through JSON; loading fills every default so
the serialized form is always fully explicit.  Two semantically equal
configs hash equal: the hash covers the canonical (sorted-key, full-repr)
JSON encoding.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from .ensembles import EnsembleSpec
from .errors import ValidationError
from .grid import TimeGrid
from .maxreg import McSpec
from .spectral import DirichletSine, FourierTorus, SpectralModel, dyadic_ladder, make_model

EXPERIMENTS = ("ito-iso", "maxreg", "counterexample", "kernels", "rbound",
               "maximal-fn", "factorization", "maximal-estimate", "shift")


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "diagonal"            # diagonal | dyadic | fourier | dirichlet
    q: float = 2.0
    eigenvalues: tuple[float, ...] = (1.0,)
    ladder_size: int = 8
    ladder_base: float = 4.0
    dim: int = 1
    n: int = 16
    shift: float = 1.0

    def build(self) -> SpectralModel:
        if self.kind == "diagonal":
            return make_model(list(self.eigenvalues), self.q)
        if self.kind == "dyadic":
            return make_model(dyadic_ladder(self.ladder_size, self.ladder_base), self.q)
        if self.kind == "fourier":
            return make_model(q=self.q, transform=FourierTorus(self.dim, self.n, self.shift))
        if self.kind == "dirichlet":
            return make_model(q=self.q, transform=DirichletSine(self.n))
        raise ValidationError(f"unknown model kind {self.kind!r}")


@dataclass(frozen=True)
class GridConfig:
    horizon: float = 1.0
    steps: int = 1000

    def build(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.steps)


@dataclass(frozen=True)
class EnsembleConfig:
    kind: str = "gaussian"
    count: int = 8
    n_modes: int = 1
    n_noise: int = 1
    seed: int = 1
    scale: float = 1.0

    def build(self) -> EnsembleSpec:
        return EnsembleSpec(self.kind, self.count, self.n_modes,
                            self.n_noise, self.seed, self.scale)


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 2000
    master_seed: int = 0
    chunk: int = 256

    def build(self) -> McSpec:
        return McSpec(self.n_paths, self.master_seed, self.chunk)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "maxreg"
    model: ModelConfig = field(default_factory=ModelConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    mc: McConfig = field(default_factory=McConfig)
    p: float = 4.0
    theta: float = 0.0
    delta: float = 0.25
    ks: tuple[int, ...] = (8, 12, 16, 20, 24)
    family_sizes: tuple[int, ...] = (2, 4, 8, 16, 32)
    dt_levels: tuple[float, ...] = (4e-3, 2e-3, 1e-3)
    maximal_fn_r: float = 1.5
    maximal_fn_s: float = 2.0
    maximal_fn_components: tuple[int, ...] = (8, 64)
    maximal_fn_samples: int = 1000
    out_dir: str = "results"
    formats: tuple[str, ...] = ("jsonl", "csv")
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(
                f"unknown experiment {self.experiment!r}; know {EXPERIMENTS}")

    def validate(self) -> None:
        """Experiment-specific hypothesis checks; raises with the offending field."""
        if self.experiment in ("maxreg", "shift"):
            if self.p < 2.0:
                raise ValidationError(
                    f"p={self.p} rejected: hypotheses require p in (2,oo) or p = q = 2")
            if not (0.0 <= self.theta < 0.5):
                raise ValidationError(f"theta={self.theta} outside [0, 1/2)")
        if self.experiment == "maximal-estimate" and self.p <= 2.0:
            raise ValidationError(
                f"p={self.p} rejected: the maximal estimate needs p in (2,oo)")
        if self.experiment == "shift" and self.delta <= 0.0:
            raise ValidationError(f"shift needs delta > 0, got {self.delta}")
        if self.experiment == "counterexample":
            if self.model.q <= 2.0:
                raise ValidationError(
                    f"counterexample needs q > 2, got q={self.model.q}")
            if any(k > 24 or k < 1 for k in self.ks):
                raise ValidationError(f"ladder sizes must lie in 1..24, got {self.ks}")

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return _from_dict(cls, data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True,
                               separators=(",", ":"), default=repr)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


_NESTED = {"model": ModelConfig, "grid": GridConfig,
           "ensemble": EnsembleConfig, "mc": McConfig}


def _from_dict(cls, data: dict):
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ValidationError(f"unknown config fields: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        sub = _NESTED.get(name)
        if sub is not None and isinstance(value, dict):
            kwargs[name] = _from_dict(sub, value)
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    return cls(**kwargs)


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_json(fh.read())
