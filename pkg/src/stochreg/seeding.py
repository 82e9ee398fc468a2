"""Deterministic seed derivation and RNG construction.

Path-level reproducibility works by deriving one 64-bit seed per path index
from a master seed with a SplitMix64 finalizer, then keying a counter-based
Philox generator with it.  The derivation is injective in the index for a
fixed master (odd increment + bijective finalizer), so distinct indices can
never collide.  Results are therefore independent of scheduling: any worker
that owns path ``i`` produces the same stream.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

RNG_ALGORITHM = "philox4x64 keyed by splitmix64(master, index)"


def derive_seed(master: int, index: int) -> int:
    """Derive the 64-bit seed for stream `index` under `master`."""
    z = (master + (index + 1) * _GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def derive_seeds(master: int, indices) -> np.ndarray:
    """Vectorized `derive_seed` over an array of indices (returns uint64)."""
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(master & MASK64) + (idx + np.uint64(1)) * np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def generator(master: int, index: int = 0) -> np.random.Generator:
    """Philox generator for stream `index` of `master`."""
    return np.random.Generator(np.random.Philox(key=derive_seed(master, index)))
