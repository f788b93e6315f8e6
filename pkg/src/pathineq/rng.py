"""Counter-based random streams keyed per sample.

Philox is counter-based, so a stream keyed by (seed, index) yields the
same draws no matter how samples are batched or scheduled; this is the
backbone of the package-wide reproducibility contract.
"""

from __future__ import annotations

import numpy as np

__all__ = ["keyed_rng", "validate_seed", "SEED_MAX"]

SEED_MAX = 2**64


def validate_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) < SEED_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    return int(seed)


def keyed_rng(seed: int, index: int) -> np.random.Generator:
    """Philox stream keyed by (seed, index); the per-sample RNG primitive."""
    key = np.array([validate_seed(seed), index % SEED_MAX], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
