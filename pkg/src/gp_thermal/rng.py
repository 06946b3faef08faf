"""Reproducible random streams.

Each stream is a Philox (counter-based) generator keyed by ``(seed, *keys)``,
so chain or replica ``k`` draws the same numbers regardless of how many other
streams exist or in which order they are consumed.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed, or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(0 if rng is None else rng)


def complex_normal(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """Circular complex Gaussian with ``E|z|^2 = variance`` (broadcast over last axis)."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return np.sqrt(np.asarray(variance) / 2.0) * (z[..., 0] + 1j * z[..., 1])
