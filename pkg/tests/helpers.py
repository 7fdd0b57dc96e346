"""Shared builders for the test suite: small codec specs and random chunks."""

from __future__ import annotations

import numpy as np

from llrft.codec import ActionChunk, CodecSpec, NormalizationStats


def spec_for(h: int, d: int, q: int, compression: str = "none",
             lower=None, upper=None) -> CodecSpec:
    if lower is None:
        lower = np.zeros(d)
    if upper is None:
        upper = np.ones(d)
    return CodecSpec(h=h, d=d, q=q, compression=compression,
                     stats=NormalizationStats(lower=np.asarray(lower, dtype=np.float64),
                                              upper=np.asarray(upper, dtype=np.float64)))


def random_chunk(rng: np.random.Generator, spec: CodecSpec,
                 binary_grip: bool = True) -> ActionChunk:
    """A chunk inside the spec's bounds; the gripper channel is drawn from
    {0, 1} by default because that is its domain in the data model."""
    lo, hi = spec.stats.lower, spec.stats.upper
    values = rng.uniform(lo, hi, size=(spec.h, spec.d))
    if binary_grip:
        values[:, -1] = rng.integers(0, 2, size=spec.h).astype(np.float64)
    return ActionChunk(values=values)


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
