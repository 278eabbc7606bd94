"""Random streams.

Everything stochastic in the package draws from counter-based Philox
generators derived from a single 64-bit seed, so a run is reproducible
bit for bit and independent sub-streams can be split off for workers or
for separate phases (training batch, estimation batch, ...).
"""
from __future__ import annotations

import numpy as np


def make_rng(seed=None) -> np.random.Generator:
    """Return a Philox generator for ``seed``; generators pass through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def split(rng, n: int) -> list[np.random.Generator]:
    """Derive ``n`` independent child streams."""
    return make_rng(rng).spawn(n)
