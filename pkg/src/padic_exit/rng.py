"""Reproducible random streams keyed by ``(seed, stream_id)``."""
from __future__ import annotations

import numpy as np

DEFAULT_SEED = 20240917


class RandomStream:
    """A numpy ``Generator`` whose state is a pure function of ``(seed, stream_id)``.

    Distinct stream ids give statistically independent streams, so parallel
    Monte Carlo chunks can be assigned fixed ids and results stay identical
    whatever the worker count.
    """

    def __init__(self, seed: int = DEFAULT_SEED, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"
