"""Reproducible, splittable random streams.

Each stream is a Philox counter-based generator keyed by ``(seed, stream_id)``,
so chains and folds can be given disjoint streams without sharing state.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


class RngStream:
    """Single-owner random stream keyed by a 64-bit seed and a 64-bit stream id."""

    __slots__ = ("seed", "stream_id", "generator")

    def __init__(self, seed=0, stream_id=0):
        seed = int(seed)
        stream_id = int(stream_id)
        if not (0 <= seed <= _MASK64 and 0 <= stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = seed
        self.stream_id = stream_id
        key = np.array([seed, stream_id], dtype=np.uint64)
        self.generator = np.random.Generator(np.random.Philox(key=key))

    def child(self, stream_id):
        """A fresh stream sharing this seed but with a different id."""
        return RngStream(self.seed, stream_id)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def as_stream(rng):
    """Coerce ``None``/int/RngStream into an RngStream."""
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(0, 0)
    return RngStream(int(rng), 0)
