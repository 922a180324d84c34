"""Named, independent random streams derived from one global seed.

Each stream is a numpy ``Generator`` over PCG64, seeded from the global seed
and a SHA-256 digest of the stream label. Adding a stage that draws from a
new label never shifts the draws of any other stage.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_key(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")


def derive_rng(seed: int, label: str) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    seq = np.random.SeedSequence([seed & 0xFFFFFFFF, seed >> 32, stream_key(label)])
    return np.random.Generator(np.random.PCG64(seq))


class SeededRng:
    """Factory for named streams; ``rng.stream("gen/benign/17")``."""

    def __init__(self, seed: int):
        self.seed = int(seed)

    def stream(self, label: str) -> np.random.Generator:
        return derive_rng(self.seed, label)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed})"
