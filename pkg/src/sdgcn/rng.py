"""Seeded, splittable randomness.

Every random draw in the package flows through an :class:`RngStream`, a thin
wrapper over numpy's counter-based Philox generator. Streams are derived from
a 64-bit seed plus a string label, so data shuffling, parameter init, and
dropout each get an independent stream that is reproducible in isolation:
the same seed and label always yield the same draw sequence, regardless of
what other streams consumed.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import ConfigError

ALGORITHM = "philox4x64"


def _derive_key(seed: int, label: str) -> np.ndarray:
    # Philox4x64 takes a 2-word key; hash (seed, label) into 16 bytes.
    digest = hashlib.blake2b(
        label.encode("utf-8"), digest_size=16, key=(seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    ).digest()
    return np.frombuffer(digest, dtype=np.uint64)


class RngStream:
    """One reproducible random stream identified by (seed, label)."""

    def __init__(self, seed: int, label: str = "root"):
        if not isinstance(seed, int):
            raise ConfigError(f"seed must be an integer, got {type(seed).__name__}")
        self.seed = seed
        self.label = label
        self._gen = np.random.Generator(np.random.Philox(key=_derive_key(seed, label)))

    def child(self, label: str) -> "RngStream":
        """Derive an independent stream; children never perturb the parent."""
        return RngStream(self.seed, f"{self.label}/{label}")

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape).astype(np.float64)

    def normal(self, mean: float, std: float, shape) -> np.ndarray:
        return self._gen.normal(mean, std, size=shape).astype(np.float64)

    def random(self, shape) -> np.ndarray:
        """Uniform draws in [0, 1)."""
        return self._gen.random(size=shape, dtype=np.float64)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def integers(self, low: int, high: int, size=None):
        """One int in [low, high), or an array of them when size is given."""
        if size is None:
            return int(self._gen.integers(low, high))
        return self._gen.integers(low, high, size=size)

    def choice(self, items):
        return items[self.integers(0, len(items))]

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, label={self.label!r}, algorithm={ALGORITHM})"


def word_rng(seed: int, word: str) -> RngStream:
    """Stream for a single vocabulary word; independent of insertion order."""
    return RngStream(seed, f"word/{word}")
