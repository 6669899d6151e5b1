"""Seedable random streams.

Every run owns one ``Rng``. Independent sub-streams (per trial chunk, per
worker) are derived with ``child`` so results do not depend on scheduling.
"""

import hashlib
import logging

import numpy as np

from src.config import RNG_ALGORITHM
from src.errors import PreconditionError

logger = logging.getLogger(__name__)

_BIT_GENERATORS = {
    "philox": np.random.Philox,
    "pcg64": np.random.PCG64,
    "sfc64": np.random.SFC64,
}


class Rng:
    """A named, reproducible random stream backed by a numpy Generator."""

    def __init__(self, seed: int, algorithm: str = RNG_ALGORITHM) -> None:
        if not 0 <= seed < 2**64:
            raise PreconditionError("seed must be an unsigned 64-bit integer")
        if algorithm not in _BIT_GENERATORS:
            raise PreconditionError(f"unknown rng algorithm: {algorithm}")
        self.seed = seed
        self.algorithm = algorithm
        self._generator: np.random.Generator | None = None

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            self._generator = np.random.Generator(_BIT_GENERATORS[self.algorithm](self.seed))
        return self._generator

    def child(self, label: str, index: int = 0) -> "Rng":
        """Derive an independent stream from (seed, label, index)."""
        digest = hashlib.blake2b(f"{self.seed}:{label}:{index}".encode(), digest_size=8).digest()
        return Rng(int.from_bytes(digest, "little"), self.algorithm)

    def permutation(self, k: int) -> np.ndarray:
        """Uniform 0-based permutation of range(k)."""
        return self.generator.permutation(k)

    def sample(self, population: int, size: int) -> np.ndarray:
        """``size`` distinct 0-based indices from range(population), in random order."""
        return self.generator.choice(population, size=size, replace=False)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, algorithm={self.algorithm!r})"
