"""Deterministic, order-independent random substreams.

Every stochastic step in the pipeline draws from its own substream derived
from the master seed plus a structural path (scenario id, sample index,
purpose tag, ...). Substreams are independent by construction, so samples
can be generated in any order or in parallel and still reproduce
bit-identically. String path parts are hashed with SHA-256 rather than
Python's ``hash()`` so derivation is stable across interpreter runs.
"""

from __future__ import annotations

import hashlib

import numpy as np

PathPart = int | str


def _entropy_words(part: PathPart) -> list[int]:
    # Each part is framed with a type tag (and length for ints) so that no
    # two distinct paths can encode to the same entropy sequence.
    if isinstance(part, (int, np.integer)):
        value = int(part)
        if value < 0:
            raise ValueError(f"substream path ints must be >= 0, got {value}")
        words = []
        while True:
            words.append(value & 0xFFFFFFFF)
            value >>= 32
            if not value:
                return [1, len(words)] + words
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return [2] + [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    raise TypeError(f"substream path parts must be int or str, got {type(part)!r}")


def substream(master_seed: int, *path: PathPart) -> np.random.Generator:
    """Return an independent generator keyed by (master_seed, *path)."""
    entropy: list[int] = []
    for part in (master_seed, *path):
        entropy.extend(_entropy_words(part))
    return np.random.default_rng(np.random.SeedSequence(entropy))
