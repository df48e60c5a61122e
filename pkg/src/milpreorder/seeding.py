"""Deterministic seed derivation.

All randomness in the toolkit flows from one root seed expanded into named
substreams, so every component draws from its own reproducible stream no
matter how the surrounding code evolves.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream(root_seed: int, *names) -> int:
    """Derive a 63-bit seed for the substream identified by names."""
    tag = ":".join([str(int(root_seed))] + [str(n) for n in names])
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def rng_for(root_seed: int, *names) -> np.random.Generator:
    return np.random.default_rng(substream(root_seed, *names))
