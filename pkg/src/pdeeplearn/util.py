"""Small shared helpers: seeded RNG streams and exact fractions."""

from __future__ import annotations

import hashlib
from fractions import Fraction
from typing import Union

import numpy as np


def stream_rng(seed: int, *key: Union[int, str]) -> np.random.Generator:
    """Deterministic, platform-independent RNG for a (seed, key...) stream.

    String key parts are hashed with sha256 so the derivation does not
    depend on the process hash seed.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for part in key:
        if isinstance(part, str):
            digest = hashlib.sha256(part.encode("utf-8")).digest()
            entropy.append(int.from_bytes(digest[:8], "big"))
        else:
            entropy.append(int(part) & 0xFFFFFFFFFFFFFFFF)
    return np.random.default_rng(entropy)


def as_fraction(value: Union[int, float, str, Fraction]) -> Fraction:
    """Exact fraction for a threshold; floats go through their repr so that
    0.4 means 2/5, not the nearest binary double."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)
