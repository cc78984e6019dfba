"""Deterministic RNG stream derivation.

Every random object is drawn from a stream keyed by ``(seed, *keys)`` so that
results do not depend on the order in which streams are consumed.
"""
from __future__ import annotations

import numpy as np

from .errors import ValidationError

DEFAULT_SEED = 20100101

# stream tags
TRIAL = 0
BCC_LIST = 1
BCC_X = 2
MAC_BOOK = 3
GAUSS_BCC_BOOK = 4
SEARCH = 5


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([check_seed(seed), *map(int, keys)])))
