"""Small prime utilities shared by the sieve, density and zeta modules."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def prime_mask(limit: int) -> np.ndarray:
    """Boolean array ``m`` of length ``limit + 1`` with ``m[k]`` true iff k is prime."""
    if limit < 1:
        return np.zeros(max(limit + 1, 0), dtype=bool)
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, int(limit**0.5) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return mask


@lru_cache(maxsize=16)
def _primes_cached(limit: int) -> np.ndarray:
    arr = np.flatnonzero(prime_mask(limit)).astype(np.int64)
    arr.setflags(write=False)
    return arr


def primes_up_to(limit: int) -> np.ndarray:
    """All primes ``p <= limit`` as a read-only int64 array."""
    return _primes_cached(int(limit))


def smallest_prime_factor(limit: int) -> np.ndarray:
    """``spf[n]`` for ``0 <= n <= limit`` (``spf[0] = spf[1] = 0``)."""
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in primes_up_to(int(limit**0.5)):
        block = spf[p * p :: p]
        block[block == 0] = p
    idx = np.arange(limit + 1)
    unset = (spf == 0) & (idx >= 2)
    spf[unset] = idx[unset]
    return spf


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True
