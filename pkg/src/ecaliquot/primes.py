"""Prime generation and deterministic primality testing."""

from __future__ import annotations

import math

import numpy as np

# Witness set proven sufficient for every n < 2^64 (Sinclair, 2011).
_MR_WITNESSES = (2, 325, 9375, 28178, 450775, 9780504, 1795265022)
_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all n < 2**64."""
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n % q == 0:
            return n == q
    if n < 41 * 41:
        return True
    if n >= 1 << 64:
        raise ValueError(f"is_prime is only deterministic below 2**64, got {n}")
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        a %= n
        if a == 0:
            continue
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def sieve(n: int) -> np.ndarray:
    """Boolean primality table for 0..n inclusive."""
    flags = np.ones(max(n + 1, 2), dtype=bool)
    flags[:2] = False
    for q in range(2, math.isqrt(n) + 1):
        if flags[q]:
            flags[q * q :: q] = False
    return flags[: n + 1]


def primes_up_to(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(sieve(n)).astype(np.int64)


def segment_flags(lo: int, hi: int, base: np.ndarray | None = None) -> np.ndarray:
    """Primality flags for the integers lo <= k < hi.

    ``base`` may hold the primes up to sqrt(hi); it is computed when omitted.
    """
    lo = max(lo, 0)
    if hi <= lo:
        return np.zeros(0, dtype=bool)
    if base is None:
        base = primes_up_to(math.isqrt(hi - 1) + 1)
    flags = np.ones(hi - lo, dtype=bool)
    for q in base:
        q = int(q)
        if q * q >= hi:
            break
        start = max(q * q, (lo + q - 1) // q * q)
        flags[start - lo :: q] = False
    flags[: max(0, 2 - lo)] = False
    return flags


def primes_in_range(lo: int, hi: int, base: np.ndarray | None = None) -> np.ndarray:
    """Primes p with lo <= p < hi, as int64."""
    flags = segment_flags(lo, hi, base)
    return (np.flatnonzero(flags) + max(lo, 0)).astype(np.int64)


def iter_prime_segments(lo: int, hi: int, segment: int = 1 << 22):
    """Yield (seg_lo, seg_hi, primes) covering lo <= p < hi in ascending order."""
    base = primes_up_to(math.isqrt(max(hi, 4)) + 1)
    start = lo
    while start < hi:
        stop = min(start + segment, hi)
        yield start, stop, primes_in_range(start, stop, base)
        start = stop
