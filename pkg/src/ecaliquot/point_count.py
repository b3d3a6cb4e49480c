"""Counting |E(F_p)| and the Frobenius trace a_p(E) = p + 1 - |E(F_p)|.

Three independent routes are provided: exhaustive enumeration (tiny p), the
quadratic character sum (O(p)), and baby-step giant-step inside the Hasse
window (O(p^(1/4)) group operations). ``order`` picks the cheapest exact one.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .ff_curve import ReducedCurve, legendre

# BSGS can be ambiguous for tiny p; exhaustive methods are cheaper there anyway.
BSGS_MIN_P = 230
CHARSUM_MAX_P = 10**7


class AmbiguousOrder(RuntimeError):
    """The Hasse window holds several admissible group orders after every retry."""


@dataclass(frozen=True)
class FrobeniusData:
    p: int
    order: int
    a_p: int

    def __post_init__(self):
        if self.order != self.p + 1 - self.a_p:
            raise ValueError("order and a_p are inconsistent")
        if self.a_p * self.a_p > 4 * self.p:
            raise ValueError(f"Hasse bound violated: a_p={self.a_p}, p={self.p}")


def hasse_window(p: int) -> tuple[int, int]:
    """Inclusive range of integers N with |p + 1 - N| <= 2 sqrt(p)."""
    b = math.isqrt(4 * p)
    return p + 1 - b, p + 1 + b


def _check_hasse(p: int, n: int) -> int:
    lo, hi = hasse_window(p)
    assert lo <= n <= hi, f"|E(F_{p})| = {n} outside the Hasse window"
    return n


def order_naive(curve: ReducedCurve) -> int:
    """Count points by trying every (x, y); the slow oracle."""
    curve.require_good()
    p = curve.p
    if p >= 1 << 31:
        raise ValueError("order_naive is for small p only")
    a1, a2, a3, a4, a6 = curve.coefficients
    ys = np.arange(p, dtype=np.int64)
    total = 1
    for x in range(p):
        lin = (a1 * x + a3) % p
        lhs = (ys * ys + lin * ys) % p
        rhs = (x * x * x + a2 * x * x + a4 * x + a6) % p
        total += int(np.count_nonzero(lhs == rhs))
    return _check_hasse(p, total)


def order_charsum(curve: ReducedCurve) -> int:
    """p + 1 + sum_x chi(4x^3 + b2 x^2 + 2 b4 x + b6) for odd p (completed square)."""
    curve.require_good()
    p = curve.p
    if p == 2:
        raise ValueError("character sum needs odd p; use order_naive")
    if p > CHARSUM_MAX_P:
        raise ValueError(f"p={p} too large for the O(p) character sum")
    a1, a2, a3, a4, a6 = curve.coefficients
    b2 = (a1 * a1 + 4 * a2) % p
    b4 = (2 * a4 + a1 * a3) % p
    b6 = (a3 * a3 + 4 * a6) % p
    x = np.arange(p, dtype=np.int64)
    f = (4 * x + b2) % p
    f = (f * x + 2 * b4) % p
    f = (f * x + b6) % p
    is_square = np.zeros(p, dtype=bool)
    is_square[(x * x) % p] = True
    chi_sum = 2 * int(np.count_nonzero(is_square[f] & (f != 0))) - int(np.count_nonzero(f != 0))
    return _check_hasse(p, p + 1 + chi_sum)


def _short_curve(p: int, a: int, b: int) -> ReducedCurve:
    return ReducedCurve(p, 0, 0, 0, a % p, b % p, good_reduction=True)


def _window_multiples(E: ReducedCurve, P, lo: int, hi: int) -> list[int]:
    """All N in [lo, hi] with N*P = O, by a full baby-step giant-step scan."""
    width = hi - lo
    m = math.isqrt(width) + 1
    baby: dict[int, list[tuple[int, int]]] = {}
    Q = None
    for j in range(1, m):
        Q = E.add(Q, P)
        if Q is None:
            # ord(P) = j is small: its multiples are the answer
            return list(range(-(-lo // j) * j, hi + 1, j))
        baby.setdefault(Q[0], []).append((j, Q[1]))
    stride = E.scalar_mul(m, P)
    G = E.scalar_mul(lo, P)
    found = []
    k = 0
    p = E.p
    while k * m <= width:
        base = lo + k * m
        if G is None:
            found.append(base)
        else:
            for j, y in baby.get(G[0], ()):
                # G = -jP  <=>  (base + j) P = O
                if (y + G[1]) % p == 0:
                    found.append(base + j)
        G = E.add(G, stride)
        k += 1
    return sorted(n for n in set(found) if lo <= n <= hi)


def _seed(curve: ReducedCurve) -> int:
    return hash((curve.p,) + curve.coefficients) & 0xFFFFFFFF


def order_bsgs(curve: ReducedCurve, attempts: int = 16) -> int:
    """Exact |E(F_p)| via baby-step giant-step with quadratic-twist disambiguation.

    Random points on E and on its quadratic twist are drawn alternately; each
    one restricts the admissible orders in the Hasse window to multiples of its
    own order. After ``attempts`` rounds without a unique survivor the O(p)
    character sum decides, or AmbiguousOrder is raised beyond its range.
    """
    curve.require_good()
    p = curve.p
    if p < BSGS_MIN_P:
        return order_naive(curve) if p < 5 else order_charsum(curve)
    a1, a2, a3, a4, a6 = curve.coefficients
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    c4 = b2 * b2 - 24 * b4
    c6 = -(b2**3) + 36 * b2 * b4 - 216 * b6
    A, B = (-27 * c4) % p, (-54 * c6) % p
    nonresidue = next(d for d in range(2, p) if legendre(d, p) == -1)
    E = _short_curve(p, A, B)
    twist = _short_curve(p, A * nonresidue**2, B * nonresidue**3)
    lo, hi = hasse_window(p)
    rng = random.Random(_seed(curve))
    candidates: set[int] | None = None
    for attempt in range(attempts):
        on_twist = attempt % 2 == 1
        C = twist if on_twist else E
        P = C.random_point(rng)
        mults = _window_multiples(C, P, lo, hi)
        orders = {2 * p + 2 - n for n in mults} if on_twist else set(mults)
        candidates = orders if candidates is None else candidates & orders
        if len(candidates) == 1:
            return _check_hasse(p, candidates.pop())
        if not candidates:
            raise AssertionError(f"no admissible order at p={p}; arithmetic bug")
    if p <= CHARSUM_MAX_P:
        return order_charsum(curve)
    raise AmbiguousOrder(f"p={p}: candidates {sorted(candidates)} after {attempts} attempts")


def order(curve: ReducedCurve) -> int:
    """|E(F_p)| by the cheapest exact method for this p."""
    p = curve.p
    if p < 5:
        return order_naive(curve)
    if p < BSGS_MIN_P:
        return order_charsum(curve)
    return order_bsgs(curve)


def a_p(curve: ReducedCurve) -> int:
    return curve.p + 1 - order(curve)


def frobenius(curve: ReducedCurve) -> FrobeniusData:
    n = order(curve)
    return FrobeniusData(curve.p, n, curve.p + 1 - n)
