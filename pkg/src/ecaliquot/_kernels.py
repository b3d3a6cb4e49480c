"""Compiled inner loops for the cycle search (p < 2^31, short Weierstrass model).

The search only needs |E(F_p)| when it is prime. For p > KERNEL_MIN_P the
first multiple N of ord(P) found in the (odd part of the) Hasse window already
decides this: N prime forces |E(F_p)| = N, and a prime |E(F_p)| is always the
unique match. So one early-exit BSGS pass per prime is enough.
"""

from __future__ import annotations

import numba
import numpy as np

KERNEL_MIN_P = 100
KERNEL_MAX_P = (1 << 31) - 1

_jit = numba.njit(cache=True, nogil=True)


@_jit
def _powmod(a, e, p):
    result = 1
    a %= p
    while e > 0:
        if e & 1:
            result = result * a % p
        a = a * a % p
        e >>= 1
    return result


@_jit
def _invmod(a, p):
    r0, r1 = p, a % p
    s0, s1 = 0, 1
    while r1 != 0:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    return s0 % p


@_jit
def _isqrt(n):
    r = int(np.sqrt(n))
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


@_jit
def _sqrtmod(a, p):
    # caller guarantees a is a nonzero square
    if p % 4 == 3:
        return _powmod(a, (p + 1) // 4, p)
    q = p - 1
    s = 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while _powmod(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m = s
    c = _powmod(z, q, p)
    t = _powmod(a, q, p)
    r = _powmod(a, (q + 1) // 2, p)
    while t != 1:
        i = 0
        t2 = t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = _powmod(c, 1 << (m - i - 1), p)
        m = i
        c = b * b % p
        t = t * c % p
        r = r * b % p
    return r


@_jit
def _ec_add(x1, y1, o1, x2, y2, o2, A, p):
    """Affine addition on y^2 = x^3 + A x + B; o* flags the point at infinity."""
    if o1:
        return x2, y2, o2
    if o2:
        return x1, y1, o1
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return 0, 0, True
        lam = (3 * x1 % p * x1 + A) % p * _invmod(2 * y1, p) % p
    else:
        lam = (y2 - y1) % p * _invmod((x2 - x1) % p, p) % p
    x3 = (lam * lam - x1 - x2) % p
    y3 = (lam * ((x1 - x3) % p) - y1) % p
    return x3, y3, False


@_jit
def _ec_mul(k, x, y, o, A, p):
    rx, ry, ro = 0, 0, True
    while k > 0:
        if k & 1:
            rx, ry, ro = _ec_add(rx, ry, ro, x, y, o, A, p)
        x, y, o = _ec_add(x, y, o, x, y, o, A, p)
        k >>= 1
    return rx, ry, ro


@_jit
def _polymulmod(u0, u1, u2, v0, v1, v2, A, B, p):
    """(u * v) mod (x^3 + A x + B) for polynomials of degree <= 2."""
    c0 = u0 * v0 % p
    c1 = (u0 * v1 + u1 * v0) % p
    c2 = (u0 * v2 % p + u1 * v1 % p + u2 * v0 % p) % p
    c3 = (u1 * v2 + u2 * v1) % p
    c4 = u2 * v2 % p
    # x^4 = -A x^2 - B x, x^3 = -A x - B
    c2 = (c2 - A * c4) % p
    c1 = (c1 - B * c4) % p
    c1 = (c1 - A * c3) % p
    c0 = (c0 - B * c3) % p
    return c0, c1, c2


@_jit
def _has_two_torsion(A, B, p):
    """Does x^3 + A x + B have a root in F_p (p >= 5)?"""
    disc = (-4 * (A * A % p) % p * A - 27 * (B * B % p)) % p
    if _powmod(disc, (p - 1) // 2, p) == p - 1:
        return True  # nonsquare discriminant: exactly one root
    # square discriminant: 0 or 3 roots; three iff x^p = x mod f
    r0, r1, r2 = 1, 0, 0
    b0, b1, b2 = 0, 1, 0
    e = p
    while e > 0:
        if e & 1:
            r0, r1, r2 = _polymulmod(r0, r1, r2, b0, b1, b2, A, B, p)
        b0, b1, b2 = _polymulmod(b0, b1, b2, b0, b1, b2, A, B, p)
        e >>= 1
    return r0 == 0 and r1 == 1 and r2 == 0


@_jit
def _random_point(A, B, p, state):
    while True:
        state = (state * 1103515245 + 12345) % 2147483648
        x = state % p
        f = ((x * x % p + A) % p * x + B) % p
        if f == 0:
            return x, 0, state
        if _powmod(f, (p - 1) // 2, p) == 1:
            return x, _sqrtmod(f, p), state


@_jit
def prime_order_candidate(p, A, B):
    """Return N with |E(F_p)| prime  <=>  (N > 0 and N prime), and then N = |E(F_p)|.

    Returns 0 when |E(F_p)| is certainly composite and -1 for bad reduction.
    Needs KERNEL_MIN_P < p <= KERNEL_MAX_P and A, B already reduced mod p.
    """
    if (4 * (A * A % p) % p * A + 27 * (B * B % p)) % p == 0:
        return -1
    if _has_two_torsion(A, B, p):
        return 0  # even order > 2
    hb = _isqrt(4 * p)
    lo = p + 1 - hb
    hi = p + 1 + hb
    n0 = lo if lo % 2 == 1 else lo + 1
    top = (hi - n0) // 2  # |E| = n0 + 2u, 0 <= u <= top, since |E| is odd
    b = max(1, _isqrt(top // 2))
    state = (p * 40503 + A * 7 + B) % 2147483648
    px, py, state = _random_point(A, B, p, state)
    qx, qy, qo = _ec_add(px, py, False, px, py, False, A, p)
    xs = np.empty(b, dtype=np.int64)
    ys = np.empty(b, dtype=np.int64)
    jx, jy, jo = 0, 0, True
    for j in range(b):
        jx, jy, jo = _ec_add(jx, jy, jo, qx, qy, qo, A, p)
        if jo:
            return 0  # ord(2P) <= b, far below the window: not prime
        xs[j] = jx
        ys[j] = jy
    order = np.argsort(xs)
    sx = xs[order]
    stride = 2 * b + 1
    # jx, jy now hold bQ
    sx_, sy_, so_ = _ec_add(jx, jy, False, jx, jy, False, A, p)
    sx_, sy_, so_ = _ec_add(sx_, sy_, so_, qx, qy, qo, A, p)
    gx, gy, go = _ec_mul(n0 + 2 * b, px, py, False, A, p)
    k = 0
    while k * stride <= top:
        # G_k = n0 P + (k*stride + b) Q; a match G_k = iQ gives u = k*stride + b - i
        if go:
            u = k * stride + b
            if u <= top:
                return n0 + 2 * u
        else:
            pos = np.searchsorted(sx, gx)
            while pos < b and sx[pos] == gx:
                j = order[pos] + 1
                i = j if ys[order[pos]] == gy else -j
                u = k * stride + b - i
                if 0 <= u <= top:
                    return n0 + 2 * u
                pos += 1
        gx, gy, go = _ec_add(gx, gy, go, sx_, sy_, so_, A, p)
        k += 1
    return 0


@_jit
def prime_order_candidates(primes, A, B, out):
    for i in range(primes.shape[0]):
        p = primes[i]
        out[i] = prime_order_candidate(p, A % p, B % p)
    return out


@_jit
def prime_order_candidates_reduced(primes, As, Bs, out):
    for i in range(primes.shape[0]):
        out[i] = prime_order_candidate(primes[i], As[i], Bs[i])
    return out


def candidates_for(primes: np.ndarray, A: int, B: int) -> np.ndarray:
    """Vectorised prime_order_candidate over an int64 array of primes."""
    primes = np.ascontiguousarray(primes, dtype=np.int64)
    out = np.empty(primes.shape[0], dtype=np.int64)
    if primes.shape[0] == 0:
        return out
    if abs(A) < 1 << 62 and abs(B) < 1 << 62:
        return prime_order_candidates(primes, A, B, out)
    As = np.array([A % int(p) for p in primes], dtype=np.int64)
    Bs = np.array([B % int(p) for p in primes], dtype=np.int64)
    return prime_order_candidates_reduced(primes, As, Bs, out)
