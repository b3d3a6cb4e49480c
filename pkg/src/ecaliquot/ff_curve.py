"""Weierstrass models over Q, their reductions mod p, and the group law on E(F_p).

Points are plain tuples ``(x, y)`` of residues; ``None`` is the point at infinity.
The long Weierstrass form is used throughout, so the formulas are valid in every
characteristic including 2 and 3.
"""

from __future__ import annotations

import ast
import random
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

from .primes import is_prime

CurvePoint = Optional[Tuple[int, int]]
INFINITY: CurvePoint = None


class BadReduction(ValueError):
    """Raised when an operation needs good reduction at p and the curve has bad reduction there."""


def squarefree_part(n: int) -> int:
    """sign(n) times the product of the primes dividing n to odd multiplicity."""
    if n == 0:
        raise ValueError("squarefree part of 0 is undefined")
    sign = -1 if n < 0 else 1
    n = abs(n)
    out = 1
    q = 2
    while q * q <= n:
        e = 0
        while n % q == 0:
            n //= q
            e += 1
        if e % 2:
            out *= q
        q += 1 if q == 2 else 2
    return sign * out * n


@dataclass(frozen=True)
class RationalCurveModel:
    """Integral long Weierstrass model y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6."""

    a1: int = 0
    a2: int = 0
    a3: int = 0
    a4: int = 0
    a6: int = 0

    def __post_init__(self):
        if self.discriminant == 0:
            raise ValueError(f"singular Weierstrass model {self.coefficients}")

    @classmethod
    def short(cls, a: int, b: int) -> "RationalCurveModel":
        """Embed y^2 = x^3 + a x + b."""
        return cls(0, 0, 0, a, b)

    @property
    def coefficients(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def b_invariants(self) -> tuple[int, int, int, int]:
        a1, a2, a3, a4, a6 = self.coefficients
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def c_invariants(self) -> tuple[int, int]:
        b2, b4, b6, _ = self.b_invariants
        return b2 * b2 - 24 * b4, -(b2**3) + 36 * b2 * b4 - 216 * b6

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @property
    def short_model(self) -> tuple[int, int]:
        """(A, B) with y^2 = x^3 + A x + B isomorphic to this model away from 2 and 3."""
        c4, c6 = self.c_invariants
        return -27 * c4, -54 * c6

    def reduce(self, p: int) -> "ReducedCurve":
        return reduce(self, p)

    def __str__(self) -> str:
        return "[" + ",".join(str(a) for a in self.coefficients) + "]"


def discriminant(model: RationalCurveModel) -> int:
    return model.discriminant


def parse_curve(text: str) -> RationalCurveModel:
    """Parse ``[a1,a2,a3,a4,a6]`` (or the short form ``[a4,a6]``)."""
    try:
        values = ast.literal_eval(text.strip())
    except (ValueError, SyntaxError) as exc:
        raise ValueError(f"cannot parse curve {text!r}") from exc
    if not isinstance(values, (list, tuple)) or not all(isinstance(v, int) for v in values):
        raise ValueError(f"curve must be a list of integers, got {text!r}")
    if len(values) == 2:
        return RationalCurveModel.short(*values)
    if len(values) != 5:
        raise ValueError(f"curve needs 5 (or 2) coefficients, got {len(values)}")
    return RationalCurveModel(*values)


@dataclass(frozen=True)
class ReducedCurve:
    """A Weierstrass model reduced modulo a prime p."""

    p: int
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    good_reduction: bool

    @property
    def coefficients(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    def require_good(self) -> None:
        if not self.good_reduction:
            raise BadReduction(f"bad reduction at p={self.p}")

    def contains(self, P: CurvePoint) -> bool:
        if P is None:
            return True
        x, y = P
        p = self.p
        lhs = (y * y + self.a1 * x * y + self.a3 * y) % p
        rhs = (x * x * x + self.a2 * x * x + self.a4 * x + self.a6) % p
        return lhs == rhs

    def negate(self, P: CurvePoint) -> CurvePoint:
        if P is None:
            return None
        x, y = P
        return (x, (-y - self.a1 * x - self.a3) % self.p)

    def add(self, P: CurvePoint, Q: CurvePoint) -> CurvePoint:
        if P is None:
            return Q
        if Q is None:
            return P
        p = self.p
        a1, a2, a3, a4, _ = self.coefficients
        x1, y1 = P
        x2, y2 = Q
        if x1 == x2:
            if (y1 + y2 + a1 * x2 + a3) % p == 0:
                return None
            num = 3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1
            den = 2 * y1 + a1 * x1 + a3
        else:
            num = y2 - y1
            den = x2 - x1
        lam = num * pow(den % p, -1, p) % p
        nu = (y1 - lam * x1) % p
        x3 = (lam * lam + a1 * lam - a2 - x1 - x2) % p
        y3 = (-(lam + a1) * x3 - nu - a3) % p
        return (x3, y3)

    def double(self, P: CurvePoint) -> CurvePoint:
        return self.add(P, P)

    def scalar_mul(self, k: int, P: CurvePoint) -> CurvePoint:
        if k < 0:
            return self.scalar_mul(-k, self.negate(P))
        result: CurvePoint = None
        addend = P
        while k:
            if k & 1:
                result = self.add(result, addend)
            addend = self.add(addend, addend)
            k >>= 1
        return result

    def points(self) -> Iterator[CurvePoint]:
        """Every point of E(F_p), infinity first. O(p^2); for small p only."""
        yield None
        p = self.p
        for x in range(p):
            for y in range(p):
                if self.contains((x, y)):
                    yield (x, y)

    def random_point(self, rng: random.Random) -> Tuple[int, int]:
        """A uniformly chosen x with a solution y; needs p odd."""
        p = self.p
        if p == 2:
            affine = [P for P in self.points() if P is not None]
            if not affine:
                raise ValueError("E(F_2) has no affine points")
            return rng.choice(affine)
        a1, a2, a3, a4, a6 = self.coefficients
        b2 = (a1 * a1 + 4 * a2) % p
        b4 = (2 * a4 + a1 * a3) % p
        b6 = (a3 * a3 + 4 * a6) % p
        while True:
            x = rng.randrange(p)
            # (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
            rhs = (4 * x * x * x + b2 * x * x + 2 * b4 * x + b6) % p
            w = sqrt_mod(rhs, p)
            if w is None:
                continue
            if rng.getrandbits(1):
                w = (-w) % p
            y = (w - a1 * x - a3) * pow(2, -1, p) % p
            return (x, y)


def reduce(model: RationalCurveModel, p: int) -> ReducedCurve:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    good = model.discriminant % p != 0
    return ReducedCurve(p, *(a % p for a in model.coefficients), good_reduction=good)


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) for an odd prime p."""
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def sqrt_mod(a: int, p: int) -> Optional[int]:
    """A square root of a mod the odd prime p, or None (Tonelli-Shanks)."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r
