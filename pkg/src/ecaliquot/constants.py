"""The conjectural constants C_{E,L} and C^{ali-sequence}_{E,L}, and the predicted counts.

C_{E,L} = phi_L(0) / L * (finite part at the model's level) * prod_{l not dividing the level} (factor at l)

The finite part is an exact rational from gl2_stats. The Euler factors use the
closed forms for L = 2, 3 (cycles) and L = 2 (sequences) and the transfer
matrix otherwise, in which case the product is truncated at MATRIX_ELL_MAX.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .galois_models import GaloisImageSpec, finite_part_table, kronecker
from .gl2_stats import (
    TraceDetTable,
    factorize,
    float_ratio,
    normalized_ratio,
    normalized_sequence_ratio,
    table_gl2_prime,
)
from .primes import primes_up_to

DEFAULT_ELL_MAX = 10**5
MATRIX_ELL_MAX = 400
FIT_RANGE = (10**3, 10**4)
# sum_{p > X} 1/p^2 <= 2 * 1.25506 / (X log X)  (Rosser-Schoenfeld bound on pi(x))
_PRIME_TAIL = 2.51012

FLAVORS = ("cycle", "sequence")


def phi(x):
    """Sato-Tate density (2/pi) sqrt(1 - x^2) on [-1, 1], zero outside."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) <= 1, 2 / np.pi * np.sqrt(np.clip(1 - x * x, 0, None)), 0.0)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def phi_L_at_zero(L: int) -> float:
    """phi_L(0) for the L-fold self-convolution of phi.

    The Fourier transform of phi is 2 J_1(k) / k, so
    phi_L(0) = (1/pi) * integral_0^inf (2 J_1(k) / k)^L dk.
    For L >= 3 the integrand decays like k^(-3L/2) and is integrated between
    consecutive zeros of J_1.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if L == 1:
        return 2 / math.pi
    if L == 2:
        return 16 / (3 * math.pi**2)

    def f(k):
        return (2 * special.j1(k) / k) ** L if k > 0 else 1.0

    zeros = special.jn_zeros(1, 4000)
    edges = np.concatenate([[0.0], zeros])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=100)[0]
    # |2 J_1(k) / k| <= 2 sqrt(2 / (pi k)) / k beyond the last zero
    K = edges[-1]
    c = 2 * math.sqrt(2 / math.pi)
    tail = c**L * K ** (1 - 1.5 * L) / (1.5 * L - 1)
    if tail > 1e-12:
        raise ArithmeticError(f"phi_{L}(0) tail {tail:.1e} too large")
    return total / math.pi


def _check_flavor(flavor: str) -> None:
    if flavor not in FLAVORS:
        raise ValueError(f"flavor must be one of {FLAVORS}, got {flavor!r}")


def euler_factor(table: TraceDetTable, L: int, flavor: str = "cycle") -> Fraction:
    """Normalised count ratio of a prime-level table (exact)."""
    _check_flavor(flavor)
    if flavor == "cycle":
        return normalized_ratio(table, L)
    return normalized_sequence_ratio(table, L)


def has_closed_form(L: int, flavor: str = "cycle") -> bool:
    return (flavor == "cycle" and L in (2, 3)) or (flavor == "sequence" and L in (1, 2))


def euler_factor_closed(ell: int, L: int, flavor: str = "cycle") -> Fraction:
    """Closed-form factor at ell for GL_2(F_ell)."""
    _check_flavor(flavor)
    if not has_closed_form(L, flavor):
        raise ValueError(f"no closed form for L={L}, flavor={flavor}")
    l = ell
    if flavor == "sequence":
        if L == 1:
            return Fraction(1)
        return Fraction(l * (l**3 - 2 * l**2 - l + 3), (l - 1) ** 3 * (l + 1))
    den = ((l * l - 1) * (l - 1)) ** L
    if L == 2:
        return Fraction(l**2 * (l**4 - 2 * l**3 - 2 * l**2 + 3 * l + 3), den)
    chi = kronecker(-3, l)
    poly = l**6 - 3 * l**5 - 3 * l**4 + 14 * l**3 + (3 + chi) * l**2 - (19 + 3 * chi) * l - 10 - 3 * chi
    return Fraction(l**3 * poly, den)


def _closed_form_array(ells: np.ndarray, L: int, flavor: str) -> np.ndarray:
    """factor - 1 for many primes; the difference is formed in integers to avoid cancellation."""
    diff = np.array([_exact_diff(int(v), L, flavor) for v in ells], dtype=np.float64)
    return diff / np.array([_closed_den(int(v), L, flavor) for v in ells], dtype=np.float64)


def _closed_den(ell: int, L: int, flavor: str) -> int:
    if flavor == "sequence":
        return (ell - 1) ** 3 * (ell + 1)
    return ((ell * ell - 1) * (ell - 1)) ** L


def _exact_diff(ell: int, L: int, flavor: str) -> int:
    f = euler_factor_closed(ell, L, flavor)
    den = _closed_den(ell, L, flavor)
    return f.numerator * den // f.denominator - den


def _factor_minus_one(ell: int, L: int, flavor: str) -> float:
    if has_closed_form(L, flavor):
        return float(euler_factor_closed(ell, L, flavor) - 1)
    if ell <= 7:
        return float(euler_factor(table_gl2_prime(ell), L, flavor) - 1)
    return float_ratio(table_gl2_prime(ell), L, flavor) - 1.0


@lru_cache(maxsize=None)
def tail_constant(L: int, flavor: str = "cycle") -> float:
    """K with |factor - 1| <= K / l^2 beyond the truncation, fitted then doubled."""
    if has_closed_form(L, flavor):
        lo, hi = FIT_RANGE
    else:
        lo, hi = MATRIX_ELL_MAX // 4, MATRIX_ELL_MAX
    ells = primes_up_to(hi)
    ells = ells[ells >= lo]
    worst = max(abs(_factor_minus_one(int(l), L, flavor)) * int(l) ** 2 for l in ells)
    return 2 * worst


def tail_bound(L: int, ell_max: int, flavor: str = "cycle") -> float:
    X = max(ell_max, 2)
    return math.expm1(tail_constant(L, flavor) * _PRIME_TAIL / (X * math.log(X)))


def euler_product(
    L: int,
    skip: frozenset | set = frozenset(),
    ell_max: int = DEFAULT_ELL_MAX,
    flavor: str = "cycle",
) -> tuple[float, float, int]:
    """(value, relative tail bound, truncation actually used) of prod over l <= ell_max, l not in skip."""
    _check_flavor(flavor)
    if ell_max < 2:
        return 1.0, tail_bound(L, 2, flavor), ell_max
    if not has_closed_form(L, flavor):
        ell_max = min(ell_max, MATRIX_ELL_MAX)
    ells = [int(l) for l in primes_up_to(ell_max) if int(l) not in skip]
    if has_closed_form(L, flavor):
        small = [l for l in ells if l < 50]
        big = np.array([l for l in ells if l >= 50], dtype=np.int64)
        log_value = sum(math.log(euler_factor_closed(l, L, flavor)) for l in small)
        if big.size:
            log_value += float(np.sum(np.log1p(_closed_form_array(big, L, flavor))))
    else:
        log_value = 0.0
        for l in ells:
            log_value += math.log1p(_factor_minus_one(l, L, flavor))
    return math.exp(log_value), tail_bound(L, ell_max, flavor), ell_max


@dataclass
class ConstantReport:
    L: int
    spec: str
    phi_L_0: float
    finite_part: Fraction
    level: int
    euler_truncation: int
    euler_value: float
    tail_bound: float
    C: float
    flavor: str = "cycle"

    def __post_init__(self):
        if self.C < 0:
            raise ValueError("constant must be nonnegative")
        if (self.C == 0) != (self.finite_part == 0):
            raise ValueError("C vanishes exactly when the finite part does")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["finite_part"] = str(self.finite_part)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ConstantReport":
        d = json.loads(text)
        d["finite_part"] = Fraction(d["finite_part"])
        return cls(**d)


def constant(
    spec: GaloisImageSpec,
    L: int,
    flavor: str = "cycle",
    ell_max: int = DEFAULT_ELL_MAX,
) -> ConstantReport:
    _check_flavor(flavor)
    if L < 1:
        raise ValueError("L must be >= 1")
    table = finite_part_table(spec)
    level = table.n
    finite = euler_factor(table, L, flavor)
    skip = frozenset(factorize(level))
    value, bound, used = euler_product(L, skip, ell_max, flavor)
    if flavor == "cycle":
        phi0 = phi_L_at_zero(L)
        C = phi0 / L * float(finite) * value
    else:
        phi0 = float("nan")
        C = float(finite) * value
    return ConstantReport(L, spec.id, phi0, finite, level, used, value, bound, C, flavor)


def li_integral(x: float, L: int, kind: str = "cycle") -> float:
    """integral_2^x dt / (2 sqrt(t) (log t)^L)  (cycle)  or  dt / (log t)^L  (sequence).

    With t = e^u both become integral of a smooth positive function of u.
    """
    _check_flavor(kind)
    if x < 2:
        raise ValueError("x must be >= 2")
    if x == 2:
        return 0.0
    a, b = math.log(2.0), math.log(x)
    if kind == "cycle":
        # dt / (2 sqrt t) = e^(u/2) du / 2
        def f(u):
            return 0.5 * math.exp(u / 2) / u**L
    else:
        def f(u):
            return math.exp(u) / u**L
    # split at a few points so the exponential growth does not starve the early panels
    cuts = np.linspace(a, b, 9)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        total += integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-12, limit=200)[0]
    return total


def predict(spec: GaloisImageSpec, L: int, x: float, flavor: str = "cycle", ell_max: int = DEFAULT_ELL_MAX) -> float:
    report = constant(spec, L, flavor, ell_max)
    if report.C == 0:
        return 0.0
    return report.C * li_integral(x, L, flavor)
