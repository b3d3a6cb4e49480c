"""Trace/determinant statistics of subgroups of GL_2(Z/nZ) and the tuple counts built from them.

A ``TraceDetTable`` at level n stores c(t, d), the number of group elements with
trace t and determinant d. Everything downstream (ali-cycle and ali-sequence
counts, Euler factors, graphs) depends on the group only through this table.

The tuple counts use the transfer matrix M[d][d'] = c(d + 1 - d', d) over the
units d, d' mod n: a tuple (g_1, ..., g_L) satisfies det g_{i+1} = det g_i + 1 - tr g_i
exactly when its determinants trace a path in M. Counts are exact Python ints.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .primes import is_prime

ENUMERATION_CAP = 4 * 10**7  # n^4 matrices scanned by gl2_elements/enumerated tables


def units(n: int) -> list[int]:
    if n == 1:
        return [0]
    return [d for d in range(n) if math.gcd(d, n) == 1]


def factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    q = 2
    while q * q <= n:
        while n % q == 0:
            out[q] = out.get(q, 0) + 1
            n //= q
        q += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def gl2_order(n: int) -> int:
    total = 1
    for q, k in factorize(n).items():
        total *= q ** (4 * (k - 1)) * (q * q - 1) * (q * q - q)
    return total


@dataclass(frozen=True, eq=False)
class TraceDetTable:
    """c(t, d) for t in Z/n, d a unit mod n, stored as an (n, n) int64 array indexed [t, d]."""

    n: int
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (self.n, self.n):
            raise ValueError(f"counts must be {self.n}x{self.n}, got {c.shape}")
        if (c < 0).any():
            raise ValueError("counts must be nonnegative")
        if self.n > 1:
            nonunit = [d for d in range(self.n) if math.gcd(d, self.n) != 1]
            if c[:, nonunit].any():
                raise ValueError("nonzero count at a non-invertible determinant")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    def __eq__(self, other):
        return isinstance(other, TraceDetTable) and self.n == other.n and np.array_equal(self.counts, other.counts)

    def __hash__(self):
        return hash((self.n, self.counts.tobytes()))

    def c(self, t: int, d: int) -> int:
        return int(self.counts[t % self.n, d % self.n])

    @property
    def group_order(self) -> int:
        return int(self.counts.sum(dtype=object))

    def det_fiber(self, d: int) -> int:
        """|G^{det = d}|."""
        return int(self.counts[:, d % self.n].sum(dtype=object))

    def support(self) -> list[tuple[int, int]]:
        ts, ds = np.nonzero(self.counts)
        return sorted(zip(ts.tolist(), ds.tolist()))

    def reduce(self, k: int) -> "TraceDetTable":
        """Push the counts down to a level k dividing n.

        Every element of the image is hit |kernel| times, so this is the image
        table scaled by that constant: supports and normalised ratios agree.
        """
        if self.n % k:
            raise ValueError(f"{k} does not divide {self.n}")
        out = np.zeros((k, k), dtype=np.int64)
        ts, ds = np.nonzero(self.counts)
        np.add.at(out, (ts % k, ds % k), self.counts[ts, ds])
        return TraceDetTable(k, out)

    def to_json(self) -> str:
        rows = [[t, d, self.c(t, d)] for t, d in self.support()]
        return json.dumps({"n": self.n, "counts": rows})

    @classmethod
    def from_json(cls, text: str) -> "TraceDetTable":
        data = json.loads(text)
        n = int(data["n"])
        counts = np.zeros((n, n), dtype=np.int64)
        for t, d, c in data["counts"]:
            counts[t % n, d % n] += c
        return cls(n, counts)


@dataclass(frozen=True, eq=False)
class SignedTraceDetTable:
    """Signed sums of a character over the (t, d) fibres; same layout as TraceDetTable."""

    n: int
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (self.n, self.n):
            raise ValueError(f"counts must be {self.n}x{self.n}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    def bounded_by(self, full: TraceDetTable) -> bool:
        return bool((np.abs(self.counts) <= full.counts).all())


def _as_matrix_array(elements, n: int) -> np.ndarray:
    arr = np.asarray(list(elements) if not isinstance(elements, np.ndarray) else elements, dtype=np.int64)
    if arr.size == 0:
        return arr.reshape(0, 4)
    return arr.reshape(-1, 4) % n


def table_from_elements(elements, n: int) -> TraceDetTable:
    """Count (trace, det) over a list of 2x2 matrices mod n, given as (a, b, c, d) rows."""
    arr = _as_matrix_array(elements, n)
    a, b, c, d = arr.T
    tr = (a + d) % n
    det = (a * d - b * c) % n
    if n > 1 and (np.gcd(det, n) != 1).any():
        raise ValueError("non-invertible matrix in element list")
    counts = np.zeros((n, n), dtype=np.int64)
    np.add.at(counts, (tr, det), 1)
    return TraceDetTable(n, counts)


def gl2_elements(n: int) -> np.ndarray:
    """Every element of GL_2(Z/n) as rows (a, b, c, d); n^4 is capped by ENUMERATION_CAP."""
    if n**4 > ENUMERATION_CAP:
        raise ValueError(f"GL_2(Z/{n}) is too large to enumerate")
    r = np.arange(n, dtype=np.int64)
    a, b, c, d = (m.ravel() for m in np.meshgrid(r, r, r, r, indexing="ij"))
    det = (a * d - b * c) % n
    keep = np.gcd(det, n) == 1
    return np.column_stack([a[keep], b[keep], c[keep], d[keep]])


def table_gl2_enumerated(n: int) -> TraceDetTable:
    return table_from_elements(gl2_elements(n), n)


@lru_cache(maxsize=None)
def table_gl2_prime(ell: int) -> TraceDetTable:
    """GL_2(F_ell) counts from the factorisation type of x^2 - t x + d.

    Roots are searched directly, so ell = 2 needs no special case: distinct roots
    give ell^2 + ell elements, a double root ell^2, no root ell^2 - ell.
    """
    if not is_prime(ell):
        raise ValueError(f"{ell} is not prime")
    counts = np.zeros((ell, ell), dtype=np.int64)
    lam = np.arange(1, ell, dtype=np.int64)
    L, M = np.meshgrid(lam, lam, indexing="ij")
    split = L < M
    counts[((L + M) % ell)[split], ((L * M) % ell)[split]] = ell * ell + ell
    counts[(2 * lam) % ell, (lam * lam) % ell] = ell * ell
    counts[:, 1:][counts[:, 1:] == 0] = ell * ell - ell
    return TraceDetTable(ell, counts)


def crt_combine(T1: TraceDetTable, T2: TraceDetTable) -> TraceDetTable:
    """Table of G_1 x G_2 at level n_1 n_2 (Chinese remainder theorem)."""
    n1, n2 = T1.n, T2.n
    if math.gcd(n1, n2) != 1:
        raise ValueError(f"levels {n1} and {n2} are not coprime")
    n = n1 * n2
    r = np.arange(n)
    # counts[t, d] = c1[t % n1, d % n1] * c2[t % n2, d % n2]
    counts = T1.counts[np.ix_(r % n1, r % n1)] * T2.counts[np.ix_(r % n2, r % n2)]
    return TraceDetTable(n, counts)


@lru_cache(maxsize=None)
def table_gl2(n: int) -> TraceDetTable:
    """Full GL_2(Z/n): closed form at primes, enumeration at prime powers, CRT in between."""
    table = TraceDetTable(1, np.ones((1, 1), dtype=np.int64))
    for q, k in sorted(factorize(n).items()):
        part = table_gl2_prime(q) if k == 1 else table_gl2_enumerated(q**k)
        table = crt_combine(table, part)
    return table


class TransferMatrix:
    """M[d][d'] = c(d + 1 - d', d) over the units mod n, with exact integer entries."""

    def __init__(self, table: TraceDetTable):
        self.n = table.n
        self.units = units(table.n)
        n = self.n
        u = np.array(self.units, dtype=np.int64)
        ints = table.counts[(u[:, None] + 1 - u[None, :]) % n, u[:, None] % n]
        self.matrix = ints.astype(object)
        self._ints = ints

    @property
    def size(self) -> int:
        return len(self.units)

    def row_sums(self) -> list[int]:
        return [int(v) for v in self.matrix.sum(axis=1)]

    def power(self, k: int) -> np.ndarray:
        """M^k as an object array (exact)."""
        result = np.identity(self.size, dtype=np.int64).astype(object)
        base = self.matrix
        while k > 0:
            if k & 1:
                result = result.dot(base)
            k >>= 1
            if k:
                base = base.dot(base)
        return result

    def power_float(self, k: int) -> np.ndarray:
        """Floating M^k for large levels where only a ratio is wanted."""
        return np.linalg.matrix_power(self._ints.astype(np.float64), k)


def transfer_matrix(table: TraceDetTable) -> TransferMatrix:
    return TransferMatrix(table)


def ali_cycle_count(table: TraceDetTable, L: int) -> int:
    """|G^L_{ali-cycle}| = tr(M^L)."""
    if L < 1:
        raise ValueError("L must be >= 1")
    M = transfer_matrix(table)
    return int(np.trace(M.power(L)))


def _det_fibres(table: TraceDetTable, M: TransferMatrix) -> np.ndarray:
    return np.array([table.det_fiber(d) for d in M.units], dtype=object)


def ali_sequence_count(table: TraceDetTable, L: int) -> int:
    """|G^L_{ali-sequence}|: tuples with det g_{i+1} = det g_i + 1 - tr g_i for i < L."""
    if L < 1:
        raise ValueError("L must be >= 1")
    if L == 1:
        return table.group_order
    M = transfer_matrix(table)
    ones = np.ones(M.size, dtype=np.int64).astype(object)
    return int(ones.dot(M.power(L - 1)).dot(_det_fibres(table, M)))


def ali_sequence_count_with_dets(table: TraceDetTable, dets: Sequence[int]) -> int:
    """Ali-sequence tuples of length len(dets) + 1 with det g_i = dets[i - 2] for i >= 2."""
    n = table.n
    dets = [a % n for a in dets]
    if any(math.gcd(a, n) != 1 for a in dets) and n > 1:
        raise ValueError("determinants must be units")
    if not dets:
        return table.group_order
    first = sum(table.c(d + 1 - dets[0], d) for d in units(n))
    total = first
    for a, b in zip(dets, dets[1:]):
        total *= table.c(a + 1 - b, a)
    return total * table.det_fiber(dets[-1])


def ali_sequence_trace_sum_count(table: TraceDetTable, L: int, r: int) -> int:
    """Ali-sequence tuples with sum of traces congruent to r mod n.

    The first L - 1 traces telescope to d_1 - d_L + L - 1, so only the endpoint
    determinants matter: sum over (d_1, d_L) of (M^(L-1))[d_1][d_L] c(r - d_1 + d_L - L + 1, d_L).
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    n = table.n
    M = transfer_matrix(table)
    u = M.units
    if L == 1:
        return sum(table.c(r, d) for d in u)
    P = M.power(L - 1)
    total = 0
    for i, d1 in enumerate(u):
        for j, dL in enumerate(u):
            if P[i, j]:
                total += P[i, j] * table.c(r - d1 + dL - L + 1, dL)
    return int(total)


def normalized_ratio(table: TraceDetTable, L: int) -> Fraction:
    """n^L |G^L_{ali-cycle}| / |G|^L."""
    return Fraction(table.n**L * ali_cycle_count(table, L), table.group_order**L)


def normalized_sequence_ratio(table: TraceDetTable, L: int) -> Fraction:
    """n^(L-1) |G^L_{ali-sequence}| / |G|^L."""
    return Fraction(table.n ** (L - 1) * ali_sequence_count(table, L), table.group_order**L)


def float_ratio(table: TraceDetTable, L: int, kind: str = "cycle") -> float:
    """Floating version of the normalized ratios for large prime levels."""
    M = transfer_matrix(table)
    scale = table.n / table.group_order
    A = M._ints.astype(np.float64) * scale
    if kind == "cycle":
        return float(np.trace(np.linalg.matrix_power(A, L)))
    if L == 1:
        return 1.0
    s = np.array([table.det_fiber(d) for d in M.units], dtype=np.float64) / table.group_order
    return float(np.ones(M.size) @ np.linalg.matrix_power(A, L - 1) @ s)


def in_ali_cycle_set(table: TraceDetTable, pairs: Iterable[tuple[int, int]]) -> bool:
    """Is the cyclic tuple of (trace, det) classes realisable in G^L_{ali-cycle}?"""
    pairs = [(t % table.n, d % table.n) for t, d in pairs]
    L = len(pairs)
    for i, (t, d) in enumerate(pairs):
        if table.c(t, d) == 0:
            return False
        if (d + 1 - t - pairs[(i + 1) % L][1]) % table.n:
            return False
    return True
