"""Search for aliquot cycles and aliquot sequences of a fixed length.

A chain p_1 -> p_2 = |E(F_{p_1})| -> ... is grown one step at a time for a
whole segment of starting primes at once. Almost every chain dies at the first
step because |E(F_{p_1})| is composite, so the compiled kernel in ``_kernels``
(which only decides "prime order or not") carries nearly all of the work. Every
surviving chain is re-verified with exact point counts before it is reported.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .ff_curve import BadReduction, RationalCurveModel
from .point_count import order
from .primes import is_prime, primes_up_to, segment_flags

DEFAULT_SEGMENT = 1 << 22


@dataclass(frozen=True)
class AliquotCycleRecord:
    primes: tuple[int, ...]
    curve: str
    normalized: bool = True

    @property
    def L(self) -> int:
        return len(self.primes)

    def as_row(self) -> str:
        return ",".join(str(p) for p in self.primes)


@dataclass
class SearchReport:
    x: int
    L: int
    cycles: list[AliquotCycleRecord] = field(default_factory=list)
    count: int = 0
    wall_time: float = 0.0
    primes_scanned: int = 0
    kind: str = "cycle"

    def __post_init__(self):
        if self.count != len(self.cycles):
            raise ValueError("count must equal the number of records")

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow([f"p{i + 1}" for i in range(self.L)])
        for rec in self.cycles:
            writer.writerow(rec.primes)
        return out.getvalue()


def read_csv(text: str) -> list[tuple[int, ...]]:
    """Inverse of SearchReport.to_csv (header row skipped)."""
    rows = list(csv.reader(io.StringIO(text)))
    return [tuple(int(v) for v in row) for row in rows[1:] if row]


def next_in_sequence(curve: RationalCurveModel, p: int) -> int:
    """|E(F_p)|; raises BadReduction when p divides the discriminant."""
    return order(curve.reduce(p))


def _exact_step(curve: RationalCurveModel, p: int) -> int:
    """Same contract as the kernel: -1 bad, 0 composite order, else the (prime) order."""
    if curve.discriminant % p == 0:
        return -1
    n = order(curve.reduce(p))
    return n if is_prime(n) else 0


def _prime_orders(curve: RationalCurveModel, A: int, B: int, values: np.ndarray) -> np.ndarray:
    """Kernel answers for every prime in ``values`` (int64), exact Python path outside its range."""
    out = np.zeros(values.shape[0], dtype=np.int64)
    fast = (values > _kernels.KERNEL_MIN_P) & (values <= _kernels.KERNEL_MAX_P)
    if fast.any():
        out[fast] = _kernels.candidates_for(values[fast], A, B)
    for i in np.flatnonzero(~fast):
        out[i] = _exact_step(curve, int(values[i]))
    return out


def _is_prime_array(values: np.ndarray, flags: np.ndarray, base: int) -> np.ndarray:
    idx = values - base
    inside = (idx >= 0) & (idx < flags.shape[0])
    result = np.zeros(values.shape[0], dtype=bool)
    result[inside] = flags[idx[inside]]
    for i in np.flatnonzero(~inside):
        result[i] = values[i] > 1 and is_prime(int(values[i]))
    return result


def _scan_segment(curve, A, B, L, lo, hi, cycle, base_primes):
    """Chains started at the primes lo <= p_1 < hi. Returns (rows, primes_scanned)."""
    ext = L * (math.isqrt(4 * hi) + 2)
    flag_lo = max(0, lo - ext)
    flags = segment_flags(flag_lo, hi + ext, base_primes)
    p1 = np.flatnonzero(flags[lo - flag_lo : hi - flag_lo]).astype(np.int64) + lo
    scanned = int(p1.shape[0])
    if scanned == 0:
        return [], 0
    chain = p1[:, None]
    steps = L if cycle else L - 1
    if steps == 0:
        # L = 1 sequences: every good prime qualifies
        good = np.array([curve.discriminant % int(p) != 0 for p in p1], dtype=bool)
        return [tuple(int(v) for v in row) for row in chain[good]], scanned
    for step in range(1, steps + 1):
        nxt = _prime_orders(curve, A, B, chain[:, -1])
        if cycle and step == L:
            keep = nxt == chain[:, 0]
            chain = chain[keep]
            break
        keep = nxt > 0
        keep[keep] = _is_prime_array(nxt[keep], flags, flag_lo)
        for j in range(chain.shape[1]):
            keep &= nxt != chain[:, j]
        if cycle:
            keep &= nxt > chain[:, 0]
        chain = np.column_stack([chain[keep], nxt[keep]])
        if chain.shape[0] == 0:
            break
    return [tuple(int(v) for v in row) for row in chain], scanned


def _verify(curve: RationalCurveModel, row: tuple[int, ...], cycle: bool) -> None:
    L = len(row)
    traces = []
    for i, p in enumerate(row):
        if not is_prime(p):
            raise AssertionError(f"{p} in {row} is not prime")
        n = next_in_sequence(curve, p)
        traces.append(p + 1 - n)
        if i + 1 < L:
            assert n == row[i + 1], f"{row}: |E(F_{p})| = {n}"
        elif cycle:
            assert n == row[0], f"{row}: chain does not close"
    assert len(set(row)) == L, f"{row} repeats a prime"
    if cycle:
        assert row[0] == min(row), f"{row} is not normalized"
        assert sum(traces) == L, f"{row}: trace sum {sum(traces)} != {L}"


def _search(curve, L, x, cycle, segment, threads, lower=2):
    if L < 1:
        raise ValueError("L must be >= 1")
    started = time.perf_counter()
    x = int(x)
    hi = x + 1
    A, B = curve.short_model
    bounds = [(s, min(s + segment, hi)) for s in range(max(2, lower), hi, segment)]
    base = primes_up_to(math.isqrt(hi + L * (math.isqrt(4 * hi) + 2)) + 1)

    def job(bound):
        return _scan_segment(curve, A, B, L, bound[0], bound[1], cycle, base)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, bounds))
    else:
        results = [job(b) for b in bounds]
    rows: list[tuple[int, ...]] = []
    scanned = 0
    for seg_rows, seg_scanned in results:
        rows.extend(seg_rows)
        scanned += seg_scanned
    check = L > 1 or cycle
    records = []
    for row in rows:
        if check:
            _verify(curve, row, cycle)
        records.append(AliquotCycleRecord(row, str(curve), normalized=cycle))
    records.sort(key=lambda r: r.primes)
    return SearchReport(
        x=x,
        L=L,
        cycles=records,
        count=len(records),
        wall_time=time.perf_counter() - started,
        primes_scanned=scanned,
        kind="cycle" if cycle else "sequence",
    )


def find_cycles(
    curve: RationalCurveModel,
    L: int,
    x: int,
    segment: int = DEFAULT_SEGMENT,
    threads: int = 1,
) -> SearchReport:
    """All normalized aliquot cycles of length L with p_1 <= x."""
    return _search(curve, L, x, True, segment, threads)


def find_sequences(
    curve: RationalCurveModel,
    L: int,
    x: int,
    segment: int = DEFAULT_SEGMENT,
    threads: int = 1,
) -> SearchReport:
    """All aliquot sequences (p_1, ..., p_L) with p_1 <= x.

    Only the L - 1 forward conditions are imposed. For L = 1 every good prime
    up to x is a sequence, so the report can be large.
    """
    return _search(curve, L, x, False, segment, threads)


def find_cycles_brute(curve: RationalCurveModel, L: int, x: int) -> list[tuple[int, ...]]:
    """Reference search with exact point counts at every step; small x only."""
    found = []
    for p1 in map(int, primes_up_to(int(x))):
        row = [p1]
        ok = True
        for step in range(L):
            try:
                n = next_in_sequence(curve, row[-1])
            except BadReduction:
                ok = False
                break
            if step == L - 1:
                ok = n == p1
            elif not is_prime(n) or n in row or n < p1:
                ok = False
            else:
                row.append(n)
            if not ok:
                break
        if ok:
            found.append(tuple(row))
    return found


def find_sequences_brute(curve: RationalCurveModel, L: int, x: int) -> list[tuple[int, ...]]:
    found = []
    for p1 in map(int, primes_up_to(int(x))):
        if curve.discriminant % p1 == 0:
            continue
        row = [p1]
        while len(row) < L:
            p = row[-1]
            if curve.discriminant % p == 0:
                break
            n = next_in_sequence(curve, p)
            if not is_prime(n) or n in row:
                break
            row.append(n)
        if len(row) == L:
            found.append(tuple(row))
    return found
