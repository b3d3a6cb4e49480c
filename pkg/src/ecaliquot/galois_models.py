"""Models of the mod-m Galois image and the trace/determinant graph they induce.

Three kinds of image are supported: all of GL_2 (level 1 suffices), a Serre
curve's index-2 subgroup determined by the square-free discriminant, and an
explicit subgroup given by its full element list.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Union

import numpy as np

from .ff_curve import squarefree_part
from .gl2_stats import (
    ENUMERATION_CAP,
    TraceDetTable,
    crt_combine,
    factorize,
    gl2_elements,
    table_from_elements,
    table_gl2,
    units,
)

GENERATOR_CAP = 10**7


def kronecker(D: int, n: int) -> int:
    """Kronecker symbol (D / n) for n >= 1."""
    if n <= 0:
        raise ValueError("kronecker symbol needs n >= 1 here")
    result = 1
    while n % 2 == 0:
        n //= 2
        if D % 2 == 0:
            return 0
        if D % 8 in (3, 5):
            result = -result
    # Jacobi symbol (D / n) for odd n
    a = D % n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def fundamental_discriminant(delta: int) -> int:
    """Discriminant of Q(sqrt(delta)) for square-free delta != 1."""
    return delta if delta % 4 == 1 else 4 * delta


# nonzero vectors of F_2^2, used to read off the permutation sign of g mod 2
_F2_VECTORS = ((1, 0), (0, 1), (1, 1))


def sign_mod2(a: int, b: int, c: int, d: int) -> int:
    """Sign of g mod 2 acting on the three nonzero vectors of F_2^2 (GL_2(F_2) = S_3)."""
    image = []
    for x, y in _F2_VECTORS:
        v = ((a * x + b * y) % 2, (c * x + d * y) % 2)
        image.append(_F2_VECTORS.index(v))
    inversions = sum(1 for i in range(3) for j in range(i + 1, 3) if image[i] > image[j])
    return -1 if inversions % 2 else 1


@dataclass(frozen=True)
class FullGL2:
    @property
    def id(self) -> str:
        return "full"


@dataclass(frozen=True)
class SerreCurve:
    delta: int

    def __post_init__(self):
        if self.delta == 0 or self.delta == 1 or squarefree_part(self.delta) != self.delta:
            raise ValueError(f"Serre model needs a square-free delta != 0, 1; got {self.delta}")

    @property
    def discriminant(self) -> int:
        return fundamental_discriminant(self.delta)

    @property
    def id(self) -> str:
        return f"serre({self.delta})"


@dataclass(frozen=True)
class ExplicitSubgroup:
    level: int
    elements: tuple = field(repr=False)
    name: str = "explicit"

    def __post_init__(self):
        arr = np.asarray(self.elements, dtype=np.int64).reshape(-1, 4) % self.level
        object.__setattr__(self, "elements", tuple(map(tuple, arr.tolist())))
        if len(set(self.elements)) != len(self.elements):
            raise ValueError("duplicate elements in subgroup list")
        if not _is_closed(self.elements, self.level):
            raise ValueError("element list is not closed under multiplication")

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def id(self) -> str:
        return f"{self.name}(level={self.level},order={self.order})"

    def to_json(self) -> str:
        return json.dumps({"level": self.level, "elements": [list(g) for g in self.elements]})

    @classmethod
    def from_json(cls, text: str, name: str = "explicit") -> "ExplicitSubgroup":
        data = json.loads(text)
        return cls(int(data["level"]), tuple(tuple(g) for g in data["elements"]), name)


GaloisImageSpec = Union[FullGL2, SerreCurve, ExplicitSubgroup]


def _encode(arr: np.ndarray, m: int) -> np.ndarray:
    a, b, c, d = (arr % m).T
    return ((a * m + b) * m + c) * m + d


def _matmul(x: np.ndarray, y: np.ndarray, m: int) -> np.ndarray:
    """Row-wise products of (k, 4) arrays of 2x2 matrices mod m."""
    a = (x[:, 0] * y[:, 0] + x[:, 1] * y[:, 2]) % m
    b = (x[:, 0] * y[:, 1] + x[:, 1] * y[:, 3]) % m
    c = (x[:, 2] * y[:, 0] + x[:, 3] * y[:, 2]) % m
    d = (x[:, 2] * y[:, 1] + x[:, 3] * y[:, 3]) % m
    return np.column_stack([a, b, c, d])


def _closure(generators: np.ndarray, m: int, cap: int, inside: np.ndarray | None = None) -> np.ndarray | None:
    """Elements of <generators> mod m; None if the closure leaves ``inside`` (sorted codes)."""
    identity = np.array([[1 % m, 0, 0, 1 % m]], dtype=np.int64)
    seen = set(_encode(identity, m).tolist())
    elements = [identity]
    frontier = identity
    while frontier.shape[0]:
        products = np.concatenate([_matmul(frontier, np.repeat(g[None, :], frontier.shape[0], 0), m) for g in generators])
        codes = _encode(products, m)
        codes, first = np.unique(codes, return_index=True)
        fresh = np.array([c not in seen for c in codes.tolist()], dtype=bool)
        if inside is not None and fresh.any():
            pos = np.searchsorted(inside, codes[fresh])
            pos = np.minimum(pos, inside.shape[0] - 1)
            if not (inside[pos] == codes[fresh]).all():
                return None
        frontier = products[first[fresh]]
        seen.update(codes[fresh].tolist())
        elements.append(frontier)
        if len(seen) > cap:
            raise ValueError(f"generated group exceeds {cap} elements")
    return np.concatenate(elements)


def _is_closed(elements: tuple, m: int) -> bool:
    arr = np.asarray(elements, dtype=np.int64).reshape(-1, 4)
    if arr.shape[0] == 0:
        return False
    det = (arr[:, 0] * arr[:, 3] - arr[:, 1] * arr[:, 2]) % m
    if m > 1 and (np.gcd(det, m) != 1).any():
        return False
    codes = np.sort(_encode(arr, m))
    # grow a generating set greedily; closure must stay inside and finally fill the set
    gens: list[np.ndarray] = []
    covered = {int(c) for c in _encode(np.array([[1 % m, 0, 0, 1 % m]]), m)}
    for row, code in zip(arr, _encode(arr, m).tolist()):
        if code in covered:
            continue
        gens.append(row)
        group = _closure(np.array(gens), m, GENERATOR_CAP, inside=codes)
        if group is None:
            return False
        covered = set(_encode(group, m).tolist())
    return len(covered) == codes.shape[0] and set(codes.tolist()) == covered


def from_generators(generators: Iterable, level: int, cap: int = GENERATOR_CAP, name: str = "explicit") -> ExplicitSubgroup:
    gens = np.asarray(list(generators), dtype=np.int64).reshape(-1, 4) % level
    elements = _closure(gens, level, cap)
    return ExplicitSubgroup(level, tuple(map(tuple, elements.tolist())), name)


def example_level4_group() -> ExplicitSubgroup:
    """The index-4 subgroup of GL_2(Z/4) for y^2 = x^3 - 3x + 4."""
    H = [(1, 0, 0, 1), (0, 1, -1, -1), (-1, -1, 1, 0), (-1, -1, 0, 1), (1, 0, -1, -1), (0, 1, 1, 0)]
    K = [(0, 0, 0, 0), (1, 1, 0, 1), (1, 0, 1, 1), (0, 1, 1, 0)]
    elements = set()
    for h in H:
        for k in K:
            u = (1 + 2 * k[0], 2 * k[1], 2 * k[2], 1 + 2 * k[3])
            prod = _matmul(np.array([h]), np.array([u]), 4)[0]
            elements.add(tuple(int(v) for v in prod))
    group = ExplicitSubgroup(4, tuple(sorted(elements)), name="level4")
    if group.order != 24 or 96 // group.order != 4:
        raise AssertionError("level-4 group is not of index 4; transcription error")
    return group


def torsion_level(spec: GaloisImageSpec) -> int:
    """Level at which the model is defined.

    For a Serre curve the index-2 subgroup is cut out by a character of level
    lcm(2, |D|), D the discriminant of Q(sqrt(delta)).
    """
    if isinstance(spec, FullGL2):
        return 1
    if isinstance(spec, ExplicitSubgroup):
        return spec.level
    D = spec.discriminant
    return abs(D) * 2 // math.gcd(2, abs(D))


def _split_level(m: int) -> tuple[int, int]:
    two = 1
    while m % 2 == 0:
        m //= 2
        two *= 2
    return two, m


def _sign_sums_2adic(level2: int) -> np.ndarray:
    """Sum of sign_mod2 over each (t, d) fibre of GL_2(Z/2^a)."""
    els = gl2_elements(level2)
    signs = np.array([sign_mod2(*g) for g in (els % 2).tolist()], dtype=np.int64)
    a, b, c, d = els.T
    out = np.zeros((level2, level2), dtype=np.int64)
    np.add.at(out, ((a + d) % level2, (a * d - b * c) % level2), signs)
    return out


def serre_table(delta: int, level: int | None = None) -> TraceDetTable:
    """Counts of {g : sign(g mod 2) * chi_D(det g) = 1} in GL_2(Z/m) by the character-sum split.

    c_G = (c_full + S) / 2 with S(t, d) = chi_D(d) * (signed 2-adic count) * (odd-level count).
    """
    spec = SerreCurve(delta)
    D = spec.discriminant
    m = torsion_level(spec) if level is None else level
    if m % torsion_level(spec):
        raise ValueError(f"level {m} is not a multiple of {torsion_level(spec)}")
    m2, modd = _split_level(m)
    full = table_gl2(m).counts.astype(np.int64)
    signed2 = _sign_sums_2adic(m2)
    odd = table_gl2(modd).counts
    r = np.arange(m)
    chi = np.array([kronecker(D, int(d)) if math.gcd(int(d), m) == 1 else 0 for d in r], dtype=np.int64)
    S = signed2[np.ix_(r % m2, r % m2)] * odd[np.ix_(r % modd, r % modd)] * chi[None, :]
    total = full + S
    if (total % 2).any():
        raise AssertionError("character sum has the wrong parity")
    return TraceDetTable(m, total // 2)


def iter_serre_elements(delta: int, level: int | None = None, chunk_rows: int = 1):
    """Yield (k, 4) arrays of the Serre subgroup's elements, scanning GL_2(Z/m) in slices.

    This is the slow enumeration oracle for ``serre_table``.
    """
    spec = SerreCurve(delta)
    D = spec.discriminant
    m = torsion_level(spec) if level is None else level
    r = np.arange(m, dtype=np.int64)
    chi = np.array([kronecker(D, int(d)) if math.gcd(int(d), m) == 1 else 0 for d in r], dtype=np.int64)
    sign_table = np.zeros((2, 2, 2, 2), dtype=np.int64)
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for d in range(2):
                    if (a * d - b * c) % 2:
                        sign_table[a, b, c, d] = sign_mod2(a, b, c, d)
    B, C, Dd = (x.ravel() for x in np.meshgrid(r, r, r, indexing="ij"))
    for start in range(0, m, chunk_rows):
        for a in range(start, min(start + chunk_rows, m)):
            det = (a * Dd - B * C) % m
            ok = np.gcd(det, m) == 1
            eps = sign_table[a % 2, B % 2, C % 2, Dd % 2]
            keep = ok & (eps * chi[det] == 1)
            yield np.column_stack([np.full(int(keep.sum()), a), B[keep], C[keep], Dd[keep]])


def serre_table_enumerated(delta: int, level: int | None = None) -> TraceDetTable:
    spec = SerreCurve(delta)
    m = torsion_level(spec) if level is None else level
    counts = np.zeros((m, m), dtype=np.int64)
    for els in iter_serre_elements(delta, m):
        a, b, c, d = els.T
        np.add.at(counts, ((a + d) % m, (a * d - b * c) % m), 1)
    return TraceDetTable(m, counts)


def finite_part_table(spec: GaloisImageSpec) -> TraceDetTable:
    if isinstance(spec, FullGL2):
        return table_gl2(1)
    if isinstance(spec, ExplicitSubgroup):
        return table_from_elements(spec.elements, spec.level)
    return serre_table(spec.delta)


def full_preimage_table(table: TraceDetTable, level: int) -> TraceDetTable:
    """Table of the full preimage in GL_2(Z/level) of a group given at level table.n.

    Built from fibres: each element of the small group has the same number of
    lifts, and lifts of a fixed g distribute over (t, d) as the fibre of g does
    in the kernel coset. Only the prime-to-n part is handled in closed form;
    other cases are enumerated.
    """
    n = table.n
    if level % n:
        raise ValueError(f"{level} is not a multiple of {n}")
    extra = level // n
    if math.gcd(extra, n) == 1:
        return crt_combine(table, table_gl2(extra))
    raise NotImplementedError("preimage at a non-coprime level needs the element list")


def preimage_elements(elements: np.ndarray, n: int, level: int) -> np.ndarray:
    """All lifts to GL_2(Z/level) of the given elements mod n (level a multiple of n)."""
    if level % n:
        raise ValueError(f"{level} is not a multiple of {n}")
    k = level // n
    if len(elements) * k**4 > ENUMERATION_CAP:
        raise ValueError("preimage too large to enumerate")
    r = np.arange(k, dtype=np.int64) * n
    shifts = np.stack([x.ravel() for x in np.meshgrid(r, r, r, r, indexing="ij")], axis=1)
    base = np.asarray(elements, dtype=np.int64).reshape(-1, 4) % n
    return (base[:, None, :] + shifts[None, :, :]).reshape(-1, 4) % level


# graphs ---------------------------------------------------------------------


@dataclass(frozen=True)
class TraceDetGraph:
    """Vertices are the realised (t, d); u -> v whenever d_v = d_u + 1 - t_u.

    Edges are a function of the vertex set and are only materialised on request,
    since a level-212 graph has millions of them. Walk questions are answered on
    the quotient by determinant, which has a closed walk of length L exactly
    when the full graph does.
    """

    n: int
    vertices: tuple[tuple[int, int], ...]

    @cached_property
    def edges(self) -> tuple[tuple[tuple[int, int], tuple[int, int]], ...]:
        by_det: dict[int, list[tuple[int, int]]] = {}
        for v in self.vertices:
            by_det.setdefault(v[1], []).append(v)
        return tuple(
            (u, v) for u in self.vertices for v in by_det.get((u[1] + 1 - u[0]) % self.n, ())
        )

    def adjacency(self) -> np.ndarray:
        index = {v: i for i, v in enumerate(self.vertices)}
        A = np.zeros((len(self.vertices), len(self.vertices)), dtype=np.int64)
        for u, v in self.edges:
            A[index[u], index[v]] = 1
        return A

    def det_adjacency(self) -> np.ndarray:
        """0/1 matrix on realised determinants: d -> d + 1 - t for some vertex (t, d)."""
        dets = sorted({d for _, d in self.vertices})
        index = {d: i for i, d in enumerate(dets)}
        B = np.zeros((len(dets), len(dets)), dtype=np.float64)
        for t, d in self.vertices:
            nxt = (d + 1 - t) % self.n
            if nxt in index:
                B[index[d], index[nxt]] = 1.0
        return B

    def to_dot(self, name: str = "G") -> str:
        lines = [f"digraph {name} {{"]
        for t, d in self.vertices:
            lines.append(f'  "({t},{d})";')
        for (t1, d1), (t2, d2) in self.edges:
            lines.append(f'  "({t1},{d1})" -> "({t2},{d2})";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_graph(table: TraceDetTable) -> TraceDetGraph:
    return TraceDetGraph(table.n, tuple(table.support()))


def _bool_power(A: np.ndarray, k: int) -> np.ndarray:
    """Reachability in exactly k steps, kept as 0/1 so float products stay exact."""
    result = np.identity(A.shape[0], dtype=np.float64)
    base = A.astype(np.float64)
    while k > 0:
        if k & 1:
            result = (result @ base > 0).astype(np.float64)
        k >>= 1
        if k:
            base = (base @ base > 0).astype(np.float64)
    return result


def has_closed_walk(graph: TraceDetGraph, L: int) -> bool:
    if L < 1:
        raise ValueError("L must be >= 1")
    if not graph.vertices:
        return False
    return bool(np.trace(_bool_power(graph.det_adjacency(), L)) > 0)


def has_walk(graph: TraceDetGraph, L: int) -> bool:
    """Is there a directed walk through L vertices (L - 1 edges)?"""
    if L < 1:
        raise ValueError("L must be >= 1")
    if not graph.vertices:
        return False
    if L == 1:
        return True
    # a walk through L vertices is a det walk of L - 1 steps that starts anywhere
    # and ends at a determinant carrying at least one vertex (every realised det does)
    return bool(_bool_power(graph.det_adjacency(), L - 1).any())


def closed_walk_lengths(graph: TraceDetGraph, L_max: int) -> list[int]:
    return [L for L in range(1, L_max + 1) if has_closed_walk(graph, L)]


def spec_from_string(text: str, delta: int | None = None) -> GaloisImageSpec:
    """Parse the CLI model choice: full | serre | file:<path> | level4."""
    if text == "full":
        return FullGL2()
    if text == "serre":
        if delta is None:
            raise ValueError("--model serre needs --delta")
        return SerreCurve(delta)
    if text == "level4":
        return example_level4_group()
    if text.startswith("file:"):
        with open(text[5:]) as fh:
            return ExplicitSubgroup.from_json(fh.read())
    raise ValueError(f"unknown model {text!r}")
