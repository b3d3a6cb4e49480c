import json
from fractions import Fraction

import numpy as np
import pytest

from ecaliquot import fixtures
from ecaliquot.constants import constant
from ecaliquot.galois_models import (
    ExplicitSubgroup,
    FullGL2,
    SerreCurve,
    build_graph,
    closed_walk_lengths,
    example_level4_group,
    finite_part_table,
    from_generators,
    full_preimage_table,
    fundamental_discriminant,
    has_closed_walk,
    has_walk,
    iter_serre_elements,
    kronecker,
    preimage_elements,
    serre_table,
    serre_table_enumerated,
    sign_mod2,
    spec_from_string,
    torsion_level,
)
from ecaliquot.gl2_stats import (
    ali_cycle_count,
    normalized_ratio,
    table_from_elements,
    table_gl2,
    table_gl2_prime,
)
from ecaliquot.primes import primes_up_to


def _kronecker_oracle(D, n):
    out = 1
    q = 2
    while n > 1:
        while n % q == 0:
            n //= q
            if q == 2:
                out *= 0 if D % 2 == 0 else (1 if D % 8 in (1, 7) else -1)
            else:
                r = pow(D % q, (q - 1) // 2, q)
                out *= 0 if r == 0 else (1 if r == 1 else -1)
        q += 1
    return out


def test_kronecker_matches_factorised_oracle():
    for D in (-3, -4, 5, -7, 8, 37, -43, -212, 148, -53, 12):
        for n in range(1, 400):
            assert kronecker(D, n) == _kronecker_oracle(D, n), (D, n)


def test_fundamental_discriminant():
    assert [fundamental_discriminant(d) for d in (-3, 37, -43, -53, 5, 2)] == [-3, 37, -43, -212, 5, 8]


def test_sign_mod2_is_a_character():
    from _oracles import gl2_list

    G = gl2_list(2)
    assert sorted(sign_mod2(*g) for g in G) == [-1, -1, -1, 1, 1, 1]
    for g in G:
        for h in G:
            a, b, c, d = g
            e, f, x, y = h
            gh = ((a * e + b * x) % 2, (a * f + b * y) % 2, (c * e + d * x) % 2, (c * f + d * y) % 2)
            assert sign_mod2(*gh) == sign_mod2(*g) * sign_mod2(*h)


def test_torsion_levels():
    assert torsion_level(FullGL2()) == 1
    assert [torsion_level(SerreCurve(d)) for d in (-3, 37, -43, -53)] == [6, 74, 86, 212]
    assert torsion_level(example_level4_group()) == 4


def test_serre_validation():
    for bad in (0, 1, 12, -27):
        with pytest.raises(ValueError):
            SerreCurve(bad)


@pytest.mark.parametrize("delta", [-3, 5, -7, 2, -1])
def test_serre_fast_path_matches_enumeration(delta):
    T = serre_table(delta)
    assert T == serre_table_enumerated(delta)
    assert 2 * T.group_order == table_gl2(T.n).group_order


def test_serre_level24():
    T = serre_table(-3, level=24)
    assert T.group_order == 36864
    assert T == serre_table_enumerated(-3, level=24)
    for L in (2, 3):
        assert normalized_ratio(T, L) == normalized_ratio(serre_table(-3), L)


def test_serre_37_matches_enumeration():
    assert serre_table(37) == serre_table_enumerated(37)


def test_serre_preimage_stability():
    elements = np.concatenate(list(iter_serre_elements(-3)))
    lifted = table_from_elements(preimage_elements(elements, 6, 12), 12)
    assert lifted == serre_table(-3, level=12)


def test_serre_subgroup_is_closed():
    elements = np.concatenate(list(iter_serre_elements(-3)))
    G = ExplicitSubgroup(6, tuple(map(tuple, elements.tolist())), "serre6")
    assert G.order == 144
    assert table_from_elements(G.elements, 6) == serre_table(-3)


def test_full_preimage_coprime():
    T = table_from_elements(example_level4_group().elements, 4)
    up = full_preimage_table(T, 12)
    assert up.group_order == 24 * 48
    for L in (1, 2, 3):
        assert ali_cycle_count(up, L) == 0


def test_level4_group_structure():
    G = example_level4_group()
    assert G.order == 24 and table_gl2(4).group_order // G.order == 4
    bad = list(G.elements[:-1])
    with pytest.raises(ValueError):
        ExplicitSubgroup(4, tuple(bad))
    again = from_generators(G.elements[:6], 4)
    assert set(again.elements) <= set(G.elements)
    assert ExplicitSubgroup.from_json(G.to_json(), "level4") == G


def test_level4_graph():
    g = build_graph(table_from_elements(example_level4_group().elements, 4))
    assert set(g.vertices) == {(2, 1), (2, 3), (3, 1), (0, 3)}
    assert set(g.edges) == {((3, 1), (2, 3)), ((3, 1), (0, 3))}
    assert closed_walk_lengths(g, 12) == []
    assert has_walk(g, 2) and not has_walk(g, 3)


def test_gl2_f2_graph():
    g = build_graph(table_gl2_prime(2))
    assert set(g.vertices) == {(0, 1), (1, 1)}
    assert ((1, 1), (1, 1)) in g.edges
    assert not any(src == (0, 1) for src, _ in g.edges)
    assert all(has_closed_walk(g, L) for L in range(1, 10))


def test_level1_graph():
    g = build_graph(table_gl2(1))
    assert g.vertices == ((0, 0),) or len(g.vertices) == 1
    assert len(g.edges) == 1 and all(has_closed_walk(g, L) for L in range(1, 6))
    assert "digraph" in g.to_dot()


def test_graph_depends_only_on_table():
    T = serre_table(-3)
    elements = np.concatenate(list(iter_serre_elements(-3)))
    G = ExplicitSubgroup(6, tuple(map(tuple, elements.tolist())))
    assert build_graph(T) == build_graph(finite_part_table(G))


def _bundled_specs():
    specs = [FullGL2(), example_level4_group()]
    specs += [fixtures.model(name) for name in ("E1", "E2", "E3", "E4", "E5")]
    specs += [SerreCurve(d) for d in (5, -7, 2, -1)]
    return specs


@pytest.mark.parametrize("spec", _bundled_specs(), ids=lambda s: s.id)
def test_positivity_bridge(spec):
    table = finite_part_table(spec)
    g = build_graph(table)
    for L in (2, 3, 4):
        C = constant(spec, L, ell_max=2000).C
        assert (C > 0) == has_closed_walk(g, L)
        assert (ali_cycle_count(table, L) > 0) == has_closed_walk(g, L)


def test_spec_from_string(tmp_path):
    assert spec_from_string("full") == FullGL2()
    assert spec_from_string("serre", -3) == SerreCurve(-3)
    assert spec_from_string("level4") == example_level4_group()
    path = tmp_path / "g.json"
    path.write_text(example_level4_group().to_json())
    assert spec_from_string(f"file:{path}").elements == example_level4_group().elements
    with pytest.raises(ValueError):
        spec_from_string("serre")
    with pytest.raises(ValueError):
        spec_from_string("bogus")


def _vertex_power_any(A, k, closed):
    P = np.identity(A.shape[0], dtype=np.int64)
    for _ in range(k):
        P = (P @ A > 0).astype(np.int64)
    return bool(np.trace(P) > 0) if closed else bool(P.any())


@pytest.mark.parametrize(
    "table",
    [table_gl2(n) for n in (1, 2, 3, 4, 5, 6)]
    + [serre_table(-3), serre_table(5), table_from_elements(example_level4_group().elements, 4)],
    ids=lambda T: f"n{T.n}_{T.group_order}",
)
def test_det_quotient_walks_match_vertex_graph(table):
    g = build_graph(table)
    A = g.adjacency()
    for L in range(1, 7):
        assert has_closed_walk(g, L) == _vertex_power_any(A, L, closed=True)
        assert has_walk(g, L) == _vertex_power_any(A, L - 1, closed=False)
