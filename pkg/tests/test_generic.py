from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import hypergraphs
from ternage.age import AgeSpec, forbid, is_permitted
from ternage.canon import canonical_form
from ternage.constructions import GRAPH, HYPERGRAPH, build_H_n, builtin_age, catalog, graph_age
from ternage.generic import (
    GenericApprox,
    GrowthError,
    LogEntry,
    check_extension_property,
    check_extension_relative_to_E,
    embeds_into_age,
    grow_generic,
    one_point_extensions,
    replay_log,
)
from ternage.structure import FinStructure, StructureError, induced_substructure, qf_type

K4 = catalog("K4")
TRI = FinStructure.from_tuples(HYPERGRAPH, 3, {"R": [(0, 1, 2)]})


def _brute_extensions(age, s, base):
    # try every hyperedge set through a new vertex
    n = s.size
    new_edges = list(itertools.combinations(range(n), 2))
    old = [t for t in itertools.combinations(range(n), 3) if s.holds("R", t)]
    out = set()
    for mask in range(1 << len(new_edges)):
        extra = [(a, b, n) for q, (a, b) in enumerate(new_edges) if mask >> q & 1]
        t = FinStructure.from_tuples(HYPERGRAPH, n + 1, {"R": old + extra})
        if is_permitted(age, t):
            out.add(qf_type(t, (*base, n)))
    return out


# --- one-point extensions ----------------------------------------------------

def test_one_point_examples():
    f_k4 = forbid(K4)
    s = FinStructure.from_tuples(HYPERGRAPH, 3, {"R": [(0, 1, 2)]})
    exts = one_point_extensions(f_k4, s, [0, 1, 2])
    k4_type = qf_type(K4, (0, 1, 2, 3))
    assert k4_type not in exts
    one_more = qf_type(FinStructure.from_tuples(HYPERGRAPH, 4, {"R": [(0, 1, 2), (0, 1, 3)]}), (0, 1, 2, 3))
    assert one_more in exts
    assert len(one_point_extensions(graph_age(), FinStructure.empty(GRAPH, 1), [0])) == 2
    assert len(one_point_extensions(builtin_age("parity"), FinStructure.empty(HYPERGRAPH, 0), [])) == 1


def test_one_point_rejects_forbidden_base():
    with pytest.raises(StructureError):
        one_point_extensions(forbid(K4), K4, [0, 1, 2, 3])


@settings(max_examples=30)
@given(hypergraphs(max_size=4), st.data())
def test_one_point_matches_brute_force(s, data):
    for age in (forbid(K4), builtin_age("parity")):
        if not is_permitted(age, s):
            continue
        base = data.draw(st.lists(st.integers(0, max(s.size - 1, 0)), unique=True, max_size=s.size))
        got = one_point_extensions(age, s, base)
        assert set(got) == _brute_extensions(age, s, base)
        assert got == sorted(got)


# --- growth ------------------------------------------------------------------

def test_grow_zero_steps():
    g = grow_generic(forbid(K4), 0, 5)
    assert g.size == 0 and g.log == []


def test_grow_rejects_empty_age():
    lone = FinStructure.empty(HYPERGRAPH, 1)
    with pytest.raises(GrowthError):
        grow_generic(AgeSpec(HYPERGRAPH, (lone,)), 3, 0)
    with pytest.raises(StructureError):
        grow_generic(forbid(K4), -1, 0)


def test_grow_tetrahedron_free_200():
    g = grow_generic(forbid(K4), 200, 42)
    assert g.size == 200
    assert is_permitted(forbid(K4), g.structure)
    assert g.replay() == g.structure


def test_grow_is_deterministic():
    a = grow_generic(forbid(K4), 60, 42)
    b = grow_generic(forbid(K4), 60, 42)
    assert a.structure.dumps() == b.structure.dumps()
    assert a.dumps_log() == b.dumps_log()


@pytest.mark.parametrize("name", ["parity", "F(K4)", "graphs"])
def test_replay_and_prefixes_permitted(name):
    age = builtin_age(name)
    g = grow_generic(age, 25, 3)
    assert g.replay() == g.structure
    for k in range(0, 26, 5):
        prefix = g.replay(k)
        assert prefix == induced_substructure(g.structure, range(k))
        assert is_permitted(age, prefix)


def test_log_json_roundtrip():
    g = grow_generic(forbid(K4), 12, 9)
    steps = [LogEntry.from_json(e) for e in g.log_json()["steps"]]
    assert replay_log(HYPERGRAPH, steps) == g.structure


def test_seeds_differ_and_resume():
    a = grow_generic(forbid(K4), 20, 1)
    b = grow_generic(forbid(K4), 20, 2)
    assert canonical_form(a.structure) != canonical_form(b.structure)
    half = grow_generic(forbid(K4), 10, 1)
    rest = grow_generic(forbid(K4), 10, 1, start=half)
    assert rest.structure == a.structure


# --- extension checks ----------------------------------------------------------

def test_extension_saturated_graph():
    g = grow_generic(graph_age(), 40, 0)
    assert check_extension_property(g, 2, sample=10 ** 6).ratio == 1.0
    assert check_extension_property(g, 0).ratio == 1.0


def test_extension_fresh_vertex_unmet():
    g = grow_generic(graph_age(), 1, 0)
    rep = check_extension_property(g, 1)
    assert rep.ratio < 1.0 and rep.unmet
    with pytest.raises(StructureError):
        check_extension_property(g, 3)


def test_extension_ratio_monotone():
    age = forbid(K4)
    full = grow_generic(age, 40, 7)
    ratios = []
    for k in (10, 20, 30, 40):
        g = GenericApprox(full.replay(k), age, 7)
        ratios.append(check_extension_property(g, 2, sample=10 ** 6).ratio)
    assert ratios == sorted(ratios)


def test_embeds_into_age():
    h = build_H_n(4)
    age = embeds_into_age(h)
    assert is_permitted(age, induced_substructure(h, [0, 1, 2]))
    assert not is_permitted(age, build_H_n(3))
    g = GenericApprox.from_structure(h)
    assert 0.0 <= check_extension_property(g, 1).ratio <= 1.0


def test_relative_extension_examples():
    g = grow_generic(graph_age(), 40, 4).structure
    assert check_extension_relative_to_E(g, [list(range(g.size))], [(0, 1)]).passed
    assert check_extension_relative_to_E(g, [list(range(g.size))], []).passed
    two = FinStructure.from_tuples(GRAPH, 3, {"E": [(0, 1)]})
    res = check_extension_relative_to_E(two, [[0, 1, 2]], [(0, 1), (0, 2)])
    assert not res.passed
    with pytest.raises(StructureError):
        check_extension_relative_to_E(two, [[0, 1, 2]], [(0, 0)])
    with pytest.raises(StructureError):
        check_extension_relative_to_E(two, [[0], [1, 2]], [(2, 0), (0, 1)])
    with pytest.raises(StructureError):
        check_extension_relative_to_E(TRI, [[0, 1, 2]], [(0, 1)])


@given(st.integers(0, 30), st.data())
def test_relative_extension_brute(seed, data):
    s = grow_generic(graph_age(), 8, seed).structure
    k = data.draw(st.integers(1, 3))
    pairs = data.draw(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)).filter(lambda p: p[0] != p[1]),
                               min_size=k, max_size=k))
    res = check_extension_relative_to_E(s, [list(range(8))], pairs)
    want = any(all(x != a and qf_type(s, (a, x)) == qf_type(s, (a, b)) for a, b in pairs) for x in range(8))
    assert res.passed == want
