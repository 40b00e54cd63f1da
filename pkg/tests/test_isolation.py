from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import hypergraphs
from ternage.age import enumerate_constraints, forbid, is_permitted
from ternage.constructions import (
    HYPERGRAPH,
    build_parity_hypergraph,
    builtin_age,
    catalog,
    graph_age,
    random_tournament,
    reduct_shape,
    structure_classes,
    tournament_from_adjacency,
    tournament_reduct,
)
from ternage.generic import GenericApprox, grow_generic
from ternage.isolation import enumerate_neighbours, is_weakly_isolated, search_definable_equivalence
from ternage.search import automorphisms
from ternage.structure import FinStructure, StructureError, qf_type

C1, C3, K4 = catalog("C1"), catalog("C3"), catalog("K4")


def _agree_off(a, b, triple):
    # same relations on every tuple whose range misses an element of the triple
    for r in a.signature.arities:
        for t in itertools.product(range(a.size), repeat=r):
            if not set(triple) <= set(t) and a.codes(r)[t] != b.codes(r)[t]:
                return False
    return True


# --- neighbours ----------------------------------------------------------------

def test_neighbour_examples():
    nbs = enumerate_neighbours(C1, (0, 1, 2))
    assert len(nbs) == 2 and C1 in nbs
    assert FinStructure.empty(HYPERGRAPH, 4) in nbs
    assert len(enumerate_neighbours(FinStructure.empty(HYPERGRAPH, 3), (0, 1, 2))) == 2
    r = tournament_reduct(random_tournament(4, 0))
    nbs = enumerate_neighbours(r, (0, 1, 3), reduct_shape())
    assert len(nbs) == 4
    assert len({int(structure_classes(n)[0, 1, 3]) for n in nbs}) == 4
    with pytest.raises(StructureError):
        enumerate_neighbours(C1, (0, 0, 1))


@given(hypergraphs(min_size=3, max_size=5), st.data())
def test_neighbours_agree_off_triple_and_are_symmetric(s, data):
    triple = tuple(sorted(data.draw(st.lists(st.integers(0, s.size - 1), min_size=3, max_size=3, unique=True))))
    nbs = enumerate_neighbours(s, triple)
    assert s in nbs
    for nb in nbs:
        assert _agree_off(s, nb, triple)
        assert s in enumerate_neighbours(nb, triple)


# --- isolation -----------------------------------------------------------------

@pytest.mark.parametrize("c,members", [(C1, (C1, C3)), (C3, (C1, C3)), (K4, (K4,))])
def test_isolated_examples(c, members):
    assert is_weakly_isolated(c, forbid(*members)).status == "isolated"


def test_isolation_errors():
    with pytest.raises(StructureError):
        is_weakly_isolated(C1, forbid(K4))
    with pytest.raises(StructureError):
        is_weakly_isolated(FinStructure.empty(HYPERGRAPH, 2), forbid(K4))


def _brute_status(s, age):
    some_all = True
    every_all = True
    for triple in itertools.combinations(range(s.size), 3):
        others = [n for n in enumerate_neighbours(s, triple) if n != s]
        ok = [is_permitted(age, n) for n in others]
        every_all &= all(ok)
        some_all &= any(ok)
    if every_all and some_all:
        return "isolated"
    return "weakly_isolated" if some_all else "not_weakly_isolated"


@settings(max_examples=20)
@given(st.sampled_from([(C1, C3), (K4,), (C3,), (C1,), (C3, K4)]))
def test_isolation_matches_brute(members):
    age = forbid(*members)
    for rec in enumerate_constraints(age, 5):
        rep = is_weakly_isolated(rec, age)
        assert rep.status == _brute_status(rec.structure, age)
        # symmetric ternary: the two notions coincide
        assert rep.status != "weakly_isolated"


def test_report_json():
    rep = is_weakly_isolated(C1, forbid(C1, C3)).to_json()
    assert rep["status"] == "isolated" and rep["triples"] == 4


# --- definable equivalence probes -------------------------------------------------

def test_no_candidates_in_tetrahedron_free_approx():
    g = grow_generic(builtin_age("F(K4)"), 40, 1)
    p = qf_type(g.structure, (0,))
    rep = search_definable_equivalence(g, (), p)
    assert rep.candidates == [] and rep.finite_evidence


def test_parity_probe_examines_link_relation():
    g = grow_generic(builtin_age("parity"), 30, 2)
    s = g.structure
    p = qf_type(s, (0, 1))
    rep = search_definable_equivalence(g, (0,), p)
    assert rep.two_types >= 2
    xs = [x for x in range(1, s.size) if qf_type(s, (0, x)) == p]
    for cand in rep.candidates:
        # every candidate is closed on the realizations and splits them
        assert sorted(x for c in cand.classes for x in c) == xs
        assert len(cand.classes) >= 2


def test_single_two_type_is_trivial():
    g = GenericApprox.from_structure(build_parity_hypergraph(FinStructure.empty(graph_age().signature, 6)))
    rep = search_definable_equivalence(g, (), qf_type(g.structure, (0,)))
    assert rep.two_types == 1 and rep.candidates == []


def test_probe_errors():
    small = GenericApprox.from_structure(FinStructure.empty(HYPERGRAPH, 3))
    with pytest.raises(StructureError):
        search_definable_equivalence(small, (), qf_type(small.structure, (0,)))
    big = GenericApprox.from_structure(FinStructure.empty(HYPERGRAPH, 8))
    with pytest.raises(StructureError):
        search_definable_equivalence(big, (0, 1, 2), qf_type(big.structure, (0, 1, 2, 3)))


def test_probe_candidates_invariant_under_automorphisms():
    # Paley tournament on 7 points: x -> x + q for the nonzero squares q
    adj = [[1 if (j - i) % 7 in (1, 2, 4) else 0 for j in range(7)] for i in range(7)]
    t = tournament_reduct(tournament_from_adjacency(adj))
    rep = search_definable_equivalence(t, (0,), qf_type(t, (0, 1)))
    auts = [g for g in automorphisms(t, limit=1000) if g[0] == 0]
    assert len(auts) > 1
    for cand in rep.candidates:
        cls_of = {x: k for k, c in enumerate(cand.classes) for x in c}
        for g in auts:
            for x, y in itertools.combinations(cls_of, 2):
                assert (cls_of[x] == cls_of[y]) == (cls_of[g[x]] == cls_of[g[y]])
