from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import MIXED, hypergraphs, structures, tournaments
from ternage.canon import canonical_form, canonical_labeling, is_isomorphic, refine_partition
from ternage.constructions import HYPERGRAPH, TERNARY, TOURNAMENT, build_H_n, catalog
from ternage.search import (
    automorphisms,
    brute_force_maps,
    compose,
    find_embedding,
    find_injective_homomorphism,
    is_embedding,
)
from ternage.structure import (
    FinStructure,
    QfType,
    Signature,
    StructureError,
    amalgam_embedding_of_b,
    free_amalgam,
    induced_substructure,
    is_symmetric,
    k_irreducible,
    qf_type,
    relabel,
)


def _brute_iso(a, b):
    if a.size != b.size or a.signature != b.signature:
        return False
    return any(relabel(b, p) == a for p in itertools.permutations(range(b.size)))


# --- signatures and parsing --------------------------------------------------

def test_signature_rejects_duplicates_and_bad_arity():
    with pytest.raises(StructureError):
        Signature.of(("R", 3), ("R", 2))
    with pytest.raises(StructureError):
        Signature.of(("R", 5))
    assert Signature.of(("R", 5), max_arity=5).top_arity == 5


def test_reflexive_tuples_rejected():
    with pytest.raises(StructureError):
        FinStructure.from_tuples(TERNARY, 3, {"R": [(0, 0, 1)]})
    with pytest.raises(StructureError):
        FinStructure.from_tuples(TERNARY, 3, {"R": [(0, 1, 3)]})


def test_symmetric_orbit_expanded_and_reemitted():
    h = FinStructure.from_tuples(HYPERGRAPH, 4, {"R": [(2, 0, 1)]})
    assert h.count("R") == 6
    assert h.to_json()["relations"]["R"] == [[0, 1, 2]]


@given(structures(MIXED, max_size=4))
def test_json_roundtrip(s):
    assert FinStructure.loads(s.dumps()) == s
    assert FinStructure.from_json(json.loads(json.dumps(s.to_json()))) == s


def test_from_codes_validates_symmetry():
    codes = np.zeros((3, 3, 3), dtype=np.uint8)
    codes[0, 1, 2] = 1
    with pytest.raises(StructureError):
        FinStructure.from_codes(HYPERGRAPH, 3, {3: codes})


# --- induced substructures and types ----------------------------------------

def test_induced_substructure_examples():
    h3 = build_H_n(3)
    assert induced_substructure(h3, [0, 1, 2, 3]) == h3
    c3 = catalog("C3")
    for sub in itertools.combinations(range(4), 3):
        assert induced_substructure(c3, sub).count("R") in (0, 6)
    k4 = catalog("K4")
    for sub in itertools.combinations(range(4), 3):
        assert induced_substructure(k4, sub).count("R") == 6
    with pytest.raises(StructureError):
        induced_substructure(k4, [0, 9])


def test_qf_type_examples():
    s = FinStructure.empty(TERNARY, 3)
    assert qf_type(s, ()) == QfType(0, (), ())
    cyc = FinStructure.from_tuples(TOURNAMENT, 3, {"E": [(0, 1), (1, 2), (2, 0)]})
    assert qf_type(cyc, (0, 1, 2)) == qf_type(cyc, (1, 2, 0))
    h3 = build_H_n(3)
    assert qf_type(h3, (0, 1, 2)) != qf_type(h3, (1, 2, 3))


def test_qf_type_records_repeats():
    s = catalog("K4")
    assert qf_type(s, (0, 0, 1)).equality == (0, 0, 2)
    assert qf_type(s, (0, 0, 1)) != qf_type(s, (0, 1, 2))


@given(structures(TERNARY, min_size=3, max_size=5), st.data())
def test_qf_type_invariant_under_automorphisms(s, data):
    t = data.draw(st.lists(st.integers(0, s.size - 1), min_size=1, max_size=3))
    for g in automorphisms(s):
        assert qf_type(s, t) == qf_type(s, [g[x] for x in t])


@given(structures(TERNARY, min_size=1, max_size=4), st.data())
def test_qf_type_matches_definition(s, data):
    t = data.draw(st.lists(st.integers(0, s.size - 1), min_size=1, max_size=3))
    u = data.draw(st.lists(st.integers(0, s.size - 1), min_size=len(t), max_size=len(t)))
    same_eq = all((t[i] == t[j]) == (u[i] == u[j]) for i in range(len(t)) for j in range(len(t)))
    same_rel = all(s.holds("R", [t[p] for p in pos]) == s.holds("R", [u[p] for p in pos])
                   for pos in itertools.product(range(len(t)), repeat=3)
                   if len({t[p] for p in pos}) == 3 or len({u[p] for p in pos}) == 3)
    assert (qf_type(s, t) == qf_type(s, u)) == (same_eq and same_rel)


# --- canonical forms ---------------------------------------------------------

def test_canonical_form_examples():
    c1 = catalog("C1")
    moved = relabel(c1, [3, 1, 0, 2])
    assert canonical_form(c1) == canonical_form(moved)
    assert canonical_form(c1) != canonical_form(catalog("C3"))
    assert canonical_form(build_H_n(3)) != canonical_form(build_H_n(4))


@given(structures(MIXED, max_size=5), st.data())
def test_canonical_form_relabel_invariant(s, data):
    p = data.draw(st.permutations(list(range(s.size))))
    assert canonical_form(relabel(s, p)) == canonical_form(s)
    cf, order = canonical_labeling(s)
    assert canonical_form(relabel(s, order)) == cf


@given(structures(TERNARY, min_size=3, max_size=4), structures(TERNARY, min_size=3, max_size=4))
def test_canonical_form_matches_brute_isomorphism(a, b):
    assert (canonical_form(a) == canonical_form(b)) == _brute_iso(a, b)
    assert is_isomorphic(a, b) == _brute_iso(a, b)


def test_refine_partition_examples():
    assert refine_partition(build_H_n(3)) == [[0], [1, 2, 3]]
    assert refine_partition(catalog("K4")) == [[0, 1, 2, 3]]
    assert refine_partition(FinStructure.empty(TERNARY, 5)) == [[0, 1, 2, 3, 4]]


@given(tournaments(max_size=6))
def test_refine_partition_is_invariant(t):
    parts = refine_partition(t)
    assert sorted(x for p in parts for x in p) == list(range(t.size))
    cls = {x: i for i, p in enumerate(parts) for x in p}
    for g in automorphisms(t):
        assert all(cls[x] == cls[g[x]] for x in range(t.size))


# --- embeddings and homomorphisms -------------------------------------------

def test_embedding_examples():
    for n in range(3, 6):
        h = build_H_n(n)
        assert find_embedding(h, h) is not None
    assert find_embedding(build_H_n(3), build_H_n(4)) is None
    assert find_embedding(catalog("K4_minus"), catalog("K4")) is None
    assert find_injective_homomorphism(catalog("K4_minus"), catalog("K4")) is not None
    assert find_injective_homomorphism(catalog("C1"), FinStructure.empty(HYPERGRAPH, 4)) is None


def test_h3_has_injective_homomorphism_into_h4():
    # only embeddings are ruled out between members of the family
    a, b = build_H_n(3), build_H_n(4)
    brute = brute_force_maps(a, b, hom=True)
    assert brute and (0, 1, 2, 3) in brute
    f = find_injective_homomorphism(a, b)
    assert f is not None and is_embedding(a, b, f, hom=True)


def test_signature_mismatch():
    with pytest.raises(StructureError):
        find_embedding(catalog("C1"), build_H_n(3))


@given(structures(TERNARY, max_size=4), structures(TERNARY, max_size=5))
def test_embedding_search_matches_brute_force(a, b):
    for hom in (False, True):
        brute = brute_force_maps(a, b, hom=hom)
        f = find_injective_homomorphism(a, b) if hom else find_embedding(a, b)
        assert (f is not None) == bool(brute)
        if f is not None:
            assert tuple(f) in brute


@given(hypergraphs(max_size=3), hypergraphs(max_size=4), hypergraphs(max_size=5))
def test_embeddings_compose(a, b, c):
    f, g = find_embedding(a, b), find_embedding(b, c)
    if f is not None and g is not None:
        assert is_embedding(a, c, compose(f, g))
    if f is not None:
        assert find_injective_homomorphism(a, b) is not None


@given(structures(TERNARY, max_size=4))
def test_automorphisms_match_brute_force(s):
    assert sorted(map(tuple, automorphisms(s, limit=10 ** 6))) == sorted(brute_force_maps(s, s))


# --- symmetry, irreducibility, amalgams -------------------------------------

def test_is_symmetric_examples():
    assert not is_symmetric(build_H_n(3))
    assert is_symmetric(FinStructure.empty(TERNARY, 4))
    assert is_symmetric(catalog("C3"))


def test_k_irreducible_examples():
    for n in range(3, 7):
        assert k_irreducible(build_H_n(n), 3)
    assert not k_irreducible(catalog("K4_minus"), 3)
    assert k_irreducible(catalog("K4_minus"), 2)
    with pytest.raises(StructureError):
        k_irreducible(catalog("K4"), 0)


@given(hypergraphs(max_size=5), st.integers(1, 3))
def test_k_irreducible_brute(h, k):
    edges = [set(t) for t in itertools.combinations(range(h.size), 3) if h.holds("R", t)]
    want = all(any(set(c) <= e for e in edges)
               for j in range(1, min(k, h.size) + 1) for c in itertools.combinations(range(h.size), j))
    assert k_irreducible(h, k) == want


def test_free_amalgam_examples():
    c1 = catalog("C1")
    assert free_amalgam(c1, c1, [(i, i) for i in range(4)]) == c1
    tri = FinStructure.from_tuples(HYPERGRAPH, 3, {"R": [(0, 1, 2)]})
    two = free_amalgam(tri, tri, [(0, 0), (1, 1)])
    assert two.size == 4 and len(two.to_json()["relations"]["R"]) == 2
    flat = FinStructure.empty(HYPERGRAPH, 3)
    one = free_amalgam(tri, flat, [(0, 0), (1, 1)])
    assert is_isomorphic(one, catalog("C1"))
    with pytest.raises(StructureError):
        free_amalgam(tri, flat, [(0, 0), (1, 1), (2, 2)])


@given(structures(TERNARY, min_size=1, max_size=4), structures(TERNARY, min_size=1, max_size=4),
       st.data())
def test_free_amalgam_restricts_back(a, b, data):
    e = data.draw(st.integers(0, min(a.size, b.size)))
    ai = data.draw(st.permutations(list(range(a.size))))[:e]
    part = relabel(a, ai)
    # graft the shared part into b so the overlap is consistent
    codes = {r: b.codes(r).copy() for r in b.signature.arities}
    for r in codes:
        codes[r][np.ix_(*([np.arange(e)] * r))] = part.codes(r)
    b = FinStructure(b.signature, b.size, codes)
    ov = list(zip(ai, range(e)))
    d = free_amalgam(a, b, ov)
    assert relabel(d, range(a.size)) == a
    assert relabel(d, amalgam_embedding_of_b(a, b, ov)) == b
    a_only = set(range(a.size)) - set(ai)
    b_only = set(range(a.size, d.size))
    for t in itertools.permutations(range(d.size), 3):
        if set(t) & a_only and set(t) & b_only:
            assert not d.holds("R", t)
