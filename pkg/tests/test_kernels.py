from __future__ import annotations

import itertools
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ternage import kernels
from ternage._jit import USE_NUMBA


def _py(f):
    return getattr(f, "py_func", f)


def _colex_pairs(n):
    return [(i, j) for j in range(n) for i in range(j)]


def _bits_of(adj):
    return tuple(int(adj[i, j]) for i, j in _colex_pairs(adj.shape[0]))


def _classify(adj, x, y, z):
    # cyclic, otherwise the middle element has one edge in and one out
    if adj[x, y] and adj[y, z] and adj[z, x] or adj[y, x] and adj[z, y] and adj[x, z]:
        return 1
    for pos, v in enumerate((x, y, z)):
        others = [w for w in (x, y, z) if w != v]
        if sum(int(adj[v, w]) for w in others) == 1:
            return 2 + pos
    raise AssertionError("unreachable")


def _approx(adj, u, v):
    n = len(u)
    if any((u[i] == u[j]) != (v[i] == v[j]) for i in range(n) for j in range(n)):
        return False
    same = all(adj[u[i], u[j]] == adj[v[i], v[j]] for i in range(n) for j in range(n))
    flip = all(adj[u[i], u[j]] == adj[v[j], v[i]] for i in range(n) for j in range(n))
    return same or flip


@st.composite
def adjs(draw, min_size=1, max_size=7):
    n = draw(st.integers(min_size, max_size))
    m = n * (n - 1) // 2
    return kernels.tournament_from_bits(n, draw(st.integers(0, (1 << m) - 1)))


def test_backend_flag_selects_pure_python():
    env = dict(os.environ, TERNAGE_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from ternage._jit import USE_NUMBA; print(USE_NUMBA)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"


@given(adjs())
def test_tournament_from_bits_is_tournament(adj):
    n = adj.shape[0]
    assert np.all(adj + adj.T == 1 - np.eye(n, dtype=np.int8))


def test_triple_class_table():
    for bits in itertools.product((0, 1), repeat=3):
        adj = np.zeros((3, 3), dtype=np.int8)
        for (i, j), b in zip([(0, 1), (0, 2), (1, 2)], bits):
            adj[i, j], adj[j, i] = b, 1 - b
        assert kernels.triple_class(*bits) == _classify(adj, 0, 1, 2)


@given(adjs(min_size=3))
def test_reduct_classes_agree(adj):
    got = kernels.reduct_classes(adj)
    assert np.array_equal(got, kernels.reduct_classes_numpy(adj))
    n = adj.shape[0]
    for x, y, z in itertools.permutations(range(n), 3):
        assert got[x, y, z] == _classify(adj, x, y, z)
    assert kernels.reduct_shape_ok(got)


@pytest.mark.parametrize("n", range(0, 6))
def test_parity_images_agree(n):
    got = kernels.parity_images(n)
    assert np.array_equal(got, kernels.parity_images_numpy(n))
    assert np.array_equal(got, _py(kernels.parity_images)(n))


def test_parity_images_definition():
    n = 4
    pairs = list(itertools.combinations(range(n), 2))
    got = kernels.parity_images(n)
    for g in range(1 << len(pairs)):
        edges = {p for q, p in enumerate(pairs) if g >> q & 1}
        want = 0
        for t, tri in enumerate(itertools.combinations(range(n), 3)):
            if sum(p in edges for p in itertools.combinations(tri, 2)) % 2:
                want |= 1 << t
        assert got[g] == want


@pytest.mark.parametrize("n", [3, 4, 5])
def test_tournament_lift_brute(n):
    m = n * (n - 1) // 2
    all_adj = [kernels.tournament_from_bits(n, b) for b in range(1 << m)]
    cls_of = [kernels.reduct_classes(a) for a in all_adj]
    for cls in cls_of[:: max(1, len(cls_of) // 40)]:
        found, adj, _ = kernels.tournament_lift(cls)
        assert found
        assert np.array_equal(kernels.reduct_classes(adj), cls)
        matches = [a for a, c in zip(all_adj, cls_of) if np.array_equal(c, cls)]
        assert _bits_of(adj) == min(_bits_of(a) for a in matches)


def test_tournament_lift_rejects_bad_shape():
    cls = kernels.reduct_classes(kernels.tournament_from_bits(4, 5)).copy()
    cls[0, 1, 2] = 1 if cls[0, 1, 2] != 1 else 2
    found, _, _ = kernels.tournament_lift(cls)
    assert not found


@given(adjs(min_size=2, max_size=5), st.data())
def test_approx_equal_definition(adj, data):
    n = adj.shape[0]
    k = data.draw(st.integers(1, 4))
    u = np.array(data.draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k)), dtype=np.int64)
    v = np.array(data.draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k)), dtype=np.int64)
    assert bool(kernels.approx_equal(adj, u, v)) == _approx(adj, u, v)
    assert bool(kernels.approx_equal(adj, u, u))


def test_triple_class_counts_definition():
    counts, cyc, tra = kernels.triple_class_counts(4)
    for bits in range(1 << 6):
        adj = kernels.tournament_from_bits(4, bits)
        trips = list(itertools.permutations(range(4), 3))
        reps = []
        for t in trips:
            if not any(_approx(adj, t, r) for r in reps):
                reps.append(t)
        assert counts[bits] == len(reps)
        kinds = {_classify(adj, *t) == 1 for t in itertools.combinations(range(4), 3)}
        assert bool(cyc[bits]) == (True in kinds)
        assert bool(tra[bits]) == (False in kinds)


def test_reversal_triples_small_exhaustive():
    assert kernels.reversal_exhaustive(4, 3) == 0


@given(adjs(min_size=3, max_size=6), st.data())
def test_reversal_triples_pairs_counts(adj, data):
    n = adj.shape[0]
    rows = data.draw(st.lists(st.lists(st.integers(0, n - 1), min_size=4, max_size=4),
                              min_size=1, max_size=6))
    tup = np.array(rows, dtype=np.int64)
    bad, pos = kernels.reversal_pairs(adj, tup)
    assert bad == 0
    assert pos == sum(_approx(adj, a, b) for a in rows for b in rows)


@pytest.mark.skipif(not USE_NUMBA, reason="numba backend not active")
def test_compiled_matches_python_bodies():
    adj = kernels.tournament_from_bits(6, 9876)
    cls = kernels.reduct_classes(adj)
    assert np.array_equal(cls, _py(kernels.reduct_classes)(adj))
    f1, a1, n1 = kernels.tournament_lift(cls)
    f2, a2, n2 = _py(kernels.tournament_lift)(cls)
    assert (f1, n1) == (f2, n2) and np.array_equal(a1, a2)
    tup = np.array(list(itertools.product(range(3), repeat=3)), dtype=np.int64)
    assert tuple(kernels.reversal_pairs(adj, tup)) == tuple(_py(kernels.reversal_pairs)(adj, tup))
    c1 = kernels.triple_class_counts(4)
    c2 = _py(kernels.triple_class_counts)(4)
    assert all(np.array_equal(x, y) for x, y in zip(c1, c2))
