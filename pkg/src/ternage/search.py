"""Embedding and injective-homomorphism search on top of the kernels."""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .structure import FinStructure, check_same_signature

_DUMMY_ASG = (
    np.ones((1, 1), dtype=np.uint8),
    np.ones((1, 1, 1), dtype=np.uint8),
    np.ones((1, 1, 1, 1), dtype=np.uint8),
)


_NO_FIX = np.zeros(1, dtype=np.int64)


def kernel_arrays(s: FinStructure):
    """``(c1, c2, c3, c4, has)`` for the kernels."""
    dt = s.signature.code_dtype
    arrs = []
    has = np.zeros(5, dtype=np.bool_)
    for r in (1, 2, 3, 4):
        if r in s.signature.arities:
            arrs.append(s.codes(r))
            has[r] = True
        else:
            arrs.append(np.zeros((1,) * r, dtype=dt))
    return (*arrs, has)


def _search_order(a: FinStructure) -> np.ndarray:
    # connected-first order: each next vertex shares the most relationships
    # with the already placed ones, ties by index
    n = a.size
    if n <= 1:
        return np.arange(n, dtype=np.int64)
    weight = np.zeros((n, n), dtype=np.int64)
    for r in a.signature.arities:
        if r < 2:
            continue
        nz = a.codes(r) != 0
        for i, j in itertools.permutations(range(r), 2):
            axes = tuple(k for k in range(r) if k not in (i, j))
            m = nz.any(axis=axes) if axes else nz
            if i > j:
                m = m.T
            weight += m
    order = [int(np.argmax(weight.sum(axis=1)))]
    left = set(range(n)) - set(order)
    while left:
        best = max(left, key=lambda v: (weight[v, order].sum(), -v))
        order.append(best)
        left.remove(best)
    return np.array(order, dtype=np.int64)


_TWIN_CACHE: dict = {}


def twin_classes(a: FinStructure) -> list[list[int]]:
    """Classes of vertices that any transposition within a class fixes ``a``."""
    key = (a.signature, a.size, a.key)
    hit = _TWIN_CACHE.get(key)
    if hit is not None:
        return hit
    from .structure import relabel

    cls = []
    placed = set()
    for i in range(a.size):
        if i in placed:
            continue
        group = [i]
        for j in range(i + 1, a.size):
            if j in placed:
                continue
            swap = list(range(a.size))
            swap[i], swap[j] = j, i
            if relabel(a, swap) == a:
                group.append(j)
        placed.update(group)
        cls.append(group)
    if len(_TWIN_CACHE) > 4096:
        _TWIN_CACHE.clear()
    _TWIN_CACHE[key] = cls
    return cls


def _twin_order(a: FinStructure, order: np.ndarray):
    # within each twin class, place members in index order and chain them
    order = order.copy()
    prev = np.full(a.size, -1, dtype=np.int64)
    for group in twin_classes(a):
        if len(group) < 2:
            continue
        slots = sorted(int(np.flatnonzero(order == x)[0]) for x in group)
        for slot, x in zip(slots, group):
            order[slot] = x
        for x, y in zip(group, group[1:]):
            prev[y] = x
    return order, prev


def search_maps(a: FinStructure, b: FinStructure, *, hom: bool = False,
                domain: Iterable[int] | None = None, anchors: Sequence[int] = (),
                assigned: dict[int, np.ndarray] | None = None,
                max_results: int = 1) -> tuple[list[list[int]], int]:
    """All-purpose front end to :func:`kernels.embed_search`.

    Returns ``(maps, nodes)`` with at most ``max_results`` maps.  When a
    single map is asked for, interchangeable vertices of ``a`` are sent to
    increasing images, which cuts the search without losing existence.
    """
    check_same_signature(a, b)
    a1, a2, a3, a4, has = kernel_arrays(a)
    b1, b2, b3, b4, _ = kernel_arrays(b)
    dom = np.ones(b.size, dtype=np.bool_)
    if domain is not None:
        dom[:] = False
        dom[list(domain)] = True
    anc = np.array(sorted(set(int(x) for x in anchors)), dtype=np.int64)
    if anc.size and not dom[anc].all():
        return [], 0
    if assigned is None:
        use_asg = False
        g2, g3, g4 = _DUMMY_ASG
    else:
        use_asg = True
        g2 = assigned.get(2, _DUMMY_ASG[0])
        g3 = assigned.get(3, _DUMMY_ASG[1])
        g4 = assigned.get(4, _DUMMY_ASG[2])
    order = _search_order(a)
    if max_results == 1:
        order, prev = _twin_order(a, order)
    else:
        prev = np.full(a.size, -1, dtype=np.int64)
    res, count, nodes = kernels.embed_search(
        a.size, b.size, a1, a2, a3, a4, b1, b2, b3, b4, has, hom,
        order, dom, anc, use_asg, g2, g3, g4, max_results,
        0, _NO_FIX, prev,
    )
    return [list(map(int, res[k])) for k in range(count)], int(nodes)


def find_embedding(a: FinStructure, b: FinStructure) -> list[int] | None:
    """An injective map whose image is an induced copy of ``a`` in ``b``."""
    maps, _ = search_maps(a, b)
    return maps[0] if maps else None


def find_injective_homomorphism(a: FinStructure, b: FinStructure) -> list[int] | None:
    """An injective map sending every relationship of ``a`` to one of ``b``."""
    maps, _ = search_maps(a, b, hom=True)
    return maps[0] if maps else None


def automorphisms(s: FinStructure, limit: int = 1000) -> list[list[int]]:
    maps, _ = search_maps(s, s, max_results=limit)
    return maps


def is_embedding(a: FinStructure, b: FinStructure, f: Sequence[int], hom: bool = False) -> bool:
    """Direct check of a candidate map, independent of the search."""
    check_same_signature(a, b)
    if len(f) != a.size or len(set(f)) != len(f):
        return False
    if any(not 0 <= y < b.size for y in f):
        return False
    idx = np.asarray(f, dtype=np.intp)
    for r in a.signature.arities:
        ca = a.codes(r)
        cb = b.codes(r)[np.ix_(*([idx] * r))] if a.size else ca
        if hom:
            if np.any(ca & ~cb):
                return False
        elif not np.array_equal(ca, cb):
            return False
    return True


def brute_force_maps(a: FinStructure, b: FinStructure, hom: bool = False) -> list[tuple[int, ...]]:
    """Every injective map ``a -> b`` of the requested kind, by plain enumeration."""
    check_same_signature(a, b)
    return [f for f in itertools.permutations(range(b.size), a.size)
            if is_embedding(a, b, f, hom=hom)]


def compose(f: Sequence[int], g: Sequence[int]) -> list[int]:
    """``g`` after ``f``."""
    return [g[x] for x in f]

