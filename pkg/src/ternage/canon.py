"""Colour refinement and canonical forms.

The canonical form is the lexicographically least code encoding over the
labellings reachable by individualisation-refinement.  Refinement is a
label-invariant function of (structure, colouring), so the set of leaves
is permuted by relabelling and its minimum is an isomorphism invariant.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .structure import FinStructure, relabel


def _ranked_codes(s: FinStructure) -> dict[int, np.ndarray]:
    out = {}
    for r in s.signature.arities:
        _, inv = np.unique(s.codes(r), return_inverse=True)
        out[r] = inv.reshape(s.codes(r).shape).astype(np.int64)
    return out


def _compress(col: np.ndarray) -> np.ndarray:
    _, inv = np.unique(col, return_inverse=True)
    return inv.astype(np.int64)


def _refine(s: FinStructure, ranked: dict[int, np.ndarray], col: np.ndarray) -> np.ndarray:
    n = s.size
    col = _compress(col)
    while True:
        k = int(col.max()) + 1 if n else 0
        if k == n:
            return col
        parts = [col[:, None]]
        for r, rk in ranked.items():
            if r == 1:
                continue
            base = k + 1
            for p in range(r):
                moved = np.moveaxis(rk, p, 0)
                key = moved.copy()
                others = [q for q in range(r) if q != p]
                for axis, _ in enumerate(others, start=1):
                    shape = [1] * r
                    shape[axis] = n
                    key = key * base + col.reshape(shape)
                parts.append(np.sort(key.reshape(n, -1), axis=1))
        rows = np.concatenate(parts, axis=1)
        _, new = np.unique(rows, axis=0, return_inverse=True)
        new = np.asarray(new, dtype=np.int64).reshape(-1)
        if int(new.max()) + 1 == k:
            return new
        col = new


def _initial_colours(s: FinStructure) -> np.ndarray:
    if 1 in s.signature.arities:
        return _compress(s.codes(1).astype(np.int64))
    return np.zeros(s.size, dtype=np.int64)


def refine_partition(s: FinStructure) -> list[list[int]]:
    """Coarsest equitable partition; classes listed in colour order."""
    if s.size == 0:
        return []
    col = _refine(s, _ranked_codes(s), _initial_colours(s))
    return [sorted(np.flatnonzero(col == c).tolist()) for c in range(int(col.max()) + 1)]


def _encode(s: FinStructure, order: np.ndarray) -> bytes:
    parts = [s.size.to_bytes(4, "big")]
    for r in s.signature.arities:
        arr = s.codes(r)[np.ix_(*([order] * r))] if s.size else s.codes(r)
        parts.append(arr.astype(">u8").tobytes())
    return b"".join(parts)


def _orbit_closure(seeds: set[int], gens: list[np.ndarray]) -> set[int]:
    seen = set(seeds)
    frontier = list(seeds)
    while frontier:
        x = frontier.pop()
        for g in gens:
            y = int(g[x])
            if y not in seen:
                seen.add(y)
                frontier.append(y)
    return seen


def canonical_labeling(s: FinStructure) -> tuple[bytes, list[int]]:
    """``(form, order)`` where ``relabel(s, order)`` is the canonical representative."""
    n = s.size
    if n == 0:
        return _encode(s, np.zeros(0, dtype=np.intp)), []
    ranked = _ranked_codes(s)
    best: list = [None, None]
    gens: list[np.ndarray] = []

    def visit(col: np.ndarray, path: list[int]) -> None:
        k = int(col.max()) + 1
        if k == n:
            order = np.argsort(col, kind="stable")
            enc = _encode(s, order)
            if best[0] is None or enc < best[0]:
                best[0], best[1] = enc, order
            elif enc == best[0]:
                aut = np.empty(n, dtype=np.int64)
                aut[order] = best[1]
                if not np.array_equal(aut, np.arange(n)):
                    gens.append(aut)
            return
        sizes = np.bincount(col)
        target = int(np.flatnonzero(sizes > 1)[0])
        cell = np.flatnonzero(col == target).tolist()
        done: list[int] = []
        for v in cell:
            if done:
                fixing = [g for g in gens if all(int(g[p]) == p for p in path)]
                if v in _orbit_closure(set(done), fixing):
                    continue
            child = col * 2 + 1
            child[v] = col[v] * 2
            visit(_refine(s, ranked, child), path + [v])
            done.append(v)

    visit(_refine(s, ranked, _initial_colours(s)), [])
    return best[0], [int(x) for x in best[1]]


def canonical_form(s: FinStructure) -> bytes:
    return canonical_labeling(s)[0]


def canonical_structure(s: FinStructure) -> FinStructure:
    return relabel(s, canonical_labeling(s)[1])


def is_isomorphic(a: FinStructure, b: FinStructure) -> bool:
    return a.signature == b.signature and canonical_form(a) == canonical_form(b)

