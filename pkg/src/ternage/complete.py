"""Filling undecided cells of a structure without creating forbidden copies.

Ages given by forbidden structures use :func:`kernels.complete_cells`;
ages with an oracle fall back to a Python search that checks every
vertex set whose cells are all decided (up to ``CLOSED_CHECK`` elements)
and the whole structure at the end.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from . import kernels
from .cells import cell_options, perms, write_cell
from .search import automorphisms
from .structure import FinStructure, relabel

CLOSED_CHECK = 5


class ForbiddenPack:
    """Forbidden structures laid out for the completion kernel."""

    def __init__(self, signature, forbidden: Sequence[FinStructure]):
        self.signature = signature
        dt = signature.code_dtype
        nf = len(forbidden)
        big = max((f.size for f in forbidden), default=1) or 1
        self.fsize = np.array([f.size for f in forbidden], dtype=np.int64)
        self.fa = []
        for r in (1, 2, 3, 4):
            if r in signature.arities:
                arr = np.zeros((max(nf, 1),) + (big,) * r, dtype=dt)
                for k, f in enumerate(forbidden):
                    if f.size:
                        arr[(k,) + tuple(slice(0, f.size) for _ in range(r))] = f.codes(r)
            else:
                arr = np.zeros((max(nf, 1),) + (1,) * r, dtype=dt)
            self.fa.append(arr)
        # placements of an m-cell onto a forbidden structure, one per
        # automorphism orbit, each followed by the remaining vertices
        reps = []
        for f in forbidden:
            auts = automorphisms(f, limit=100000) if f.size else [[]]
            per_m = {}
            for m in range(5):
                seen = set()
                rows = []
                if m <= f.size:
                    for phi in itertools.permutations(range(f.size), m):
                        best = min(tuple(g[x] for x in phi) for g in auts)
                        if best in seen:
                            continue
                        seen.add(best)
                        rest = [x for x in range(f.size) if x not in best]
                        rows.append(list(best) + rest)
                per_m[m] = rows
            reps.append(per_m)
        maxrep = max((len(rows) for per_m in reps for rows in per_m.values()), default=1) or 1
        self.forder = np.zeros((max(nf, 1), 5, maxrep, big), dtype=np.int64)
        self.nreps = np.zeros((max(nf, 1), 5), dtype=np.int64)
        for k, per_m in enumerate(reps):
            for m, rows in per_m.items():
                self.nreps[k, m] = len(rows)
                for r, row in enumerate(rows):
                    self.forder[k, m, r, :len(row)] = row
        if nf == 0:
            self.fsize = np.zeros(0, dtype=np.int64)


def _perm_table():
    table = np.zeros((5, 24, 4), dtype=np.int64)
    nperm = np.zeros(5, dtype=np.int64)
    for m in range(1, 5):
        ps = perms(m)
        nperm[m] = len(ps)
        for q, p in enumerate(ps):
            table[m, q, :m] = p
    return table, nperm


_PERMS, _NPERM = _perm_table()


def _option_table(age, sizes):
    per = {m: cell_options(age.signature, m, age.shape) for m in sizes}
    maxopt = max((len(v) for v in per.values()), default=1)
    opts = np.zeros((5, maxopt, 24), dtype=age.signature.code_dtype)
    nopts = np.zeros(5, dtype=np.int64)
    for m, rows in per.items():
        nopts[m] = len(rows)
        for o, row in enumerate(rows):
            opts[m, o, :len(row)] = row
    return opts, nopts


def _working_arrays(signature, n, codes, assigned):
    dt = signature.code_dtype
    out = []
    for r in (1, 2, 3, 4):
        if r in signature.arities:
            out.append(codes[r])
        else:
            out.append(np.zeros((1,) * r, dtype=dt))
    gs = []
    for r in (2, 3, 4):
        if r in signature.arities:
            gs.append(assigned[r])
        else:
            gs.append(np.ones((1,) * r, dtype=np.uint8))
    return out, gs


def complete(age, codes: dict[int, np.ndarray], assigned: dict[int, np.ndarray],
             cells: Sequence[tuple[int, ...]], rng: np.random.Generator | None = None,
             max_nodes: int = 10 ** 7) -> tuple[int, int]:
    """Fill ``cells`` in place.  Returns ``(status, nodes)`` like the kernel.

    ``codes`` are writable code arrays of one structure, ``assigned`` holds
    a uint8 flag per tuple for arities 2..4 (1 = decided).  Cells must have
    at least two elements.  With ``rng`` the options of each cell are tried
    in a random order, otherwise in their canonical order.
    """
    sig = age.signature
    n = next(iter(codes.values())).shape[0] if codes else 0
    if not cells:
        return 1, 0
    if age.oracle is not None:
        return _complete_py(age, codes, assigned, cells, rng, max_nodes)
    pack = age.forbidden_pack()
    sizes = sorted({len(c) for c in cells})
    opts, nopts = _option_table(age, sizes)
    nc = len(cells)
    cell_arr = np.full((nc, 4), -1, dtype=np.int64)
    csize = np.zeros(nc, dtype=np.int64)
    for k, c in enumerate(cells):
        cell_arr[k, :len(c)] = c
        csize[k] = len(c)
    maxopt = opts.shape[1]
    order = np.zeros((nc, maxopt), dtype=np.int64)
    for m in sizes:
        rows = np.flatnonzero(csize == m)
        no = nopts[m]
        if rng is None:
            order[rows, :no] = np.arange(no)
        else:
            order[rows, :no] = np.argsort(rng.random((len(rows), no)), axis=1, kind="stable")
    (b1, b2, b3, b4), (g2, g3, g4) = _working_arrays(sig, n, codes, assigned)
    has = np.zeros(5, dtype=np.bool_)
    for r in sig.arities:
        has[r] = True
    status, nodes = kernels.complete_cells(
        n, b1, b2, b3, b4, g2, g3, g4, has, age.mode == "hom",
        cell_arr, csize, opts, nopts, order, _PERMS, _NPERM,
        pack.fa[0], pack.fa[1], pack.fa[2], pack.fa[3], pack.fsize, pack.forder,
        pack.nreps, max_nodes,
    )
    return int(status), int(nodes)


def _complete_py(age, codes, assigned, cells, rng, max_nodes):
    from .age import is_permitted_cached

    sig = age.signature
    n = next(iter(codes.values())).shape[0]
    opts = {m: cell_options(sig, m, age.shape) for m in {len(c) for c in cells}}
    open_cells = set(cells)
    order = []
    for c in cells:
        no = len(opts[len(c)])
        order.append(list(rng.permutation(no)) if rng is not None else list(range(no)))
    nodes = 0

    def snapshot():
        return FinStructure(sig, n, {r: a.copy() for r, a in codes.items()})

    def closed_ok(cell) -> bool:
        # vertex sets containing ``cell`` with no undecided cell inside
        others = [x for x in range(n) if x not in cell]
        cur = None
        for extra in range(0, CLOSED_CHECK - len(cell) + 1):
            for add in itertools.combinations(others, extra):
                w = set(cell) | set(add)
                if any(set(u) <= w for u in open_cells):
                    continue
                if cur is None:
                    cur = snapshot()
                sub = sorted(w)
                if not is_permitted_cached(age, relabel(cur, sub)):
                    return False
        return True

    def rec(k) -> int:
        nonlocal nodes
        if k == len(cells):
            return 1 if is_permitted_cached(age, snapshot()) else 0
        cell = cells[k]
        m = len(cell)
        for o in order[k]:
            nodes += 1
            if nodes > max_nodes:
                return -1
            write_cell(codes[m], cell, opts[m][o])
            open_cells.discard(cell)
            if closed_ok(cell):
                st = rec(k + 1)
                if st != 0:
                    return st
            open_cells.add(cell)
        write_cell(codes[m], cell, [0] * len(perms(m)))
        return 0

    status = rec(0)
    if status == 1:
        for c in cells:
            m = len(c)
            if m >= 2 and m in assigned:
                write_cell(assigned[m], c, [1] * len(perms(m)))
    return status, nodes
