"""Cells: the tuples whose range is exactly a given vertex set.

Relationships are irreflexive, so the tuples with range exactly ``U``
are the ``|U|!`` orderings of ``U`` for symbols of arity ``|U|``.  An
*option* for a cell fills those tuples; it is stored as one code per
ordering, in ``itertools.permutations`` order.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .structure import FinStructure, Signature, StructureError

# raw options per cell beyond this need a shape to enumerate
MAX_RAW_OPTIONS = 1 << 16


@lru_cache(maxsize=None)
def perms(m: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.permutations(range(m)))


def raw_options(signature: Signature, m: int) -> list[tuple[int, ...]]:
    """Every fill of an ``m``-cell that respects symmetry flags."""
    syms = signature.by_arity(m)
    if not syms:
        return [tuple(0 for _ in perms(m))]
    free_bits = sum(1 if s.symmetric else len(perms(m)) for s in syms)
    if (1 << free_bits) > MAX_RAW_OPTIONS:
        raise StructureError(
            f"{1 << free_bits} fills per {m}-cell; supply a shape to enumerate them"
        )
    return _raw_options_cached(signature, m)


@lru_cache(maxsize=None)
def _raw_options_cached(signature: Signature, m: int) -> list[tuple[int, ...]]:
    syms = signature.by_arity(m)
    np_ = len(perms(m))
    choices = []
    for bit, s in enumerate(syms):
        if s.symmetric:
            choices.append([tuple(0 for _ in range(np_)), tuple(1 << bit for _ in range(np_))])
        else:
            per = []
            for mask in range(1 << np_):
                per.append(tuple((1 << bit) if mask >> k & 1 else 0 for k in range(np_)))
            choices.append(per)
    out = []
    for combo in itertools.product(*choices):
        out.append(tuple(sum(c[k] for c in combo) for k in range(np_)))
    return out


def read_cell(codes: np.ndarray, cell: Sequence[int]) -> tuple[int, ...]:
    return tuple(int(codes[tuple(cell[p] for p in perm)]) for perm in perms(len(cell)))


def write_cell(codes: np.ndarray, cell: Sequence[int], option: Sequence[int]) -> None:
    for perm, c in zip(perms(len(cell)), option):
        codes[tuple(cell[p] for p in perm)] = c


def cells_with(vertex: int, others: Sequence[int], arities: Iterable[int]) -> list[tuple[int, ...]]:
    """Cells containing ``vertex`` and otherwise drawn from ``others``; sorted tuples."""
    out = []
    for m in sorted(set(arities)):
        for rest in itertools.combinations(sorted(others), m - 1):
            out.append(tuple(sorted(rest + (vertex,))))
    return out


class Shape:
    """Admissible configurations of 3-cells.

    Built from example 3-element structures; all their relabellings are
    admitted.  Structures with an inadmissible 3-cell are outside the class
    under study and are never generated (the way non-symmetric
    interpretations of a symmetric symbol are never generated).
    """

    def __init__(self, signature: Signature, patterns: Iterable[FinStructure], name: str = "shape"):
        if 3 not in signature.arities:
            raise StructureError("a shape constrains ternary cells; signature has none")
        self.signature = signature
        self.name = name
        allowed = set()
        for p in patterns:
            if p.signature != signature or p.size != 3:
                raise StructureError("shape patterns must be 3-element structures over the signature")
            for relab in perms(3):
                allowed.add(read_cell(p.codes(3), relab))
        self.allowed = frozenset(allowed)
        self._options = sorted(self.allowed)

    def options(self) -> list[tuple[int, ...]]:
        return list(self._options)

    def admits(self, s: FinStructure) -> bool:
        if 3 not in s.signature.arities:
            return True
        c3 = s.codes(3)
        return all(read_cell(c3, cell) in self.allowed
                   for cell in itertools.combinations(range(s.size), 3))

    def __repr__(self):
        return f"Shape({self.name}, {len(self.allowed)} labelled 3-cells)"


def cell_options(signature: Signature, m: int, shape: Shape | None) -> list[tuple[int, ...]]:
    if m == 3 and shape is not None:
        return shape.options()
    return raw_options(signature, m)
