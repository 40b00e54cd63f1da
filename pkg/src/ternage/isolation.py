"""Neighbours of constraints, (weak) isolation, and finite probes for
definable equivalence relations on realization sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .age import AgeSpec, ConstraintRecord, is_permitted, make_record
from .cells import Shape, cell_options, read_cell, write_cell
from .constructions import realizations
from .structure import FinStructure, QfType, StructureError, qf_type

# neighbour lists larger than this are refused
MAX_NEIGHBOURS = 1 << 16
DEFAULT_MAX_PARAMS = 2
# unions of at most this many 2-types are enumerated exhaustively
MAX_TWO_TYPES = 16


@dataclass(frozen=True)
class NeighbourDelta:
    """Replacement fills for the cells covering ``triple``."""

    triple: tuple[int, int, int]
    cells: tuple[tuple[int, ...], ...]
    fills: tuple[tuple[int, ...], ...]

    def apply(self, s: FinStructure) -> FinStructure:
        codes = {r: a.copy() for r, a in s.code_arrays.items()}
        for cell, fill in zip(self.cells, self.fills):
            write_cell(codes[len(cell)], cell, fill)
        return FinStructure(s.signature, s.size, codes)


def covering_cells(s: FinStructure, triple) -> list[tuple[int, ...]]:
    """Cells whose element set contains all of ``triple``."""
    a, b, c = triple
    rest = [x for x in range(s.size) if x not in triple]
    out = []
    for r in s.signature.arities:
        if r < 3:
            continue
        for extra in itertools.combinations(rest, r - 3):
            out.append(tuple(sorted((a, b, c) + extra)))
    return out


def neighbour_deltas(s: FinStructure, triple, shape: Shape | None = None) -> list[NeighbourDelta]:
    triple = tuple(int(x) for x in triple)
    if len(set(triple)) != 3 or len(triple) != 3:
        raise StructureError("triple must list three distinct elements")
    if any(not 0 <= x < s.size for x in triple):
        raise StructureError("triple element out of range")
    cells = covering_cells(s, triple)
    opts = [cell_options(s.signature, len(c), shape) for c in cells]
    total = 1
    for o in opts:
        total *= len(o)
    if total > MAX_NEIGHBOURS:
        raise StructureError(f"{total} neighbours; too many to enumerate")
    return [NeighbourDelta(triple, tuple(cells), tuple(combo)) for combo in itertools.product(*opts)]


def enumerate_neighbours(c: FinStructure, triple, shape: Shape | None = None) -> list[FinStructure]:
    """Every structure agreeing with ``c`` off the tuples covering ``triple``
    (``c`` itself included), restricted to admissible cells when a shape is given.
    """
    return [d.apply(c) for d in neighbour_deltas(c, triple, shape)]


@dataclass
class IsolationReport:
    status: str  # isolated | weakly_isolated | not_weakly_isolated
    triples: int
    # per triple: a permitted neighbour, or None
    permitted_witness: dict = field(default_factory=dict)
    # a triple with a forbidden neighbour other than the constraint itself
    forbidden_witness: tuple | None = None
    # a triple all of whose neighbours are forbidden
    blocking_triple: tuple | None = None

    def to_json(self) -> dict:
        out = {"status": self.status, "triples": self.triples}
        if self.blocking_triple is not None:
            out["blocking_triple"] = list(self.blocking_triple)
        if self.forbidden_witness is not None:
            t, s = self.forbidden_witness
            out["forbidden_neighbour"] = {"triple": list(t), "structure": s.to_json()}
        return out


def is_weakly_isolated(c, age: AgeSpec) -> IsolationReport:
    """Classify a constraint by its neighbours at each unordered triple.

    The constraint is one of its own neighbours and is forbidden, so
    "every neighbour is permitted" is read as every neighbour other than
    the constraint itself.
    """
    s = c.structure if isinstance(c, ConstraintRecord) else c
    if s.size < 3:
        raise StructureError("constraint needs at least 3 elements")
    if is_permitted(age, s):
        raise StructureError("structure is permitted, not a constraint")
    all_ok = True
    some_ok = True
    report = IsolationReport("isolated", 0)
    for triple in itertools.combinations(range(s.size), 3):
        report.triples += 1
        found = None
        for nb in enumerate_neighbours(s, triple, age.shape):
            if nb == s:
                continue
            if is_permitted(age, nb):
                if found is None:
                    found = nb
            else:
                all_ok = False
                if report.forbidden_witness is None:
                    report.forbidden_witness = (triple, nb)
        report.permitted_witness[triple] = found
        if found is None:
            some_ok = False
            if report.blocking_triple is None:
                report.blocking_triple = triple
    if all_ok and some_ok:
        report.status = "isolated"
    elif some_ok:
        report.status = "weakly_isolated"
    else:
        report.status = "not_weakly_isolated"
    return report


# --- definable equivalence probes ---------------------------------------------

@dataclass
class EquivalenceCandidate:
    types: tuple[QfType, ...]
    classes: list[list[int]]
    finite_evidence: bool = True

    def to_json(self) -> dict:
        return {"types": [t.to_json() for t in self.types], "classes": self.classes,
                "finite_evidence": self.finite_evidence}


@dataclass
class EquivalenceReport:
    params: tuple[int, ...]
    realizations: int
    two_types: int
    unions_checked: int
    candidates: list = field(default_factory=list)
    finite_evidence: bool = True

    def to_json(self) -> dict:
        return {"params": list(self.params), "realizations": self.realizations,
                "two_types": self.two_types, "unions_checked": self.unions_checked,
                "finite_evidence": self.finite_evidence,
                "candidates": [c.to_json() for c in self.candidates]}


def _classes(rel: np.ndarray, elems: Sequence[int]) -> list[list[int]]:
    seen = set()
    out = []
    for i in range(len(elems)):
        if i in seen:
            continue
        cls = [j for j in range(len(elems)) if rel[i, j]]
        seen.update(cls)
        out.append([elems[j] for j in cls])
    return out


def search_definable_equivalence(g, params: Sequence[int], p: QfType,
                                 max_params: int = DEFAULT_MAX_PARAMS) -> EquivalenceReport:
    """Unions of qf 2-types over ``params`` that are equivalence relations on
    the realizations of ``p`` in this finite structure and are nontrivial.

    ``p`` is the type ``qf_type(., (*params, x))``.  Results are finite
    evidence only.
    """
    s = g.structure if hasattr(g, "structure") else g
    params = tuple(int(a) for a in params)
    if len(params) > max_params:
        raise StructureError(f"more than {max_params} parameters; raise max_params to allow")
    xs = realizations(s, params, [p])
    if len(xs) < 4:
        raise StructureError(f"only {len(xs)} realizations; need at least 4")
    m = len(xs)
    type_ids: dict[QfType, int] = {}
    tid = np.full((m, m), -1, dtype=np.int64)
    for i, j in itertools.permutations(range(m), 2):
        tp = qf_type(s, (*params, xs[i], xs[j]))
        tid[i, j] = type_ids.setdefault(tp, len(type_ids))
    types = sorted(type_ids, key=lambda t: type_ids[t])
    nt = len(types)
    if nt > MAX_TWO_TYPES:
        raise StructureError(f"{nt} two-types; union enumeration capped at {MAX_TWO_TYPES}")
    report = EquivalenceReport(params, m, nt, 0)
    eye = np.eye(m, dtype=bool)
    for mask in range(1 << nt):
        report.unions_checked += 1
        chosen = [k for k in range(nt) if mask >> k & 1]
        rel = np.isin(tid, chosen) | eye
        if not np.array_equal(rel, rel.T):
            continue
        r2 = (rel.astype(np.int64) @ rel.astype(np.int64)) > 0
        if np.any(r2 & ~rel):
            continue
        classes = _classes(rel, xs)
        if len(classes) >= 2 and any(len(c) >= 2 for c in classes):
            report.candidates.append(
                EquivalenceCandidate(tuple(sorted(types[k] for k in chosen)), classes))
    return report
