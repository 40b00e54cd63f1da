"""Example structures and structure-transforming constructions.

* the ``H_n`` family of ternary structures,
* parity hypergraphs of graphs and the 4-vertex catalog (C1, C3, K4, K4-),
* tournaments, reversal equivalence of tuples and the 4-class triple reduct,
* expansions ``M_P`` by parameter-absorbing symbols and their reducts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .age import AgeSpec
from .cells import Shape
from .structure import FinStructure, QfType, Signature, StructureError, is_symmetric, qf_type

HYPERGRAPH = Signature.of(("R", 3, True))
TERNARY = Signature.of(("R", 3, False))
GRAPH = Signature.of(("E", 2, True))
TOURNAMENT = Signature.of(("E", 2, False))
REDUCT = Signature.of(("R1", 3), ("R2", 3), ("R3", 3), ("R4", 3))

# class id -> reduct symbol; see kernels.triple_class for the numbering
CLASS_TABLE = {
    1: "R1: cyclic triple",
    2: "R2: transitive, middle element (neither source nor sink) in position 1",
    3: "R3: transitive, middle element in position 2",
    4: "R4: transitive, middle element in position 3",
}


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, *stream)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) & (2 ** 64 - 1), *stream])))


# --- H_n ------------------------------------------------------------------

def h_n_non_edge(n: int, a: int, b: int, c: int) -> bool:
    return a == 0 and b > 0 and ((b < n and c == b + 1) or (b == n and c == 1))


def build_H_n(n: int) -> FinStructure:
    """Universe {0..n}; R on every ordered distinct triple but the cyclic ``(0, b, b+1)`` pattern."""
    if n < 3:
        raise StructureError("H_n needs n >= 3")
    size = n + 1
    triples = [t for t in itertools.permutations(range(size), 3) if not h_n_non_edge(n, *t)]
    return FinStructure.from_tuples(TERNARY, size, {"R": triples})


def h_n_rotation(n: int) -> list[int]:
    """The map fixing 0 and cycling 1 -> 2 -> ... -> n -> 1."""
    return [0] + [k + 1 if k < n else 1 for k in range(1, n + 1)]


# --- hypergraphs ----------------------------------------------------------

def _check_graph(g: FinStructure) -> str:
    syms = g.signature.symbols
    if len(syms) != 1 or syms[0].arity != 2:
        raise StructureError("expected a graph: one binary symbol")
    if not is_symmetric(g):
        raise StructureError("graph relation is not symmetric")
    return syms[0].name


def build_parity_hypergraph(g: FinStructure) -> FinStructure:
    """Hyperedge on each 3-set spanning an odd number of edges of ``g``."""
    _check_graph(g)
    adj = (g.codes(2) != 0).astype(np.int64)
    s = adj[:, :, None] + adj[:, None, :] + adj[None, :, :]
    n = g.size
    codes = (s & 1).astype(np.uint8)
    idx = np.arange(n)
    codes[idx, idx, :] = 0
    codes[idx, :, idx] = 0
    codes[:, idx, idx] = 0
    return FinStructure(HYPERGRAPH, n, {3: codes})


def graph_from_bits(n: int, bits: int) -> FinStructure:
    pairs = list(itertools.combinations(range(n), 2))
    return FinStructure.from_tuples(GRAPH, n, {"E": [p for q, p in enumerate(pairs) if bits >> q & 1]})


def hypergraph_from_bits(n: int, bits: int) -> FinStructure:
    triples = list(itertools.combinations(range(n), 3))
    return FinStructure.from_tuples(HYPERGRAPH, n, {"R": [t for q, t in enumerate(triples) if bits >> q & 1]})


def hypergraph_bits(h: FinStructure) -> int:
    c = h.codes(3)
    return sum(1 << q for q, t in enumerate(itertools.combinations(range(h.size), 3)) if c[t])


_CATALOG = {
    "C1": [(0, 1, 2)],
    "C3": [(0, 1, 2), (0, 1, 3), (0, 2, 3)],
    "K4": [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)],
    "K4_minus": [(0, 1, 2), (0, 1, 3), (0, 2, 3)],
}


def catalog(name: str) -> FinStructure:
    try:
        edges = _CATALOG[name]
    except KeyError:
        raise StructureError(f"unknown catalog entry {name!r}; known: {sorted(_CATALOG)}") from None
    return FinStructure.from_tuples(HYPERGRAPH, 4, {"R": edges})


# --- tournaments -----------------------------------------------------------

def tournament_adjacency(t: FinStructure) -> np.ndarray:
    syms = t.signature.symbols
    if len(syms) != 1 or syms[0].arity != 2:
        raise StructureError("expected a tournament: one binary symbol")
    adj = (t.codes(2) != 0).astype(np.int8)
    off = ~np.eye(t.size, dtype=bool)
    if t.size and not np.all((adj + adj.T)[off] == 1):
        raise StructureError("not a tournament: some pair is not oriented exactly one way")
    return adj


def tournament_from_adjacency(adj) -> FinStructure:
    adj = np.asarray(adj, dtype=np.uint8)
    return FinStructure(TOURNAMENT, adj.shape[0], {2: adj})


def random_tournament(n: int, seed: int) -> FinStructure:
    if n < 0:
        raise StructureError("n must be non-negative")
    rng = rng_for(seed, 0)
    adj = np.zeros((n, n), dtype=np.uint8)
    iu = np.triu_indices(n, 1)
    up = rng.integers(0, 2, size=len(iu[0]), dtype=np.uint8)
    adj[iu] = up
    adj[(iu[1], iu[0])] = 1 - up
    return tournament_from_adjacency(adj)


def approx_n_equal(t: FinStructure, u: Sequence[int], v: Sequence[int]) -> bool:
    """Reversal equivalence of equal-length tuples of a tournament."""
    adj = tournament_adjacency(t)
    if len(u) != len(v) or len(u) < 2:
        raise StructureError("tuples must have the same length >= 2")
    for x in itertools.chain(u, v):
        if not 0 <= x < t.size:
            raise StructureError(f"element {x} out of range")
    return bool(kernels.approx_equal(adj, np.asarray(u, dtype=np.int64), np.asarray(v, dtype=np.int64)))


def approx_n_equal_by_triples(t: FinStructure, u: Sequence[int], v: Sequence[int]) -> bool:
    adj = tournament_adjacency(t)
    return bool(kernels.approx_equal_by_triples(adj, np.asarray(u, dtype=np.int64),
                                                np.asarray(v, dtype=np.int64)))


def _classes_to_structure(cls: np.ndarray) -> FinStructure:
    codes = np.where(cls > 0, np.left_shift(1, np.maximum(cls.astype(np.int64) - 1, 0)), 0)
    return FinStructure(REDUCT, cls.shape[0], {3: codes.astype(np.uint8)})


def tournament_reduct(t: FinStructure) -> FinStructure:
    """R_i holds on an ordered distinct triple iff its reversal class is ``i``."""
    if t.size < 3:
        raise StructureError("tournament reduct needs at least 3 vertices")
    adj = tournament_adjacency(t)
    return _classes_to_structure(kernels.reduct_classes(adj))


def structure_classes(s: FinStructure) -> np.ndarray:
    """Inverse of the reduct encoding: class ids (0 where no single R_i holds)."""
    c = s.codes(3).astype(np.int64)
    out = np.zeros(c.shape, dtype=np.int8)
    for i in range(4):
        out[c == (1 << i)] = i + 1
    return out


def lift_tournament(s: FinStructure):
    """Least tournament (by the kernel's pair order) whose reduct is ``s``, or None."""
    if s.signature != REDUCT:
        raise StructureError("expected a structure over R1..R4")
    found, adj, _ = kernels.tournament_lift(structure_classes(s))
    return tournament_from_adjacency(adj) if found else None


def _reduct_oracle(s: FinStructure) -> bool:
    found, _, _ = kernels.tournament_lift(structure_classes(s))
    return bool(found)


def reduct_shape() -> Shape:
    pats = [
        tournament_reduct(tournament_from_adjacency([[0, 1, 0], [0, 0, 1], [1, 0, 0]])),
        tournament_reduct(tournament_from_adjacency([[0, 1, 1], [0, 0, 1], [0, 0, 0]])),
    ]
    return Shape(REDUCT, pats, name="tournament triples")


def tournament_reduct_age() -> AgeSpec:
    """Age of the reduct of the generic tournament.

    Every 3-cell must be the image of a tournament triple (the shape); a
    whole structure is permitted iff some tournament on the same universe
    reduces to it.
    """
    return AgeSpec(REDUCT, (), oracle=_reduct_oracle, shape=reduct_shape(), name="tournament-reduct")


def parity_age() -> AgeSpec:
    return AgeSpec(HYPERGRAPH, (catalog("C1"), catalog("C3")), name="F(C1,C3)")


def tetrahedron_free_age() -> AgeSpec:
    return AgeSpec(HYPERGRAPH, (catalog("K4"),), name="F(K4)")


def graph_age(forbidden: Iterable[FinStructure] = ()) -> AgeSpec:
    return AgeSpec(GRAPH, tuple(forbidden), name="graphs")


def builtin_age(name: str) -> AgeSpec:
    table = {
        "tournament-reduct": tournament_reduct_age,
        "parity": parity_age,
        "F(C1,C3)": parity_age,
        "tetrahedron-free": tetrahedron_free_age,
        "F(K4)": tetrahedron_free_age,
        "graphs": graph_age,
    }
    try:
        return table[name]()
    except KeyError:
        raise StructureError(f"unknown builtin age {name!r}; known: {sorted(table)}") from None


# --- M_P ------------------------------------------------------------------

@dataclass(frozen=True)
class DerivedSymbol:
    name: str
    base: str
    params: tuple[int, ...]
    perm: tuple[int, ...]


@dataclass(frozen=True)
class ExpandedSignature:
    """Base vocabulary plus one symbol ``Q[R|a|pi]`` per base symbol ``R`` of
    arity ``r > 1``, parameter tuple ``a`` of length ``0 < k < r`` (entries
    may repeat) and permutation ``pi`` of the ``r`` positions.
    """

    base: Signature
    params: tuple[int, ...]
    derived: tuple[DerivedSymbol, ...]
    signature: Signature

    @classmethod
    def build(cls, base: Signature, params: Sequence[int]) -> "ExpandedSignature":
        params = tuple(int(a) for a in params)
        derived = []
        for sym in base.symbols:
            r = sym.arity
            if r < 2:
                continue
            for k in range(1, r):
                for abar in itertools.product(params, repeat=k):
                    for pi in itertools.permutations(range(r)):
                        name = "Q[%s|%s|%s]" % (sym.name, ".".join(map(str, abar)), "".join(map(str, pi)))
                        derived.append(DerivedSymbol(name, sym.name, abar, pi))
        syms = [(s.name, s.arity, s.symmetric) for s in base.symbols]
        syms += [(d.name, base.symbol(d.base).arity - len(d.params), False) for d in derived]
        return cls(base, params, tuple(derived), Signature.of(*syms, max_arity=base.max_arity))

    @property
    def derived_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.derived)


def realizations(m: FinStructure, a_params: Sequence[int], p_types: Iterable[QfType]) -> list[int]:
    """Elements outside ``a_params`` whose type over them (``qf_type(m, (*a, x))``) lies in ``p_types``."""
    a = [int(x) for x in a_params]
    if len(set(a)) != len(a):
        raise StructureError("parameters must be distinct")
    wanted = set(p_types)
    if not wanted:
        raise StructureError("p_types is empty")
    hit = {}
    for x in range(m.size):
        if x in a:
            continue
        tp = qf_type(m, (*a, x))
        if tp in wanted:
            hit.setdefault(tp, []).append(x)
    missing = wanted - set(hit)
    if missing:
        raise StructureError(f"{len(missing)} type(s) not realized outside the parameters")
    return sorted(x for xs in hit.values() for x in xs)


def build_M_P(m: FinStructure, a_params: Sequence[int], p_types: Iterable[QfType]) -> FinStructure:
    """Realizations of ``p_types`` with the base relations restricted and
    each ``Q[R|a|pi](b)`` holding iff ``R`` holds on ``pi`` applied to ``b`` followed by ``a``.
    """
    real = np.asarray(realizations(m, a_params, p_types), dtype=np.intp)
    ex = ExpandedSignature.build(m.signature, a_params)
    sig = ex.signature
    n = len(real)
    codes = {r: np.zeros((n,) * r, dtype=sig.code_dtype) for r in sig.arities}
    for sym in m.signature.symbols:
        r = sym.arity
        src = (m.codes(r) >> m.signature.bit(sym.name)) & 1
        part = src[np.ix_(*([real] * r))] if n else np.zeros((0,) * r, dtype=src.dtype)
        codes[r] |= (part.astype(sig.code_dtype) << sig.bit(sym.name))
    for d in ex.derived:
        r = m.signature.symbol(d.base).arity
        q = r - len(d.params)
        src = (m.codes(r) >> m.signature.bit(d.base)) & 1
        # c = b + a; the symbol reads R at (c[pi[0]], ..., c[pi[r-1]])
        index = []
        for pos in range(r):
            j = d.perm[pos]
            if j < q:
                shape = [1] * q
                shape[j] = n
                index.append(real.reshape(shape))
            else:
                index.append(np.full([1] * q, d.params[j - q], dtype=np.intp))
        vals = src[tuple(index)] if n else np.zeros((0,) * q, dtype=src.dtype)
        vals = np.broadcast_to(vals, (n,) * q)
        codes[q] |= (vals.astype(sig.code_dtype) << sig.bit(d.name))
    return FinStructure(sig, n, codes)


def reduct(s: FinStructure, names: Iterable[str]) -> FinStructure:
    """``s`` restricted to the named symbols."""
    names = list(names)
    sig = s.signature.restrict(names)
    codes = {r: np.zeros((s.size,) * r, dtype=sig.code_dtype) for r in sig.arities}
    for sym in sig.symbols:
        r = sym.arity
        bits = (s.codes(r) >> s.signature.bit(sym.name)) & 1
        codes[r] |= bits.astype(sig.code_dtype) << sig.bit(sym.name)
    return FinStructure(sig, s.size, codes)


def reduct_M_P_minus(mp: FinStructure) -> FinStructure:
    """Drop the base vocabulary, keeping the ``Q[...]`` symbols."""
    return reduct(mp, [s.name for s in mp.signature.symbols if s.name.startswith("Q[")])
