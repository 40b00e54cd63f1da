"""Finite relational structures over {0, ..., n-1}.

A structure keeps one dense code array per arity: ``codes[r]`` has shape
``(n,) * r`` and bit ``j`` of ``codes[r][t]`` is set when the ``j``-th
symbol of arity ``r`` holds on the tuple ``t``.  Tuple sets are derived
lazily.  Relationships only hold between pairwise distinct elements, so
every diagonal entry of a code array is zero.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_MAX_ARITY = 4
# dense arrays above this many cells are refused (arity 4 on large universes)
MAX_DENSE_CELLS = 40_000_000


class StructureError(ValueError):
    """Malformed structure, signature or element reference."""


@dataclass(frozen=True, order=True)
class Symbol:
    name: str
    arity: int
    symmetric: bool = False


@dataclass(frozen=True)
class Signature:
    symbols: tuple[Symbol, ...]
    max_arity: int = field(default=DEFAULT_MAX_ARITY, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        names = [s.name for s in self.symbols]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate symbol names in {names}")
        for s in self.symbols:
            if not 1 <= s.arity <= self.max_arity:
                raise StructureError(
                    f"symbol {s.name!r} has arity {s.arity}, allowed 1..{self.max_arity}"
                )
        for r in self.arities:
            if len(self.by_arity(r)) > 64:
                raise StructureError(f"more than 64 symbols of arity {r}")

    @classmethod
    def of(cls, *specs, max_arity: int = DEFAULT_MAX_ARITY) -> "Signature":
        """Build from ``(name, arity)`` or ``(name, arity, symmetric)`` tuples."""
        return cls(tuple(Symbol(*spec) for spec in specs), max_arity=max_arity)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.symbols)

    @cached_property
    def _lookup(self) -> dict[str, tuple[Symbol, int]]:
        out = {}
        for r in self.arities:
            for bit, s in enumerate(self.by_arity(r)):
                out[s.name] = (s, bit)
        return out

    def symbol(self, name: str) -> Symbol:
        try:
            return self._lookup[name][0]
        except KeyError:
            raise StructureError(f"unknown symbol {name!r}") from None

    def bit(self, name: str) -> int:
        """Bit position of ``name`` inside the code array of its arity."""
        return self._lookup[name][1]

    @cached_property
    def arities(self) -> tuple[int, ...]:
        return tuple(sorted({s.arity for s in self.symbols}))

    def by_arity(self, r: int) -> tuple[Symbol, ...]:
        return tuple(s for s in self.symbols if s.arity == r)

    @property
    def top_arity(self) -> int:
        return max(self.arities, default=0)

    @cached_property
    def code_dtype(self) -> np.dtype:
        widest = max((len(self.by_arity(r)) for r in self.arities), default=1)
        for dt in (np.uint8, np.uint16, np.uint32, np.uint64):
            if widest <= np.dtype(dt).itemsize * 8:
                return np.dtype(dt)
        raise StructureError("too many symbols")  # pragma: no cover

    def symmetric_mask(self, r: int) -> int:
        return sum(1 << b for b, s in enumerate(self.by_arity(r)) if s.symmetric)

    def restrict(self, names: Iterable[str]) -> "Signature":
        keep = set(names)
        return Signature(tuple(s for s in self.symbols if s.name in keep), self.max_arity)

    def to_json(self) -> list[dict]:
        return [{"name": s.name, "arity": s.arity, "symmetric": s.symmetric} for s in self.symbols]

    @classmethod
    def from_json(cls, data: Sequence[Mapping], max_arity: int = DEFAULT_MAX_ARITY) -> "Signature":
        return cls(
            tuple(Symbol(d["name"], int(d["arity"]), bool(d.get("symmetric", False))) for d in data),
            max_arity=max_arity,
        )


class FinStructure:
    """An immutable finite structure; build with :meth:`from_tuples` or :meth:`from_codes`."""

    __slots__ = ("signature", "size", "_codes", "_key", "__dict__")

    def __init__(self, signature: Signature, size: int, codes: Mapping[int, np.ndarray]):
        if size < 0:
            raise StructureError("size must be non-negative")
        self.signature = signature
        self.size = int(size)
        dt = signature.code_dtype
        arrs = {}
        for r in signature.arities:
            shape = (self.size,) * r
            if r > 1 and self.size ** r > MAX_DENSE_CELLS:
                raise StructureError(f"dense arity-{r} array on {self.size} elements is too large")
            arr = codes.get(r)
            if arr is None:
                arr = np.zeros(shape, dtype=dt)
            else:
                arr = np.ascontiguousarray(arr, dtype=dt)
                if arr.shape != shape:
                    raise StructureError(f"arity-{r} codes have shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            arrs[r] = arr
        self._codes = arrs
        self._key = None

    # construction -------------------------------------------------------

    @classmethod
    def from_codes(cls, signature: Signature, size: int, codes: Mapping[int, np.ndarray],
                   validate: bool = True) -> "FinStructure":
        s = cls(signature, size, codes)
        if validate:
            s._validate()
        return s

    @classmethod
    def from_tuples(cls, signature: Signature, size: int,
                    relations: Mapping[str, Iterable[Sequence[int]]] | None = None) -> "FinStructure":
        """Tuples of symmetric symbols may be orbit representatives; they are expanded."""
        dt = signature.code_dtype
        codes = {r: np.zeros((size,) * r, dtype=dt) for r in signature.arities}
        for name, tuples in (relations or {}).items():
            sym = signature.symbol(name)
            bit = dt.type(1 << signature.bit(name))
            for t in tuples:
                t = tuple(int(x) for x in t)
                if len(t) != sym.arity:
                    raise StructureError(f"{name}: tuple {t} does not have arity {sym.arity}")
                if any(x < 0 or x >= size for x in t):
                    raise StructureError(f"{name}: tuple {t} out of range for size {size}")
                if len(set(t)) != len(t):
                    raise StructureError(f"{name}: tuple {t} repeats an element")
                orbit = itertools.permutations(t) if sym.symmetric else (t,)
                for p in orbit:
                    codes[sym.arity][p] |= bit
        return cls(signature, size, codes)

    @classmethod
    def empty(cls, signature: Signature, size: int = 0) -> "FinStructure":
        return cls(signature, size, {})

    def _validate(self) -> None:
        for r, arr in self._codes.items():
            if self.size and r > 1:
                for i, j in itertools.combinations(range(r), 2):
                    if np.any(np.diagonal(arr, axis1=i, axis2=j)):
                        raise StructureError(f"arity-{r} relationship with a repeated element")
            mask = self.signature.symmetric_mask(r)
            if mask and r > 1:
                part = arr & arr.dtype.type(mask)
                for perm in itertools.permutations(range(r)):
                    if not np.array_equal(part, part.transpose(perm)):
                        raise StructureError("symmetric symbol is not permutation-closed")

    # access ---------------------------------------------------------------

    def codes(self, r: int) -> np.ndarray:
        return self._codes[r]

    @property
    def code_arrays(self) -> dict[int, np.ndarray]:
        return dict(self._codes)

    def holds(self, name: str, t: Sequence[int]) -> bool:
        sym = self.signature.symbol(name)
        if len(t) != sym.arity:
            raise StructureError(f"{name} has arity {sym.arity}")
        return bool(self._codes[sym.arity][tuple(t)] >> self.signature.bit(name) & 1)

    def tuples(self, name: str) -> list[tuple[int, ...]]:
        sym = self.signature.symbol(name)
        arr = self._codes[sym.arity]
        hits = np.argwhere((arr >> arr.dtype.type(self.signature.bit(name))) & arr.dtype.type(1))
        return [tuple(int(x) for x in row) for row in hits]

    @cached_property
    def relations(self) -> dict[str, frozenset]:
        return {s.name: frozenset(self.tuples(s.name)) for s in self.signature.symbols}

    def relationships(self) -> list[tuple[int, ...]]:
        """All tuples satisfying at least one symbol."""
        out = []
        for r in self.signature.arities:
            out.extend(tuple(int(x) for x in row) for row in np.argwhere(self._codes[r]))
        return out

    def count(self, name: str) -> int:
        return len(self.tuples(name))

    @property
    def key(self) -> bytes:
        """Exact (labelled) identity of the structure as bytes."""
        if self._key is None:
            parts = [self.size.to_bytes(4, "big")]
            for r in self.signature.arities:
                parts.append(self._codes[r].astype(">u8").tobytes())
            self._key = b"".join(parts)
        return self._key

    def __eq__(self, other):
        if not isinstance(other, FinStructure):
            return NotImplemented
        return self.signature == other.signature and self.key == other.key

    def __hash__(self):
        return hash((self.signature, self.key))

    def __repr__(self):
        rels = ", ".join(f"{s.name}:{len(self.relations[s.name])}" for s in self.signature.symbols)
        return f"FinStructure(n={self.size}, {rels})"

    # json -----------------------------------------------------------------

    def to_json(self) -> dict:
        rels = {}
        for s in self.signature.symbols:
            ts = self.tuples(s.name)
            if s.symmetric:
                ts = sorted({tuple(sorted(t)) for t in ts})
            rels[s.name] = [list(t) for t in ts]
        return {"signature": self.signature.to_json(), "size": self.size, "relations": rels}

    @classmethod
    def from_json(cls, data: Mapping) -> "FinStructure":
        try:
            sig = Signature.from_json(data["signature"])
            size = int(data["size"])
            rels = data.get("relations", {})
        except (KeyError, TypeError) as exc:
            raise StructureError(f"malformed structure document: {exc}") from None
        return cls.from_tuples(sig, size, rels)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def loads(cls, text: str) -> "FinStructure":
        return cls.from_json(json.loads(text))


def check_same_signature(a: FinStructure, b: FinStructure) -> None:
    if a.signature != b.signature:
        raise StructureError("structures have different signatures")


def _check_elements(s: FinStructure, elements: Iterable[int]) -> list[int]:
    out = [int(x) for x in elements]
    for x in out:
        if not 0 <= x < s.size:
            raise StructureError(f"element {x} out of range for size {s.size}")
    return out


def relabel(s: FinStructure, order: Sequence[int]) -> FinStructure:
    """The structure on ``len(order)`` elements where new ``i`` is old ``order[i]``.

    ``order`` must list distinct elements; with a proper subset this is the
    induced substructure in the given order.
    """
    idx = np.asarray(_check_elements(s, order), dtype=np.intp)
    if len(set(idx.tolist())) != len(idx):
        raise StructureError("relabel order repeats an element")
    codes = {}
    for r, arr in s.code_arrays.items():
        codes[r] = arr[np.ix_(*([idx] * r))] if len(idx) else np.zeros((0,) * r, arr.dtype)
    return FinStructure(s.signature, len(idx), codes)


def induced_substructure(s: FinStructure, subset: Iterable[int]) -> FinStructure:
    """Substructure on ``subset``, relabelled to 0..k-1 preserving order."""
    return relabel(s, sorted(set(_check_elements(s, subset))))


def delete_element(s: FinStructure, x: int) -> FinStructure:
    return induced_substructure(s, [y for y in range(s.size) if y != x])


@dataclass(frozen=True, order=True)
class QfType:
    """Atomic diagram of a tuple.

    ``equality[i]`` is the first position holding the same element as
    position ``i``; ``atoms`` lists ``(symbol, positions)`` pairs that hold.
    """

    arity: int
    equality: tuple[int, ...]
    atoms: tuple[tuple[str, tuple[int, ...]], ...]

    def to_json(self) -> dict:
        return {"arity": self.arity, "equality": list(self.equality),
                "atoms": [[n, list(p)] for n, p in self.atoms]}

    @classmethod
    def from_json(cls, d: Mapping) -> "QfType":
        return cls(int(d["arity"]), tuple(d["equality"]),
                   tuple((n, tuple(p)) for n, p in d["atoms"]))


def qf_type(s: FinStructure, t: Sequence[int]) -> QfType:
    t = _check_elements(s, t)
    k = len(t)
    equality = tuple(t.index(x) for x in t)
    atoms = []
    for r in s.signature.arities:
        arr = s.codes(r)
        syms = s.signature.by_arity(r)
        for pos in itertools.product(range(k), repeat=r):
            code = int(arr[tuple(t[p] for p in pos)])
            if code:
                for b, sym in enumerate(syms):
                    if code >> b & 1:
                        atoms.append((sym.name, pos))
    return QfType(k, equality, tuple(sorted(atoms)))


def is_symmetric(s: FinStructure) -> bool:
    for r, arr in s.code_arrays.items():
        for perm in itertools.permutations(range(r)):
            if not np.array_equal(arr, arr.transpose(perm)):
                return False
    return True


def k_irreducible(s: FinStructure, k: int) -> bool:
    """Every set of at most ``k`` elements lies inside the range of one relationship.

    Choices of ``k`` elements may repeat, so k-irreducible implies
    (k-1)-irreducible.
    """
    if k < 1:
        raise StructureError("k must be at least 1")
    covered = set()
    for t in s.relationships():
        rng = sorted(set(t))
        for j in range(1, min(k, len(rng)) + 1):
            covered.update(itertools.combinations(rng, j))
    for j in range(1, min(k, s.size) + 1):
        for subset in itertools.combinations(range(s.size), j):
            if subset not in covered:
                return False
    return True


def free_amalgam(a: FinStructure, b: FinStructure,
                 overlap: Iterable[tuple[int, int]]) -> FinStructure:
    """Free amalgam of ``a`` and ``b`` identifying ``a_i`` with ``b_j`` for each pair.

    Elements of ``a`` keep their labels; elements of ``b`` outside the
    overlap follow in increasing order.
    """
    check_same_signature(a, b)
    pairs = [(int(i), int(j)) for i, j in overlap]
    ai = [i for i, _ in pairs]
    bj = [j for _, j in pairs]
    _check_elements(a, ai)
    _check_elements(b, bj)
    if len(set(ai)) != len(ai) or len(set(bj)) != len(bj):
        raise StructureError("overlap is not injective")
    if relabel(a, ai) != relabel(b, bj):
        raise StructureError("overlap parts induce different substructures")
    b_map = dict((j, i) for i, j in pairs)
    nxt = a.size
    for y in range(b.size):
        if y not in b_map:
            b_map[y] = nxt
            nxt += 1
    n = nxt
    idx_b = np.array([b_map[y] for y in range(b.size)], dtype=np.intp)
    codes = {}
    for r in a.signature.arities:
        arr = np.zeros((n,) * r, dtype=a.signature.code_dtype)
        if a.size:
            arr[tuple(slice(0, a.size) for _ in range(r))] = a.codes(r)
        if b.size:
            arr[np.ix_(*([idx_b] * r))] |= b.codes(r)
        codes[r] = arr
    return FinStructure(a.signature, n, codes)


def amalgam_embedding_of_b(a: FinStructure, b: FinStructure,
                           overlap: Iterable[tuple[int, int]]) -> list[int]:
    """Where each element of ``b`` lands inside ``free_amalgam(a, b, overlap)``."""
    b_map = {int(j): int(i) for i, j in overlap}
    nxt = a.size
    out = []
    for y in range(b.size):
        if y not in b_map:
            b_map[y] = nxt
            nxt += 1
        out.append(b_map[y])
    return out
