"""Seeded finite approximations of generic structures.

Growth adds one vertex per step.  Each step picks a *demand*: a subset
``S`` of at most ``bound`` vertices together with a permitted one-point
type over ``S`` that no vertex realizes yet.  The new vertex gets that
type over ``S``; its relationships with the other vertices are filled in
random order, backtracking when a forbidden copy would appear.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .age import AgeSpec, is_permitted, is_permitted_cached
from .budget import Budget
from .cells import cell_options, cells_with, perms, read_cell, write_cell
from .complete import complete
from .constructions import rng_for
from .structure import FinStructure, QfType, StructureError, induced_substructure, qf_type

DEFAULT_BOUND = 3
# random subsets tried per demand size before moving to the next size
SUBSET_TRIES = 8


class GrowthError(RuntimeError):
    pass


@dataclass
class LogEntry:
    subset: tuple[int, ...]
    type: QfType | None
    tuples: dict  # arity -> list of (tuple, code) for tuples through the new vertex
    redundant: bool = False

    def to_json(self) -> dict:
        return {
            "subset": list(self.subset),
            "type": self.type.to_json() if self.type is not None else None,
            "redundant": self.redundant,
            "tuples": {str(r): [[list(t), c] for t, c in rows] for r, rows in sorted(self.tuples.items())},
        }

    @classmethod
    def from_json(cls, d: dict) -> "LogEntry":
        tp = QfType.from_json(d["type"]) if d.get("type") is not None else None
        rows = {int(r): [(tuple(t), int(c)) for t, c in v] for r, v in d["tuples"].items()}
        return cls(tuple(d["subset"]), tp, rows, bool(d.get("redundant", False)))


@dataclass
class GenericApprox:
    structure: FinStructure
    age: AgeSpec
    seed: int
    bound: int = DEFAULT_BOUND
    log: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.structure.size

    @classmethod
    def from_structure(cls, s: FinStructure, age: AgeSpec | None = None, seed: int = 0) -> "GenericApprox":
        """Wrap an existing structure; its age defaults to "embeds into ``s``"."""
        if age is None:
            age = embeds_into_age(s)
        return cls(s, age, seed, DEFAULT_BOUND, [])

    def replay(self, upto: int | None = None) -> FinStructure:
        return replay_log(self.structure.signature, self.log[:upto])

    def to_json(self) -> dict:
        return {"structure": self.structure.to_json(), "seed": self.seed, "bound": self.bound,
                "age": self.age.name}

    def log_json(self) -> dict:
        return {"version": 1, "seed": self.seed, "bound": self.bound,
                "steps": [e.to_json() for e in self.log]}

    def dumps_log(self) -> str:
        return json.dumps(self.log_json(), sort_keys=True, separators=(",", ":"))


def embeds_into_age(s: FinStructure, name: str = "") -> AgeSpec:
    """The age of ``s`` itself, decided by embedding search."""
    from .search import find_embedding

    def oracle(x: FinStructure) -> bool:
        return x.size <= s.size and find_embedding(x, s) is not None

    return AgeSpec(s.signature, (), oracle=oracle, name=name or f"age of a {s.size}-element structure")


def replay_log(signature, entries: Sequence[LogEntry]) -> FinStructure:
    n = len(entries)
    codes = {r: np.zeros((n,) * r, dtype=signature.code_dtype) for r in signature.arities}
    for v, e in enumerate(entries):
        for r, rows in e.tuples.items():
            for t, c in rows:
                if max(t) != v or v not in t:
                    raise StructureError(f"log step {v} writes a tuple not through the new vertex")
                codes[r][t] = c
    return FinStructure.from_codes(signature, n, codes)


# --- one-point extensions -------------------------------------------------

def _extended_codes(s: FinStructure):
    n = s.size
    codes = {}
    for r in s.signature.arities:
        arr = np.zeros((n + 1,) * r, dtype=s.signature.code_dtype)
        if n:
            arr[tuple(slice(0, n) for _ in range(r))] = s.codes(r)
        codes[r] = arr
    return codes


def _sub(sig, codes, subset) -> FinStructure:
    idx = np.asarray(sorted(subset), dtype=np.intp)
    return FinStructure(sig, len(idx), {r: a[np.ix_(*([idx] * r))] for r, a in codes.items()})


def _assigned_except(sig, n, cells):
    out = {}
    for r in sig.arities:
        if r >= 2:
            g = np.ones((n,) * r, dtype=np.uint8)
            for c in cells:
                if len(c) == r:
                    write_cell(g, c, [0] * len(perms(r)))
            out[r] = g
    return out


def _assigned_off(sig, n, v, keep):
    # every tuple through ``v`` undecided except those inside the ``keep`` cells
    out = {}
    for r in sig.arities:
        if r >= 2:
            g = np.ones((n,) * r, dtype=np.uint8)
            for axis in range(r):
                g[(slice(None),) * axis + (v,)] = 0
            for c in keep:
                if len(c) == r:
                    write_cell(g, c, [1] * len(perms(r)))
            out[r] = g
    return out


def extensions(age: AgeSpec, s: FinStructure, base: Sequence[int], budget=None):
    """``[(type, structure)]``: each realizable type of a new element over ``base``
    with one witness structure on ``s.size + 1`` elements (new element last).
    """
    budget = Budget.coerce(budget)
    sig = age.signature
    base = [int(x) for x in base]
    if len(set(base)) != len(base) or any(not 0 <= x < s.size for x in base):
        raise StructureError("base must list distinct elements of the structure")
    n = s.size
    v = n
    codes = _extended_codes(s)
    arities = list(sig.arities)
    type_cells = sorted(cells_with(v, base, arities), key=lambda c: (len(c), c))
    type_set = set(type_cells)
    rest = [c for c in sorted(cells_with(v, range(n), arities), key=lambda c: (len(c), c))
            if c not in type_set]
    options = {m: cell_options(sig, m, age.shape) for m in {len(c) for c in type_cells}}
    out = {}
    closed = sorted(set(base) | {v})

    def leaf():
        if not is_permitted_cached(age, _sub(sig, codes, closed)):
            return
        tp = qf_type(_sub(sig, codes, range(n + 1)), (*base, v))
        if tp in out:
            return
        if rest:
            trial = {r: a.copy() for r, a in codes.items()}
            status, nodes = complete(age, trial, _assigned_except(sig, n + 1, rest), rest)
            budget.spend(nodes)
            if status != 1:
                return
            full = FinStructure(sig, n + 1, trial)
        else:
            full = FinStructure(sig, n + 1, {r: a.copy() for r, a in codes.items()})
        out[tp] = full

    def rec(k):
        if k == len(type_cells):
            leaf()
            return
        cell = type_cells[k]
        m = len(cell)
        for opt in options[m]:
            budget.spend()
            write_cell(codes[m], cell, opt)
            if len(cell) < len(closed) and not is_permitted_cached(age, _sub(sig, codes, cell)):
                continue
            rec(k + 1)
        write_cell(codes[m], cell, [0] * len(perms(m)))

    rec(0)
    return sorted(out.items(), key=lambda p: p[0])


def one_point_extensions(age: AgeSpec, s: FinStructure, base: Sequence[int], budget=None) -> list[QfType]:
    """Types of a new element over ``base`` (as ``qf_type(., (*base, new))``)
    for which ``s`` plus the new element can be made permitted.
    """
    if not is_permitted(age, induced_substructure(s, base)):
        raise StructureError("the base induces a forbidden structure")
    return [tp for tp, _ in extensions(age, s, base, budget)]


# --- realized types ---------------------------------------------------------

def _positions(k: int, r: int):
    # position tuples over (*S, x) of length r through x, repeats allowed
    return [p for p in itertools.product(range(k + 1), repeat=r) if k in p]


def type_rows(s_codes: dict, subset: Sequence[int], xs: np.ndarray) -> np.ndarray:
    """One row per element of ``xs`` encoding its type over ``subset``."""
    k = len(subset)
    cols = []
    for r in sorted(s_codes):
        arr = s_codes[r]
        for p in _positions(k, r):
            idx = []
            for q in p:
                idx.append(xs if q == k else np.full(len(xs), subset[q], dtype=np.intp))
            cols.append(arr[tuple(idx)].astype(np.uint64))
    if not cols:
        return np.zeros((len(xs), 0), dtype=np.uint64)
    return np.stack(cols, axis=1)


def realized_rows(s: FinStructure, subset: Sequence[int]) -> set[bytes]:
    xs = np.array([x for x in range(s.size) if x not in set(subset)], dtype=np.intp)
    if not len(xs):
        return set()
    rows = type_rows(s.code_arrays, list(subset), xs)
    return {row.tobytes() for row in rows}


def _ext_row(ext: FinStructure) -> bytes:
    k = ext.size - 1
    return type_rows(ext.code_arrays, list(range(k)), np.array([k], dtype=np.intp))[0].tobytes()


def _local_extensions(age: AgeSpec, sub: FinStructure):
    memo = age._cache.setdefault("ext", {})
    key = sub.key
    if key not in memo:
        memo[key] = [(tp, ext, _ext_row(ext)) for tp, ext in extensions(age, sub, range(sub.size))]
    return memo[key]


# --- growth ----------------------------------------------------------------

def _pick_demand(age, g: FinStructure, k: int, rng):
    n = g.size
    total = math.comb(n, k)
    tries = min(SUBSET_TRIES, total)
    seen = set()
    for _ in range(tries * 4):
        if len(seen) >= tries:
            break
        subset = tuple(sorted(int(x) for x in rng.choice(n, size=k, replace=False))) if k else ()
        if subset in seen:
            continue
        seen.add(subset)
        exts = _local_extensions(age, induced_substructure(g, subset))
        realized = realized_rows(g, subset)
        missing = [e for e in exts if e[2] not in realized]
        if missing:
            return subset, missing[int(rng.integers(len(missing)))]
    return None


def _realize(age, g: FinStructure, subset, ext: FinStructure, rng, budget: Budget):
    sig = age.signature
    n = g.size
    v = n
    codes = _extended_codes(g)
    k = len(subset)
    local = list(subset) + [v]
    for cell in cells_with(k, range(k), sig.arities):
        target = tuple(local[x] for x in cell)
        write_cell(codes[len(cell)], target, read_cell(ext.codes(len(cell)), cell))
    type_cells = {tuple(sorted(local[x] for x in c)) for c in cells_with(k, range(k), sig.arities)}
    rest = [c for c in sorted(cells_with(v, range(n), sig.arities), key=lambda c: (len(c), c))
            if c not in type_cells]
    assigned = _assigned_off(sig, n + 1, v, type_cells)
    remaining = None if budget.nodes is None else max(budget.nodes - budget.used, 0)
    status, nodes = complete(age, codes, assigned, rest, rng,
                             max_nodes=10 ** 12 if remaining is None else remaining)
    budget.spend(nodes)
    if status != 1:
        return None
    return FinStructure(sig, n + 1, codes)


def _through(arr: np.ndarray, v: int):
    """Nonzero entries of ``arr`` whose tuple has ``v`` as its largest element."""
    r = arr.ndim
    parts = []
    for mask in range(1, 1 << r):
        at = [i for i in range(r) if mask >> i & 1]
        idx = tuple(v if i in at else slice(0, v) for i in range(r))
        sub = np.asarray(arr[idx])
        free = [i for i in range(r) if i not in at]
        hits = np.argwhere(sub) if free else np.zeros((1 if sub else 0, 0), dtype=np.intp)
        rows = np.full((len(hits), r + 1), v, dtype=np.int64)
        rows[:, free] = hits
        rows[:, r] = sub[tuple(hits.T)] if free else sub
        parts.append(rows)
    rows = np.concatenate(parts) if parts else np.zeros((0, r + 1), dtype=np.int64)
    rows = rows[np.lexsort(rows[:, ::-1].T)] if len(rows) else rows
    return [(tuple(x[:r]), x[r]) for x in rows.tolist()]


def _log_entry(new: FinStructure, subset, tp, redundant) -> LogEntry:
    v = new.size - 1
    rows = {r: _through(new.codes(r), v) for r in new.signature.arities}
    return LogEntry(tuple(subset), tp, rows, redundant)


def grow_generic(age: AgeSpec, steps: int, seed: int, bound: int = DEFAULT_BOUND,
                 budget=None, start: GenericApprox | None = None) -> GenericApprox:
    """Grow an approximation by ``steps`` vertices.

    Step ``i`` uses the generator keyed by ``(seed, i)`` and serves demand
    sizes round-robin (``i mod (bound + 1)`` first, then the next sizes).
    When no unmet demand turns up, an already realized type is added again.
    """
    if steps < 0:
        raise StructureError("steps must be non-negative")
    budget = Budget.coerce(budget)
    if start is not None:
        g, log = start.structure, list(start.log)
    else:
        g, log = FinStructure.empty(age.signature, 0), []
    if steps and not extensions(age, FinStructure.empty(age.signature, 0), []):
        raise GrowthError("the age has no permitted one-element structure")
    for _ in range(steps):
        step = len(log)
        rng = rng_for(seed, step)
        sizes = [(step + j) % (bound + 1) for j in range(bound + 1)]
        sizes = [k for k in sizes if k <= g.size]
        new = None
        for k in sizes:
            demand = _pick_demand(age, g, k, rng)
            if demand is None:
                continue
            subset, (tp, ext, _) = demand
            new = _realize(age, g, subset, ext, rng, budget)
            if new is not None:
                log.append(_log_entry(new, subset, tp, False))
                break
        if new is None:
            # every sampled demand is met (or unrealizable): repeat a realized type
            k = sizes[0]
            subset = tuple(sorted(int(x) for x in rng.choice(g.size, size=k, replace=False))) if k else ()
            exts = _local_extensions(age, induced_substructure(g, subset))
            for j in rng.permutation(len(exts)):
                tp, ext, _ = exts[int(j)]
                new = _realize(age, g, subset, ext, rng, budget)
                if new is not None:
                    log.append(_log_entry(new, subset, tp, True))
                    break
            if new is None:
                raise GrowthError(f"step {step}: no one-point extension could be completed")
        g = new
    return GenericApprox(g, age, seed, bound, log)


# --- extension checks -------------------------------------------------------

@dataclass
class ExtensionReport:
    demand_size: int
    subsets: int
    demands: int
    realized: int
    unmet: list = field(default_factory=list)

    @property
    def ratio(self) -> float:
        return 1.0 if self.demands == 0 else self.realized / self.demands

    def to_json(self) -> dict:
        return {"demand_size": self.demand_size, "subsets": self.subsets, "demands": self.demands,
                "realized": self.realized, "ratio": self.ratio,
                "unmet": [{"subset": list(s), "type": t.to_json()} for s, t in self.unmet[:20]]}


def check_extension_property(g: GenericApprox, demand_size: int, sample: int = 200, seed: int = 0,
                             restrict_to: Sequence[int] | None = None) -> ExtensionReport:
    """Fraction of (subset, permitted one-point type) demands already realized.

    All subsets of ``demand_size`` elements are examined when there are at
    most ``sample`` of them, otherwise ``sample`` distinct random ones.
    """
    s = g.structure
    pool = list(range(s.size)) if restrict_to is None else sorted(set(restrict_to))
    if demand_size > len(pool) or demand_size < 0:
        raise StructureError("demand_size exceeds the structure")
    total = math.comb(len(pool), demand_size)
    if total <= sample:
        subsets = list(itertools.combinations(pool, demand_size))
    else:
        rng = rng_for(seed, 1 << 32)
        chosen = set()
        while len(chosen) < sample:
            pick = rng.choice(len(pool), size=demand_size, replace=False)
            chosen.add(tuple(sorted(pool[int(i)] for i in pick)))
        subsets = sorted(chosen)
    demands = realized = 0
    unmet = []
    for subset in subsets:
        exts = _local_extensions(g.age, induced_substructure(s, subset))
        have = realized_rows(s, subset)
        for tp, _, row in exts:
            demands += 1
            if row in have:
                realized += 1
            else:
                unmet.append((subset, tp))
    return ExtensionReport(demand_size, len(subsets), demands, realized, unmet)


@dataclass
class RelativeExtensionResult:
    passed: bool
    witness: int | None = None


def check_extension_relative_to_E(s: FinStructure, e: Sequence[Sequence[int]],
                                  demands: Sequence[tuple[int, int]]) -> RelativeExtensionResult:
    """Is there ``b`` with ``tp(a_i, b) = tp(a_i, b_i)`` for every demand ``(a_i, b_i)``?"""
    if any(r > 2 for r in s.signature.arities):
        raise StructureError("expected a binary structure")
    cls_of = {}
    for k, cls in enumerate(e):
        for x in cls:
            if x in cls_of:
                raise StructureError("partition classes overlap")
            cls_of[int(x)] = k
    if sorted(cls_of) != list(range(s.size)):
        raise StructureError("partition does not cover the universe")
    demands = [(int(a), int(b)) for a, b in demands]
    for a, b in demands:
        if a == b:
            raise StructureError("demand with b_i = a_i")
        if not (0 <= a < s.size and 0 <= b < s.size):
            raise StructureError("demand element out of range")
    if len({cls_of[b] for _, b in demands}) > 1:
        raise StructureError("demand b_i lie in different classes")
    if not demands:
        return RelativeExtensionResult(True)
    wanted = [(a, qf_type(s, (a, b))) for a, b in demands]
    for x in range(s.size):
        if all(x != a and qf_type(s, (a, x)) == tp for a, tp in wanted):
            return RelativeExtensionResult(True, x)
    return RelativeExtensionResult(False)
