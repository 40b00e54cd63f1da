"""Ages presented by forbidden structures.

An :class:`AgeSpec` is the class of finite structures into which no
forbidden member maps (by embedding, or by injective homomorphism in
``"hom"`` mode), optionally cut down further by an external oracle and a
:class:`~ternage.cells.Shape` restricting which 3-cells occur at all.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .budget import Budget, BudgetExceeded
from .canon import canonical_form
from .cells import Shape, cell_options, cells_with, perms, read_cell, write_cell
from .search import search_maps
from .structure import (
    FinStructure,
    Signature,
    StructureError,
    delete_element,
    free_amalgam,
    induced_substructure,
    k_irreducible,
    relabel,
)

MODES = {"embedding": "embedding", "hom": "hom", "injective-homomorphism": "hom"}
# memo of small permittedness answers, per age
_MEMO_MAX_SIZE = 8
# hom-mode constraints are read off supersets of the members up to this many
_MAX_SUPERSETS = 1 << 14


@dataclass(eq=False)
class AgeSpec:
    """Forbidden set plus closure mode.

    ``forbidden`` is normalised on construction: isomorphic copies are
    merged and a member into which another member maps is dropped, since
    it can never be the first obstruction found.
    """

    signature: Signature
    forbidden: tuple = ()
    mode: str = "embedding"
    oracle: Callable[[FinStructure], bool] | None = None
    shape: Shape | None = None
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        try:
            self.mode = MODES[self.mode]
        except KeyError:
            raise StructureError(f"unknown mode {self.mode!r}") from None
        members = []
        seen = set()
        for f in self.forbidden:
            if f.signature != self.signature:
                raise StructureError("forbidden structure over a different signature")
            cf = canonical_form(f)
            if cf not in seen:
                seen.add(cf)
                members.append((cf, f))
        members.sort(key=lambda p: (p[1].size, p[0]))
        hom = self.mode == "hom"
        kept = []
        for i, (cf, f) in enumerate(members):
            redundant = any(
                j != i and g.size <= f.size and search_maps(g, f, hom=hom)[0]
                for j, (_, g) in enumerate(members)
            )
            if not redundant:
                kept.append(f)
        self.forbidden = tuple(kept)
        if self.shape is not None and self.shape.signature != self.signature:
            raise StructureError("shape over a different signature")

    @property
    def plain(self) -> bool:
        """Decided by the forbidden set alone."""
        return self.oracle is None and self.shape is None

    def forbidden_pack(self):
        from .complete import ForbiddenPack

        if "pack" not in self._cache:
            self._cache["pack"] = ForbiddenPack(self.signature, self.forbidden)
        return self._cache["pack"]

    def to_json(self) -> dict:
        if self.oracle is not None:
            raise StructureError(f"age {self.name!r} uses an oracle; refer to it by name")
        return {
            "name": self.name,
            "mode": self.mode,
            "signature": self.signature.to_json(),
            "forbidden": [f.to_json() for f in self.forbidden],
        }

    @classmethod
    def from_json(cls, data: dict) -> "AgeSpec":
        if "builtin" in data:
            from .constructions import builtin_age

            return builtin_age(data["builtin"])
        sig = Signature.from_json(data["signature"])
        members = [FinStructure.from_json({"signature": data["signature"], **f})
                   if "signature" not in f else FinStructure.from_json(f)
                   for f in data.get("forbidden", [])]
        return cls(sig, tuple(members), data.get("mode", "embedding"), name=data.get("name", ""))


def forbid(*members: FinStructure, mode: str = "embedding", name: str = "") -> AgeSpec:
    if not members:
        raise StructureError("forbid() needs at least one member; use AgeSpec for the empty set")
    return AgeSpec(members[0].signature, tuple(members), mode, name=name)


def is_permitted(age: AgeSpec, s: FinStructure) -> bool:
    if s.signature != age.signature:
        raise StructureError("structure and age have different signatures")
    if age.shape is not None and not age.shape.admits(s):
        return False
    hom = age.mode == "hom"
    for f in age.forbidden:
        if f.size <= s.size and search_maps(f, s, hom=hom)[0]:
            return False
    if age.oracle is not None:
        return bool(age.oracle(s))
    return True


def is_permitted_cached(age: AgeSpec, s: FinStructure) -> bool:
    if s.size > _MEMO_MAX_SIZE:
        return is_permitted(age, s)
    memo = age._cache.setdefault("memo", {})
    k = s.key
    if k not in memo:
        memo[k] = is_permitted(age, s)
    return memo[k]


# --- constraints ----------------------------------------------------------

@dataclass
class ConstraintRecord:
    """A forbidden structure whose one-point deletions are all permitted.

    ``deletion_permitted[x]`` records the check for deleting ``x``;
    ``elements`` maps back into the structure the record was cut from
    (identity for enumerated constraints); ``trace`` lists minimisation
    decisions when the record comes from :func:`minimize_forbidden`.
    """

    structure: FinStructure
    deletion_permitted: tuple[bool, ...]
    canonical: bytes
    elements: tuple[int, ...] = ()
    trace: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.structure.size

    @property
    def is_constraint(self) -> bool:
        return all(self.deletion_permitted)

    def to_json(self) -> dict:
        out = {
            "size": self.size,
            "canonical": self.canonical.hex(),
            "structure": self.structure.to_json(),
            "deletion_permitted": list(self.deletion_permitted),
        }
        if self.elements:
            out["elements"] = list(self.elements)
        if self.trace:
            out["trace"] = [list(t) for t in self.trace]
        return out


def make_record(age: AgeSpec, s: FinStructure, elements=(), trace=None) -> ConstraintRecord:
    dels = tuple(is_permitted_cached(age, delete_element(s, x)) for x in range(s.size))
    return ConstraintRecord(s, dels, canonical_form(s), tuple(elements), list(trace or []))


class _Levels:
    """Permitted structures of each size up to isomorphism, built upward."""

    def __init__(self, age: AgeSpec, budget: Budget):
        self.age = age
        self.budget = budget
        self.levels: list[dict[bytes, FinStructure]] = []
        self.constraints: dict[int, list[FinStructure]] = {}
        empty = FinStructure.empty(age.signature, 0)
        if is_permitted(age, empty):
            self.levels.append({canonical_form(empty): empty})
            self.constraints[0] = []
        else:
            self.levels.append({})
            self.constraints[0] = [empty]

    def permitted_cf(self, cf: bytes, size: int) -> bool:
        return cf in self.levels[size]

    def sub_permitted(self, codes: dict, subset) -> bool:
        idx = np.asarray(sorted(subset), dtype=np.intp)
        sub = FinStructure(self.age.signature, len(idx),
                           {r: a[np.ix_(*([idx] * r))] for r, a in codes.items()})
        memo = self.age._cache.setdefault("memo", {})
        k = sub.key
        if k in memo:
            return memo[k]
        ok = canonical_form(sub) in self.levels[sub.size]
        memo[k] = ok
        return ok

    def build(self, size: int) -> None:
        while len(self.levels) <= size:
            self._next_level()

    def _next_level(self) -> None:
        age = self.age
        sig = age.signature
        n = len(self.levels) - 1
        v = n
        found: dict[bytes, FinStructure] = {}
        cons: dict[bytes, FinStructure] = {}
        arities = [r for r in sig.arities if r <= n + 1]
        cells = cells_with(v, range(n), arities)
        cells.sort(key=lambda c: (max((x for x in c if x != v), default=-1), len(c), c))
        # checkpoint after the last cell whose older vertices are all <= j
        checkpoints = {}
        for idx, c in enumerate(cells):
            checkpoints[max((x for x in c if x != v), default=-1)] = idx
        check_at = {idx: j for j, idx in checkpoints.items()}
        options = {m: cell_options(sig, m, age.shape) for m in {len(c) for c in cells}}

        for parent in self.levels[n].values():
            codes = {r: np.zeros((n + 1,) * r, dtype=sig.code_dtype) for r in sig.arities}
            for r in sig.arities:
                if n:
                    codes[r][tuple(slice(0, n) for _ in range(r))] = parent.codes(r)

            def finish():
                cand = FinStructure(sig, n + 1, {r: a.copy() for r, a in codes.items()})
                for u in range(n):
                    if not self.sub_permitted(codes, [x for x in range(n + 1) if x != u]):
                        return
                cf = canonical_form(cand)
                if cf in found or cf in cons:
                    return
                if is_permitted(age, cand):
                    found[cf] = cand
                else:
                    cons[cf] = cand

            def rec(k):
                if k == len(cells):
                    finish()
                    return
                cell = cells[k]
                m = len(cell)
                for opt in options[m]:
                    self.budget.spend()
                    write_cell(codes[m], cell, opt)
                    if m < n + 1 and not self.sub_permitted(codes, cell):
                        continue
                    j = check_at.get(k)
                    if j is not None and j + 2 < n + 1:
                        if not self.sub_permitted(codes, list(range(j + 1)) + [v]):
                            continue
                    rec(k + 1)
                write_cell(codes[m], cell, [0] * len(perms(m)))

            if not cells:
                finish()
            else:
                rec(0)
        self.levels.append(dict(sorted(found.items())))
        self.constraints[n + 1] = [cons[k] for k in sorted(cons)]


def _levels(age: AgeSpec, budget: Budget) -> _Levels:
    lv = age._cache.get("levels")
    if lv is None:
        lv = _Levels(age, budget)
        age._cache["levels"] = lv
    lv.budget = budget
    return lv


def permitted_structures(age: AgeSpec, size: int, budget=None) -> list[FinStructure]:
    """Representatives of the permitted structures with ``size`` elements."""
    lv = _levels(age, Budget.coerce(budget))
    lv.build(size)
    return list(lv.levels[size].values())


def _supersets(f: FinStructure) -> Iterable[FinStructure]:
    # every structure on f's universe containing all of f's relationships
    sig = f.signature
    free = []
    for r in sig.arities:
        arr = f.codes(r)
        for b, sym in enumerate(sig.by_arity(r)):
            if sym.symmetric:
                tuples = itertools.combinations(range(f.size), r)
                for t in tuples:
                    if not arr[t] >> b & 1:
                        free.append((r, b, list(itertools.permutations(t))))
            else:
                for t in itertools.permutations(range(f.size), r):
                    if not arr[t] >> b & 1:
                        free.append((r, b, [t]))
    if (1 << len(free)) > _MAX_SUPERSETS:
        return None
    out = []
    for mask in range(1 << len(free)):
        codes = f.code_arrays
        codes = {r: a.copy() for r, a in codes.items()}
        for q, (r, b, orbit) in enumerate(free):
            if mask >> q & 1:
                for t in orbit:
                    codes[r][t] |= codes[r].dtype.type(1 << b)
        out.append(FinStructure(sig, f.size, codes))
    return out


def enumerate_constraints(age: AgeSpec, max_size: int, budget=None,
                          method: str = "auto") -> list[ConstraintRecord]:
    """All constraints with at most ``max_size`` elements, up to isomorphism.

    ``method`` is ``"auto"``, ``"generate"`` (always build the permitted
    structures level by level) or ``"members"`` (read the constraints off
    the forbidden set; only valid for ages without oracle or shape).
    Raises :class:`BudgetExceeded` with the finished sizes' records.
    """
    if max_size < 1:
        raise StructureError("max_size must be at least 1")
    budget = Budget.coerce(budget)
    if method == "auto":
        method = "members" if age.plain else "generate"
    if method == "members":
        if not age.plain:
            raise StructureError("member-based enumeration needs an age without oracle or shape")
        found = _constraints_from_members(age, max_size)
        if found is not None:
            return found
        method = "generate"
    if method != "generate":
        raise StructureError(f"unknown method {method!r}")
    lv = _levels(age, budget)
    done = []
    try:
        for k in range(max_size + 1):
            lv.build(k)
            done = [c for j in range(k + 1) for c in lv.constraints.get(j, [])]
    except BudgetExceeded as exc:
        exc.partial = _records(age, done)
        exc.verified_bound = len(lv.levels) - 1
        raise
    return _records(age, done)


def _records(age, structures):
    recs = [make_record(age, s) for s in structures]
    recs.sort(key=lambda r: (r.size, r.canonical))
    return recs


def _constraints_from_members(age: AgeSpec, max_size: int):
    if age.mode == "embedding":
        return _records(age, [f for f in age.forbidden if f.size <= max_size])
    out = {}
    for f in age.forbidden:
        if f.size > max_size:
            continue
        sups = _supersets(f)
        if sups is None:
            return None
        for s in sups:
            cf = canonical_form(s)
            if cf in out:
                continue
            if all(is_permitted_cached(age, delete_element(s, x)) for x in range(s.size)):
                out[cf] = s
    return _records(age, list(out.values()))


# --- minimisation ---------------------------------------------------------

def minimize_forbidden(age: AgeSpec, s: FinStructure,
                       protected: Iterable[int] = ()) -> ConstraintRecord:
    """Greedy descent from a forbidden structure to a constraint inside it.

    First unprotected elements are dropped, lowest index first, whenever
    the rest stays forbidden; after that pass the remainder contains a
    constraint that includes every surviving unprotected element.  Then
    protected elements are tried the same way, which leaves a constraint.
    One pass per phase suffices: if dropping ``x`` left a permitted
    structure, dropping ``x`` from any later subset does too.
    """
    if s.signature != age.signature:
        raise StructureError("structure and age have different signatures")
    protected = sorted(set(int(x) for x in protected))
    for x in protected:
        if not 0 <= x < s.size:
            raise StructureError(f"protected element {x} out of range")
    if is_permitted(age, s):
        raise StructureError("structure is permitted; nothing to minimise")
    if protected and not is_permitted(age, induced_substructure(s, protected)):
        raise StructureError("protected part is itself forbidden")
    cur = list(range(s.size))
    trace = []
    prot = set(protected)
    for phase, pool in (("unprotected", [x for x in cur if x not in prot]), ("protected", protected)):
        for x in pool:
            trial = [y for y in cur if y != x]
            if not is_permitted(age, induced_substructure(s, trial)):
                cur = trial
                trace.append((phase, x, "deleted"))
            else:
                trace.append((phase, x, "kept"))
    return make_record(age, induced_substructure(s, cur), elements=cur, trace=trace)


# --- amalgamation ---------------------------------------------------------

@dataclass
class AmalgamationResult:
    kind: str
    passed: bool
    max_size: int
    verified_bound: int
    truncated: bool = False
    route: str = "direct"
    counterexample: tuple | None = None  # (A, B, overlap pairs)
    nodes: int = 0

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "passed": self.passed,
            "truncated": self.truncated,
            "max_size": self.max_size,
            "verified_bound": self.verified_bound,
            "route": self.route,
        }
        if self.counterexample is not None:
            a, b, ov = self.counterexample
            out["counterexample"] = {"A": a.to_json(), "B": b.to_json(),
                                     "overlap": [list(p) for p in ov]}
        return out


def _uncovered_pair(s: FinStructure):
    covered = set()
    for t in s.relationships():
        for x, y in itertools.combinations(sorted(set(t)), 2):
            covered.add((x, y))
    for pair in itertools.combinations(range(s.size), 2):
        if pair not in covered:
            return pair
    return None


def _overlaps(a: FinStructure, b: FinStructure, e: int):
    # identifications of an e-subset of a with an e-subset of b inducing the same structure
    for xs in itertools.combinations(range(a.size), e):
        part = relabel(a, xs)
        maps, _ = search_maps(part, b, max_results=10 ** 6)
        for f in maps:
            yield list(zip(xs, f))


def _cross_cells(sig, n, a_only, b_only):
    out = []
    for r in sig.arities:
        if r < 2:
            continue
        for c in itertools.combinations(range(n), r):
            if set(c) & a_only and set(c) & b_only:
                out.append(c)
    out.sort(key=lambda c: (len(c), c))
    return out


def _complete_exists(age, d: FinStructure, cells, budget: Budget) -> bool:
    from .complete import complete

    if not cells:
        return is_permitted(age, d)
    codes = {r: d.codes(r).copy() for r in d.signature.arities}
    for r in d.signature.arities:
        write = codes[r]
        for c in cells:
            if len(c) == r:
                write_cell(write, c, [0] * len(perms(r)))
    assigned = {}
    for r in d.signature.arities:
        if r >= 2:
            g = np.ones((d.size,) * r, dtype=np.uint8)
            for c in cells:
                if len(c) == r:
                    write_cell(g, c, [0] * len(perms(r)))
            assigned[r] = g
    remaining = None if budget.nodes is None else max(budget.nodes - budget.used, 0)
    status, nodes = complete(age, codes, assigned, cells, None,
                             max_nodes=remaining if remaining is not None else 10 ** 12)
    budget.spend(nodes)
    if status < 0:
        raise BudgetExceeded("completion search exhausted the budget")
    return status == 1


def check_amalgamation(age: AgeSpec, kind: str, max_size: int, budget=None,
                       method: str = "auto") -> AmalgamationResult:
    """Search for an amalgamation failure among structures on at most ``max_size`` elements.

    For plain ages the free property is decided through the constraints: it
    fails up to ``max_size`` exactly when some constraint with at most that
    many elements has two elements lying in no common relationship (remove
    either one to get ``A`` and ``B``).  Everything else goes through the
    ``"direct"`` route, which tries every pair of permitted structures and
    every identification.
    """
    if kind not in ("free", "disjoint", "general"):
        raise StructureError(f"unknown amalgamation kind {kind!r}")
    if max_size < 2:
        raise StructureError("max_size must be at least 2")
    budget = Budget.coerce(budget)
    if method == "auto":
        method = "constraints" if kind == "free" and age.plain else "direct"
    if method == "constraints":
        return _free_by_constraints(age, max_size, budget)
    if method != "direct":
        raise StructureError(f"unknown method {method!r}")
    verified = 1
    try:
        for t in range(2, max_size + 1):
            cx = _direct_at(age, kind, t, budget)
            if cx is not None:
                return AmalgamationResult(kind, False, max_size, verified, route="direct",
                                          counterexample=cx, nodes=budget.used)
            verified = t
    except BudgetExceeded:
        return AmalgamationResult(kind, True, max_size, verified, truncated=True,
                                  route="direct", nodes=budget.used)
    return AmalgamationResult(kind, True, max_size, max_size, route="direct", nodes=budget.used)


def _free_by_constraints(age, max_size, budget) -> AmalgamationResult:
    try:
        cons = enumerate_constraints(age, max_size, budget)
    except BudgetExceeded as exc:
        return AmalgamationResult("free", True, max_size, exc.verified_bound or 0,
                                  truncated=True, route="constraints", nodes=budget.used)
    for rec in cons:
        c = rec.structure
        pair = _uncovered_pair(c)
        if pair is None:
            continue
        x, y = pair
        a_el = [z for z in range(c.size) if z != y]
        b_el = [z for z in range(c.size) if z != x]
        a = relabel(c, a_el)
        b = relabel(c, b_el)
        overlap = [(a_el.index(z), b_el.index(z)) for z in range(c.size) if z not in (x, y)]
        return AmalgamationResult("free", False, max_size, c.size - 1, route="constraints",
                                  counterexample=(a, b, overlap), nodes=budget.used)
    return AmalgamationResult("free", True, max_size, max_size, route="constraints",
                              nodes=budget.used)


def _direct_at(age, kind, t, budget):
    # pairs (A, B) with |A| + |B| - |E| = t, neither inside the other
    lv = _levels(age, budget)
    lv.build(t - 1)
    sig = age.signature
    for p in range(1, t):
        for q in range(p, t):
            e = p + q - t
            if e < 0 or e >= p:
                continue
            for a in lv.levels[p].values():
                for b in lv.levels[q].values():
                    for ov in _overlaps(a, b, e):
                        budget.spend()
                        d = free_amalgam(a, b, ov)
                        a_only = set(range(a.size)) - {i for i, _ in ov}
                        b_only = set(range(a.size, d.size))
                        if kind == "free":
                            ok = is_permitted_cached(age, d)
                        elif kind == "disjoint":
                            ok = _complete_exists(age, d, _cross_cells(sig, d.size, a_only, b_only), budget)
                        else:
                            ok = _general_ok(age, a, b, ov, budget)
                        if not ok:
                            return (a, b, ov)
    return None


def _general_ok(age, a, b, ov, budget) -> bool:
    # try further identifications of A-only with B-only elements, then complete
    used_a = {i for i, _ in ov}
    used_b = {j for _, j in ov}
    a_only = [i for i in range(a.size) if i not in used_a]
    b_only = [j for j in range(b.size) if j not in used_b]
    for k in range(0, min(len(a_only), len(b_only)) + 1):
        for xs in itertools.combinations(a_only, k):
            for ys in itertools.permutations(b_only, k):
                ext = list(ov) + list(zip(xs, ys))
                if relabel(a, [i for i, _ in ext]) != relabel(b, [j for _, j in ext]):
                    continue
                d = free_amalgam(a, b, ext)
                ao = set(range(a.size)) - {i for i, _ in ext}
                bo = set(range(a.size, d.size))
                if _complete_exists(age, d, _cross_cells(age.signature, d.size, ao, bo), budget):
                    return True
    return False


# --- classification -------------------------------------------------------

def _level(rec_or_structure, signature: Signature) -> int:
    s = rec_or_structure.structure if isinstance(rec_or_structure, ConstraintRecord) else rec_or_structure
    used = [sym.arity for sym in signature.symbols if s.count(sym.name)]
    return max(used) if used else min(signature.arities, default=1)


def is_random_age(constraints: Sequence, signature: Signature | None = None) -> bool:
    """Every constraint fits inside its arity level.

    A constraint belongs to level ``k`` when its relationships use symbols
    of arity at most ``k`` (``k`` the largest arity it actually uses); it
    must then have at most ``k`` elements.  Each level is checked on the
    constraints given; whether a reduct to a lower level has further
    constraints is not examined.
    """
    if not constraints:
        return True
    first = constraints[0]
    s0 = first.structure if isinstance(first, ConstraintRecord) else first
    sig = signature or s0.signature
    for c in constraints:
        s = c.structure if isinstance(c, ConstraintRecord) else c
        if s.size > _level(s, sig):
            return False
    return True


@dataclass
class FactReport:
    which: str
    passed: bool
    violations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"which": self.which, "passed": self.passed, "violations": self.violations}


def check_fact_hypotheses(forbidden: Sequence[FinStructure], which: str) -> FactReport:
    """Finite hypotheses of the Henson-style and Conant-style results.

    ``henson``: every member 2-irreducible.  ``conant``: every member
    3-irreducible and no injective homomorphism between distinct members.
    ``conant-embedding``: the variant for ages given by forbidden induced
    substructures, with "no embedding" in place of "no injective
    homomorphism".
    """
    members = list(forbidden)
    violations = []
    if which == "henson":
        for i, f in enumerate(members):
            if not k_irreducible(f, 2):
                violations.append({"member": i, "reason": "not 2-irreducible"})
    elif which in ("conant", "conant-embedding"):
        hom = which == "conant"
        for i, f in enumerate(members):
            if not k_irreducible(f, 3):
                violations.append({"member": i, "reason": "not 3-irreducible"})
        for i, j in itertools.permutations(range(len(members)), 2):
            f, g = members[i], members[j]
            if f.size <= g.size and search_maps(f, g, hom=hom)[0]:
                what = "injective homomorphism" if hom else "embedding"
                violations.append({"member": i, "into": j, "reason": f"{what} between members"})
    else:
        raise StructureError(f"unknown fact {which!r}")
    return FactReport(which, not violations, violations)
