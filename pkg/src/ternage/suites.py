"""Verification suites: one executable check per named result, grouped
into suites, with deterministic JSON and text reports.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import kernels
from .age import (
    check_amalgamation,
    check_fact_hypotheses,
    enumerate_constraints,
    forbid,
    is_permitted,
    is_random_age,
)
from .budget import Budget, BudgetExceeded
from .canon import canonical_form
from .constructions import (
    GRAPH,
    build_H_n,
    build_M_P,
    catalog,
    graph_age,
    hypergraph_from_bits,
    parity_age,
    random_tournament,
    reduct_M_P_minus,
    rng_for,
    tetrahedron_free_age,
    tournament_from_adjacency,
    tournament_reduct,
    tournament_reduct_age,
)
from .generic import GenericApprox, check_extension_property, grow_generic
from .isolation import is_weakly_isolated, search_definable_equivalence
from .search import find_embedding
from .structure import FinStructure, free_amalgam, qf_type

SCHEMA = "ternage.report/1"
APPROX_SIZE = 40
TYPE_MATCH_SAMPLES = 200
TRIPLE_RANDOM_CASES = 500
EXTENSION_RATIO = 0.95


@dataclass
class CheckResult:
    criterion: int
    id: str
    title: str
    exact: bool
    status: str  # pass | fail | truncated
    details: dict = field(default_factory=dict)
    witness: dict | None = None
    verified_bound: int | None = None

    def to_json(self) -> dict:
        out = {
            "criterion": self.criterion,
            "id": self.id,
            "title": self.title,
            "kind": "exact" if self.exact else "evidence",
            "status": self.status,
            "details": self.details,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        if self.verified_bound is not None:
            out["verified_bound"] = self.verified_bound
        return out


@dataclass
class Check:
    criterion: int
    id: str
    title: str
    exact: bool
    run: Callable  # (seed, budget, ctx) -> CheckResult fields


@dataclass
class VerificationSuite:
    name: str
    checks: list
    nodes: int | None = None
    secs: float | None = None


@dataclass
class SuiteReport:
    suite: str
    seed: int
    nodes: int | None
    secs: float | None
    results: list = field(default_factory=list)

    @property
    def status(self) -> str:
        return overall_status(self.results)

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "suite": self.suite,
            "seed": self.seed,
            "budget": {"nodes": self.nodes, "secs": self.secs},
            "status": self.status,
            "checks": [r.to_json() for r in self.results],
        }


def overall_status(results: Iterable[CheckResult]) -> str:
    st = [r.status for r in results]
    if "fail" in st:
        return "fail"
    if "truncated" in st:
        return "truncated"
    return "pass"


EXIT_CODES = {"pass": 0, "fail": 1, "truncated": 2}


def _result(check: Check, ok: bool, details: dict, witness=None, bound=None) -> CheckResult:
    return CheckResult(check.criterion, check.id, check.title, check.exact,
                       "pass" if ok else "fail", details, witness, bound)


# --- checks ----------------------------------------------------------------

def _h_n_embeddings(check, seed, budget, ctx):
    hs = {n: build_H_n(n) for n in range(3, 8)}
    bad = []
    for n in hs:
        if find_embedding(hs[n], hs[n]) is None:
            bad.append({"from": n, "to": n, "problem": "no self-embedding"})
    pairs = 0
    for n, m in itertools.combinations(hs, 2):
        pairs += 1
        for a, b in ((n, m), (m, n)):
            f = find_embedding(hs[a], hs[b])
            if f is not None:
                bad.append({"from": a, "to": b, "embedding": f})
    return _result(check, not bad, {"pairs": pairs, "failures": len(bad)}, bad[0] if bad else None)


def _triple_classes(check, seed, budget, ctx):
    per = {}
    bad = None
    for n in (4, 5, 6):
        counts, cyc, tra = kernels.triple_class_counts(n)
        both = cyc & tra
        per[str(n)] = {"tournaments": int(len(counts)), "mixed": int(both.sum()),
                       "class_counts": sorted({int(c) for c in counts[both]})}
        wrong = np.flatnonzero(both & (counts != 4))
        if len(wrong) and bad is None:
            adj = kernels.tournament_from_bits(n, int(wrong[0]))
            bad = {"tournament": tournament_from_adjacency(adj).to_json(),
                   "classes": int(counts[wrong[0]])}
    return _result(check, bad is None, {"by_size": per}, bad)


def _reversal_triples(check, seed, budget, ctx):
    ex_bad = int(kernels.reversal_exhaustive(5, 4))
    bad = agree = pairs = 0
    witness = None
    for i in range(TRIPLE_RANDOM_CASES):
        rng = rng_for(seed, 74, i)
        n = int(rng.integers(3, 8))
        length = int(rng.integers(3, 7))
        m = n * (n - 1) // 2
        adj = kernels.tournament_from_bits(n, int(rng.integers(0, 1 << m)))
        base = rng.integers(0, n, size=length)
        rows = [base]
        # one-coordinate variants of a common tuple give equivalent pairs often enough
        for _ in range(11):
            v = base.copy()
            v[int(rng.integers(length))] = int(rng.integers(n))
            rows.append(v)
        tuples = np.array(rows, dtype=np.int64)
        b, pos = kernels.reversal_pairs(adj, tuples)
        pairs += len(rows) ** 2
        agree += int(pos)
        if b and witness is None:
            witness = {"case": i, "n": n, "length": length}
        bad += int(b)
    ok = ex_bad == 0 and bad == 0
    return _result(check, ok, {"exhaustive_n": 5, "exhaustive_length": 4,
                               "exhaustive_discrepant_tournaments": ex_bad,
                               "random_cases": TRIPLE_RANDOM_CASES, "random_pairs": pairs,
                               "random_equivalent_pairs": agree, "random_discrepancies": bad},
                   witness)


def _reduct_constraints(budget, ctx):
    if "reduct" not in ctx:
        ctx["reduct"] = enumerate_constraints(tournament_reduct_age(), 5, budget)
    return ctx["reduct"]


def _reduct_sizes(check, seed, budget, ctx):
    cons = _reduct_constraints(budget, ctx)
    sizes = {}
    for c in cons:
        sizes[str(c.size)] = sizes.get(str(c.size), 0) + 1
    bad = [c for c in cons if c.size != 4]
    ok = bool(cons) and not bad
    witness = bad[0].to_json() if bad else None
    return _result(check, ok, {"max_size": 5, "constraints": len(cons), "by_size": sizes}, witness, 5)


def _reduct_isolation(check, seed, budget, ctx):
    cons = _reduct_constraints(budget, ctx)
    age = tournament_reduct_age()
    statuses = {}
    witness = None
    for c in cons:
        rep = is_weakly_isolated(c, age)
        statuses[rep.status] = statuses.get(rep.status, 0) + 1
        if rep.status == "not_weakly_isolated" and witness is None:
            witness = {"constraint": c.structure.to_json(), "report": rep.to_json()}
    ok = bool(cons) and set(statuses) <= {"isolated", "weakly_isolated"}
    # context: over one parameter d the reduct defines "same side of d",
    # an equivalence relation with two classes
    t = random_tournament(30, seed)
    s = tournament_reduct(t)
    probe = search_definable_equivalence(s, (0,), qf_type(s, (0, 1)), max_params=1)
    side = {"parameter": 0, "candidates": len(probe.candidates),
            "class_sizes": [sorted(len(c) for c in cand.classes) for cand in probe.candidates]}
    return _result(check, ok, {"constraints": len(cons), "statuses": dict(sorted(statuses.items())),
                               "equivalence_probe": side}, witness)


def _reduct_free(check, seed, budget, ctx):
    res = check_amalgamation(tournament_reduct_age(), "free", 6, budget)
    details = {"amalgamation": res.to_json()}
    if res.truncated:
        out = _result(check, False, details, None, res.verified_bound)
        out.status = "truncated"
        return out
    if res.counterexample is None:
        return _result(check, False, details)
    a, b, ov = res.counterexample
    d = free_amalgam(a, b, ov)
    codes = d.codes(3)
    empty = next((t for t in itertools.permutations(range(d.size), 3) if codes[t] == 0), None)
    details["empty_triple"] = list(empty) if empty else None
    return _result(check, empty is not None, details)


def _parity_identity(check, seed, budget, ctx):
    age = parity_age()
    checked = 0
    witness = None
    for n in range(0, 6):
        images = set(int(x) for x in kernels.parity_images(n))
        for bits in range(1 << (n * (n - 1) * (n - 2) // 6)):
            checked += 1
            perm = is_permitted(age, hypergraph_from_bits(n, bits))
            if perm != (bits in images):
                witness = {"size": n, "bits": bits, "permitted": perm}
                break
        if witness:
            break
    return _result(check, witness is None, {"hypergraphs": checked, "max_size": 5}, witness)


def _parity_isolation(check, seed, budget, ctx):
    age = parity_age()
    iso = {name: is_weakly_isolated(catalog(name), age).status for name in ("C1", "C3")}
    dis = check_amalgamation(age, "disjoint", 5, budget)
    free = check_amalgamation(age, "free", 5, budget)
    details = {"isolation": iso, "disjoint": dis.to_json(), "free": free.to_json()}
    if dis.truncated or free.truncated:
        out = _result(check, False, details, None, min(dis.verified_bound, free.verified_bound))
        out.status = "truncated"
        return out
    ok = all(v == "isolated" for v in iso.values()) and dis.passed and not free.passed
    return _result(check, ok, details)


def _henson(check, seed, budget, ctx):
    cases = {"K4": [catalog("K4")], "H3,H5": [build_H_n(3), build_H_n(5)]}
    details = {}
    ok = True
    truncated = None
    for name, members in cases.items():
        fact = check_fact_hypotheses(members, "henson")
        amal = check_amalgamation(forbid(*members), "free", 8, budget)
        details[name] = {"hypotheses": fact.to_json(), "free": amal.to_json()}
        if amal.truncated:
            truncated = amal.verified_bound
        ok = ok and fact.passed and amal.passed and amal.counterexample is None
    out = _result(check, ok, details, None, truncated)
    if truncated is not None and ok:
        out.status = "truncated"
    return out


def _conant(check, seed, budget, ctx):
    hs = [build_H_n(n) for n in range(3, 7)]
    good = check_fact_hypotheses(hs, "conant")
    bad = check_fact_hypotheses([catalog("K4_minus"), catalog("K4")], "conant")
    k4m = [v for v in bad.violations if v.get("member") == 0 and "3-irreducible" in v["reason"]]
    ok = good.passed and not bad.passed and bool(k4m)
    # reported for context only; the check itself uses injective homomorphisms
    emb = check_fact_hypotheses(hs, "conant-embedding")
    return _result(check, ok, {"H3..H6": good.to_json(), "K4-,K4": bad.to_json(),
                               "H3..H6 embedding variant": emb.to_json()})


def _randomness(check, seed, budget, ctx):
    edge = FinStructure.from_tuples(GRAPH, 2, {"E": [(0, 1)]})
    k4 = enumerate_constraints(tetrahedron_free_age(), 4, budget)
    small = enumerate_constraints(graph_age([edge]), 3, budget)
    got = {
        "empty": is_random_age([], GRAPH),
        "F(K4)": is_random_age(k4),
        "graphs without edges": is_random_age(small),
    }
    ok = got["empty"] and not got["F(K4)"] and got["graphs without edges"]
    return _result(check, ok, {"random": got, "small_constraint_sizes": sorted(c.size for c in small)})


def _parity_approx(seed, budget, ctx):
    if "parity" not in ctx:
        ctx["parity"] = grow_generic(parity_age(), APPROX_SIZE, seed, budget=budget)
    return ctx["parity"]


def _same_type_partner(s, a, b, pool, rng):
    # depth-first, extending the partner one coordinate at a time (b itself always works)
    def rec(c):
        if len(c) == len(b):
            return c
        want = qf_type(s, (*b[:len(c) + 1], *a))
        for x in rng.permutation(pool):
            x = int(x)
            if qf_type(s, (*c, x, *a)) == want:
                got = rec(c + [x])
                if got is not None:
                    return got
        return None

    return rec([])


def _expansion_types(check, seed, budget, ctx):
    s = _parity_approx(seed, budget, ctx).structure
    bad = same = 0
    witness = None
    for i in range(TYPE_MATCH_SAMPLES):
        rng = rng_for(seed, 32, i)
        k = int(rng.integers(1, 3))
        a = [int(x) for x in rng.choice(s.size, size=k, replace=False)]
        rest = [x for x in range(s.size) if x not in a]
        types = sorted({qf_type(s, (*a, x)) for x in rest})
        chosen = [t for t in types if rng.random() < 0.5] or types[:1]
        mp = build_M_P(s, a, chosen)
        real = [x for x in rest if qf_type(s, (*a, x)) in set(chosen)]
        pos = {x: j for j, x in enumerate(real)}
        length = int(rng.integers(1, 4))
        b = [int(x) for x in rng.choice(real, size=length)]
        if i % 2:
            # a partner with the same ambient type, so both directions get exercised
            c = _same_type_partner(s, a, b, real, rng)
        else:
            c = [int(x) for x in rng.choice(real, size=length)]
        amb = qf_type(s, (*b, *a)) == qf_type(s, (*c, *a))
        der = qf_type(mp, [pos[x] for x in b]) == qf_type(mp, [pos[x] for x in c])
        same += amb
        if amb != der:
            bad += 1
            if witness is None:
                witness = {"params": a, "b": b, "c": c, "ambient_equal": amb}
    return _result(check, bad == 0, {"samples": TYPE_MATCH_SAMPLES, "equivalent_pairs": same,
                                     "discrepancies": bad, "size": s.size}, witness)


def _no_definable_eqrel(check, seed, budget, ctx):
    g = grow_generic(tetrahedron_free_age(), APPROX_SIZE, seed, budget=budget)
    s = g.structure
    rng = rng_for(seed, 52)
    probes = [()] + [(int(x),) for x in sorted(rng.choice(s.size, size=8, replace=False))]
    found = []
    checked = 0
    for params in probes:
        rest = [x for x in range(s.size) if x not in params]
        for p in sorted({qf_type(s, (*params, x)) for x in rest}):
            rep = search_definable_equivalence(s, params, p, max_params=1)
            checked += 1
            if rep.candidates:
                found.append(rep.to_json())
    return _result(check, not found, {"size": s.size, "probes": checked, "finite_evidence": True,
                                      "nontrivial": len(found)}, found[0] if found else None)


def _binary_reduct(check, seed, budget, ctx):
    s = _parity_approx(seed, budget, ctx).structure
    a = int(rng_for(seed, 67).integers(s.size))
    types = sorted({qf_type(s, (a, x)) for x in range(s.size) if x != a})
    mm = reduct_M_P_minus(build_M_P(s, (a,), types))
    g = GenericApprox.from_structure(mm, seed=seed)
    ratios = {str(k): check_extension_property(g, k, seed=seed).ratio for k in range(3)}
    cons = enumerate_constraints(g.age, 4, budget)
    sizes = {}
    for c in cons:
        sizes[str(c.size)] = sizes.get(str(c.size), 0) + 1
    big = [c for c in cons if c.size >= 3]
    ok = len(types) == 1 and min(ratios.values()) >= EXTENSION_RATIO and not big
    return _result(check, ok, {"parameter": a, "one_types": len(types), "size": mm.size,
                               "arities": sorted(mm.signature.arities), "ratios": ratios,
                               "constraint_sizes": sizes, "finite_evidence": True},
                   big[0].to_json() if big else None, 4)


DETERMINISM_SUITES = ("lemma-3.2", "prop-5.2")


def _determinism(check, seed, budget, ctx):
    same = {}
    for name in DETERMINISM_SUITES:
        runs = [emit_report(run_suite(name, seed, nodes=budget.nodes), "json") for _ in range(2)]
        same[name] = runs[0] == runs[1]
    replay = {}
    for age in (parity_age(), tetrahedron_free_age()):
        g = grow_generic(age, 30, seed, budget=budget)
        again = grow_generic(age, 30, seed, budget=budget)
        replay[age.name] = (canonical_form(g.replay()) == canonical_form(g.structure)
                            and g.dumps_log() == again.dumps_log())
    ok = all(same.values()) and all(replay.values())
    return _result(check, ok, {"reports": same, "replay": replay})


CHECKS = [
    Check(1, "lemma-7.1", "no embeddings between distinct H_n, 3 <= n < m <= 7", True, _h_n_embeddings),
    Check(2, "lemma-7.4/classes", "four reversal classes on mixed tournaments of 4-6 vertices", True,
          _triple_classes),
    Check(3, "lemma-7.4", "n-reversal equivalence agrees with aligned triples", True, _reversal_triples),
    Check(4, "lemma-7.6(i)", "tournament-reduct constraints up to 5 have exactly 4 elements", True,
          _reduct_sizes),
    Check(5, "lemma-7.6(ii)", "tournament-reduct constraints are weakly isolated", True,
          _reduct_isolation),
    Check(6, "lemma-7.6(iii)", "tournament-reduct age lacks free amalgamation", True, _reduct_free),
    Check(7, "parity-age", "F(C1,C3) members are exactly parity images (<= 5 vertices)", True,
          _parity_identity),
    Check(8, "parity-isolation", "C1, C3 isolated; disjoint but not free amalgamation", True,
          _parity_isolation),
    Check(9, "fact-henson", "Henson hypotheses and free amalgamation up to 8", True, _henson),
    Check(10, "fact-conant", "Conant hypotheses for H_3..H_6, failure for K4-", True, _conant),
    Check(11, "random-age", "random-age classification", True, _randomness),
    Check(12, "lemma-3.2", "M_P types match parameter-extended ambient types", True, _expansion_types),
    Check(13, "prop-5.2", "no definable equivalence on an F(K4) approximation", False, _no_definable_eqrel),
    Check(14, "cor-6.7", "M_P- over one parameter looks binary random", False, _binary_reduct),
    Check(15, "determinism", "byte-identical reruns and exact replay", True, _determinism),
]

_BY_CRITERION = {c.criterion: c for c in CHECKS}

SUITES = {
    "lemma-7.1": [1],
    "lemma-7.4": [2, 3],
    "lemma-7.6": [4, 5, 6],
    "parity-age": [7, 8],
    "facts": [9, 10],
    "random-age": [11],
    "lemma-3.2": [12],
    "prop-5.2": [13],
    "cor-6.7": [14],
    "determinism": [15],
    "all": list(range(1, 16)),
}


def get_suite(name: str, nodes: int | None = None, secs: float | None = None) -> VerificationSuite:
    try:
        ids = SUITES[name]
    except KeyError:
        raise KeyError(f"unknown suite {name!r}; known: {', '.join(SUITES)}") from None
    return VerificationSuite(name, [_BY_CRITERION[i] for i in ids], nodes, secs)


def run_check(check: Check, seed: int, nodes: int | None = None, secs: float | None = None,
              ctx: dict | None = None) -> CheckResult:
    budget = Budget(nodes=nodes, secs=secs)
    try:
        return check.run(check, seed, budget, {} if ctx is None else ctx)
    except BudgetExceeded as exc:
        return CheckResult(check.criterion, check.id, check.title, check.exact, "truncated",
                           {"reason": str(exc)}, None, exc.verified_bound)


def run_suite(name: str, seed: int = 0, nodes: int | None = None, secs: float | None = None,
              only: Iterable[int] | None = None) -> SuiteReport:
    """Run the checks of suite ``name`` in order.

    Each check gets a fresh budget of ``nodes`` explored nodes and ``secs``
    seconds; running out marks it truncated.  Reports are byte-identical
    across reruns unless a wall-clock limit cuts a check short.
    """
    suite = get_suite(name, nodes, secs)
    keep = None if only is None else set(only)
    report = SuiteReport(name, seed, nodes, secs)
    ctx: dict = {}
    for check in suite.checks:
        if keep is not None and check.criterion not in keep:
            continue
        report.results.append(run_check(check, seed, nodes, secs, ctx))
    return report


def emit_report(results, fmt: str = "json") -> str:
    """Serialize a :class:`SuiteReport` or a plain list of check results."""
    if isinstance(results, SuiteReport):
        data = results.to_json()
    else:
        results = list(results)
        data = {"schema": SCHEMA, "suite": None, "seed": None, "budget": None,
                "status": overall_status(results), "checks": [r.to_json() for r in results]}
    if fmt == "json":
        return json.dumps(data, sort_keys=True, indent=2) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"suite {data['suite'] or '-'}  seed {data['seed']}  status {data['status']}"]
    for c in data["checks"]:
        extra = f"  (verified to {c['verified_bound']})" if c["status"] == "truncated" else ""
        lines.append(f"[{c['status'].upper():9}] {c['criterion']:>2} {c['id']}: {c['title']}{extra}")
    return "\n".join(lines) + "\n"
