"""Command-line interface.

Global flags may also come from the environment: ``TERNAGE_SEED``,
``TERNAGE_BUDGET_NODES``, ``TERNAGE_BUDGET_SECS`` and ``TERNAGE_FORMAT``.
Flags given on the command line win.

Exit codes: 0 pass, 1 check failure, 2 budget truncation, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import suites
from .age import AgeSpec, check_amalgamation, enumerate_constraints, is_permitted, is_random_age
from .budget import Budget, BudgetExceeded
from .canon import canonical_form, refine_partition
from .constructions import (
    GRAPH,
    build_H_n,
    build_parity_hypergraph,
    builtin_age,
    parity_age,
    random_tournament,
    rng_for,
    tetrahedron_free_age,
    tournament_reduct,
)
from .generic import GenericApprox, check_extension_property, grow_generic
from .isolation import is_weakly_isolated, search_definable_equivalence
from .search import automorphisms
from .structure import FinStructure, StructureError, qf_type

EXIT_PASS, EXIT_FAIL, EXIT_TRUNCATED, EXIT_USAGE = 0, 1, 2, 64

ENV = {
    "seed": "TERNAGE_SEED",
    "budget_nodes": "TERNAGE_BUDGET_NODES",
    "budget_secs": "TERNAGE_BUDGET_SECS",
    "format": "TERNAGE_FORMAT",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# --- helpers ----------------------------------------------------------------

def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _load_structure(path: str) -> FinStructure:
    data = _read_json(path)
    # approximation files wrap the structure
    if "structure" in data and "size" not in data:
        data = data["structure"]
    return FinStructure.from_json(data)


def _load_age(args) -> AgeSpec:
    if getattr(args, "builtin", None):
        return builtin_age(args.builtin)
    if getattr(args, "age", None):
        return AgeSpec.from_json(_read_json(args.age))
    raise UsageError("give an age with --age FILE or --builtin NAME")


def _budget(args) -> Budget:
    return Budget(nodes=args.budget_nodes, secs=args.budget_secs)


def _emit(args, data: dict, text: str | None = None) -> None:
    if args.format == "json" or text is None:
        print(json.dumps(data, sort_keys=True, indent=2))
    else:
        print(text)


def _write(path: str | None, data: dict) -> None:
    if path:
        Path(path).write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")


# --- commands ---------------------------------------------------------------

def cmd_structure(args) -> int:
    s = _load_structure(args.file)
    if args.action == "canon":
        from .canon import canonical_structure

        c = canonical_structure(s)
        _emit(args, {"canonical": canonical_form(s).hex(), "structure": c.to_json()})
        return EXIT_PASS
    data = {
        "size": s.size,
        "signature": s.signature.to_json(),
        "relations": {sym.name: s.count(sym.name) for sym in s.signature.symbols},
        "canonical": canonical_form(s).hex(),
        "automorphisms": len(automorphisms(s, limit=100000)),
        "cells": refine_partition(s),
    }
    text = "\n".join([
        f"size {s.size}",
        "relations " + ", ".join(f"{k}={v}" for k, v in data["relations"].items()),
        f"automorphisms {data['automorphisms']}",
        f"canonical sha256:{hashlib.sha256(bytes.fromhex(data['canonical'])).hexdigest()[:16]}",
    ])
    _emit(args, data, text)
    return EXIT_PASS


def cmd_age(args) -> int:
    age = _load_age(args)
    budget = _budget(args)
    if args.action == "permitted":
        if not args.structure:
            raise UsageError("age permitted needs --structure FILE")
        ok = is_permitted(age, _load_structure(args.structure))
        _emit(args, {"permitted": ok}, "permitted" if ok else "forbidden")
        return EXIT_PASS
    if args.action == "amalgamation":
        res = check_amalgamation(age, args.kind, args.max_size, budget)
        data = res.to_json()
        status = "truncated" if res.truncated else ("pass" if res.passed else "fail")
        _emit(args, data, f"{args.kind} amalgamation up to {args.max_size}: {status}"
              f" (verified to {res.verified_bound})")
        return {"pass": EXIT_PASS, "fail": EXIT_FAIL, "truncated": EXIT_TRUNCATED}[status]
    try:
        cons = enumerate_constraints(age, args.max_size, budget)
        truncated = None
    except BudgetExceeded as exc:
        cons = exc.partial or []
        truncated = exc.verified_bound
    data = {"age": age.name, "max_size": args.max_size, "constraints": [c.to_json() for c in cons]}
    if truncated is not None:
        data["truncated"] = True
        data["verified_bound"] = truncated
    if args.action == "random":
        data = {"age": age.name, "max_size": args.max_size, "random": is_random_age(cons, age.signature),
                "constraint_sizes": sorted(c.size for c in cons)}
        text = f"random: {data['random']} (constraints up to {args.max_size})"
    else:
        sizes = {}
        for c in cons:
            sizes[c.size] = sizes.get(c.size, 0) + 1
        text = f"{len(cons)} constraints up to {args.max_size}: " + (
            ", ".join(f"{n} of size {k}" for k, n in sorted(sizes.items())) or "none")
    _emit(args, data, text)
    return EXIT_TRUNCATED if truncated is not None else EXIT_PASS


def cmd_generic(args) -> int:
    if args.action == "grow":
        age = _load_age(args)
        g = grow_generic(age, args.steps, args.seed, bound=args.bound, budget=_budget(args))
        _write(args.out, g.to_json())
        _write(args.log, g.log_json())
        _emit(args, g.to_json() if not args.out else {"size": g.size, "out": args.out},
              f"grew {g.size} vertices (seed {args.seed})")
        return EXIT_PASS
    if not args.approx:
        raise UsageError("generic check needs --approx FILE")
    data = _read_json(args.approx)
    s = _load_structure(args.approx)
    if getattr(args, "builtin", None) or getattr(args, "age", None):
        age = _load_age(args)
    elif data.get("age"):
        age = builtin_age(data["age"])
    else:
        raise UsageError("the approximation names no builtin age; pass --age or --builtin")
    g = GenericApprox(s, age, args.seed)
    reports = [check_extension_property(g, k, sample=args.sample, seed=args.seed)
               for k in range(args.demand_size + 1)]
    out = {"reports": [r.to_json() for r in reports]}
    _emit(args, out, "\n".join(f"demand size {r.demand_size}: {r.realized}/{r.demands} "
                               f"realized (ratio {r.ratio:.3f})" for r in reports))
    ok = all(r.ratio >= args.min_ratio for r in reports)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_examples(args) -> int:
    name = args.name
    if name == "h_n":
        s = build_H_n(args.n)
        doc = s.to_json()
    elif name == "tournament-reduct":
        s = tournament_reduct(random_tournament(args.size, args.seed))
        doc = s.to_json()
    elif name == "parity":
        rng = rng_for(args.seed, 0)
        n = args.size
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5]
        s = build_parity_hypergraph(FinStructure.from_tuples(GRAPH, n, {"E": edges}))
        doc = s.to_json()
    elif name == "tetrahedron-free":
        g = grow_generic(tetrahedron_free_age(), args.size, args.seed, budget=_budget(args))
        doc = g.to_json()
    elif name == "parity-generic":
        g = grow_generic(parity_age(), args.size, args.seed, budget=_budget(args))
        doc = g.to_json()
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown example {name!r}")
    if args.out:
        _write(args.out, doc)
        print(args.out)
    else:
        print(json.dumps(doc, sort_keys=True))
    return EXIT_PASS


def cmd_isolation(args) -> int:
    data = _read_json(args.constraint)
    if "structure" in data and "size" not in data:
        data = data["structure"]
    c = FinStructure.from_json(data)
    age = _load_age(args)
    rep = is_weakly_isolated(c, age)
    _emit(args, rep.to_json(), rep.status)
    return EXIT_PASS


def cmd_eqrel(args) -> int:
    s = _load_structure(args.approx)
    try:
        params = tuple(int(x) for x in args.params.split(",") if x != "")
    except ValueError:
        raise UsageError("--params takes comma-separated element numbers") from None
    rest = [x for x in range(s.size) if x not in params]
    if args.type_of is not None:
        types = [qf_type(s, (*params, args.type_of))]
    else:
        types = sorted({qf_type(s, (*params, x)) for x in rest})
    out = []
    found = 0
    for p in types:
        rep = search_definable_equivalence(s, params, p, max_params=args.max_params)
        found += len(rep.candidates)
        out.append(rep.to_json())
    _emit(args, {"params": list(params), "reports": out, "finite_evidence": True},
          f"{found} nontrivial candidate(s) over {list(params)} (finite evidence)")
    return EXIT_PASS


def cmd_verify(args) -> int:
    if args.list or not args.suite:
        for name, ids in suites.SUITES.items():
            print(f"{name:12} criteria {', '.join(map(str, ids))}")
        return EXIT_PASS
    try:
        report = suites.run_suite(args.suite, args.seed, args.budget_nodes, args.budget_secs)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    fmt = "json" if args.format == "json" else "text"
    text = suites.emit_report(report, fmt)
    if args.out:
        Path(args.out).write_text(suites.emit_report(report, "json"))
    sys.stdout.write(text)
    return suites.EXIT_CODES[report.status]


# --- parser -----------------------------------------------------------------

def _env_default(key, cast, fallback):
    raw = os.environ.get(ENV[key])
    if raw is None or raw == "":
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise UsageError(f"{ENV[key]}={raw!r} is not a valid value") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    common.add_argument("--budget-nodes", type=int, default=argparse.SUPPRESS,
                        help="search node limit per operation")
    common.add_argument("--budget-secs", type=float, default=argparse.SUPPRESS,
                        help="wall-clock limit per operation")
    common.add_argument("--format", choices=("text", "json"), default=argparse.SUPPRESS)

    p = _Parser(prog="ternage", description="Finite ages, constraints and generic approximations.",
                parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def age_flags(q, required=False):
        g = q.add_mutually_exclusive_group(required=required)
        g.add_argument("--age", help="age JSON file")
        g.add_argument("--builtin", help="builtin age: parity, tetrahedron-free, tournament-reduct, graphs")

    q = sub.add_parser("structure", parents=[common], help="inspect or canonicalize a structure")
    q.add_argument("action", choices=("inspect", "canon"))
    q.add_argument("file")
    q.set_defaults(func=cmd_structure)

    q = sub.add_parser("age", parents=[common], help="constraints, amalgamation, randomness")
    q.add_argument("action", choices=("constraints", "amalgamation", "random", "permitted"))
    age_flags(q, required=True)
    q.add_argument("--max-size", type=int, default=4)
    q.add_argument("--kind", choices=("free", "disjoint", "general"), default="free")
    q.add_argument("--structure", help="structure JSON (for 'permitted')")
    q.set_defaults(func=cmd_age)

    q = sub.add_parser("generic", parents=[common], help="grow or check a generic approximation")
    q.add_argument("action", choices=("grow", "check"))
    age_flags(q)
    q.add_argument("--steps", type=int, default=40)
    q.add_argument("--bound", type=int, default=3, help="largest demand size while growing")
    q.add_argument("--out", help="write the approximation here")
    q.add_argument("--log", help="write the growth log here")
    q.add_argument("--approx", help="approximation JSON (for 'check')")
    q.add_argument("--demand-size", type=int, default=2)
    q.add_argument("--sample", type=int, default=200)
    q.add_argument("--min-ratio", type=float, default=0.95)
    q.set_defaults(func=cmd_generic)

    q = sub.add_parser("examples", parents=[common], help="build catalogue structures")
    q.add_argument("action", choices=("build",))
    q.add_argument("name", choices=("h_n", "parity", "parity-generic", "tournament-reduct",
                                    "tetrahedron-free"))
    q.add_argument("--n", type=int, default=3, help="index for h_n")
    q.add_argument("--size", type=int, default=10)
    q.add_argument("--out")
    q.set_defaults(func=cmd_examples)

    q = sub.add_parser("isolation", parents=[common], help="classify a constraint by its neighbours")
    q.add_argument("--constraint", required=True)
    age_flags(q, required=True)
    q.set_defaults(func=cmd_isolation)

    q = sub.add_parser("eqrel", parents=[common], help="probe for definable equivalence relations")
    q.add_argument("--approx", required=True)
    q.add_argument("--params", default="", help="comma-separated parameters, e.g. 3 or 3,7")
    q.add_argument("--type-of", type=int, help="use the type of this element over the parameters")
    q.add_argument("--max-params", type=int, default=2)
    q.set_defaults(func=cmd_eqrel)

    q = sub.add_parser("verify", parents=[common], help="run verification suites")
    q.add_argument("suite", nargs="?")
    q.add_argument("--list", action="store_true")
    q.add_argument("--out", help="also write the JSON report here")
    q.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error reported by the parser
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        for key, cast, fallback in (("seed", int, 0), ("budget_nodes", int, None),
                                    ("budget_secs", float, None), ("format", str, "text")):
            if not hasattr(args, key):
                setattr(args, key, _env_default(key, cast, fallback))
        if args.format not in ("text", "json"):
            raise UsageError(f"format must be text or json, not {args.format!r}")
        return args.func(args)
    except UsageError as exc:
        print(f"ternage: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StructureError as exc:
        print(f"ternage: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"ternage: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_TRUNCATED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
