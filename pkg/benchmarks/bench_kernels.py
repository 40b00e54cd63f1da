"""Compare the numba kernels with the plain-Python fallback.

Each workload runs in a fresh interpreter per backend, since the backend
is fixed at import time by ``TERNAGE_NO_NUMBA``.  The numba run is timed
after a warm-up call so compilation is excluded; outputs of the two
backends must agree.

    python benchmarks/bench_kernels.py [--repeat 3] [--only NAME ...]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKLOADS = {
    "embed_search": """
from ternage.constructions import build_H_n
from ternage.search import find_embedding
hs = [build_H_n(n) for n in range(3, 7)]
def work():
    return [find_embedding(a, b) is None for a in hs for b in hs]
""",
    "complete_cells": """
from ternage.constructions import tetrahedron_free_age
from ternage.generic import grow_generic
def work():
    return grow_generic(tetrahedron_free_age(), 30, 5).dumps_log()
""",
    "triple_class_counts": """
from ternage import kernels
def work():
    c, cyc, tra = kernels.triple_class_counts(4)
    return [c.tolist(), cyc.tolist(), tra.tolist()]
""",
    "reversal_pairs": """
import numpy as np
from ternage import kernels
rng = np.random.default_rng(0)
adj = kernels.tournament_from_bits(6, 12345)
tuples = rng.integers(0, 6, size=(60, 5)).astype(np.int64)
def work():
    return [int(x) for x in kernels.reversal_pairs(adj, tuples)]
""",
    "tournament_lift": """
from ternage.constructions import random_tournament, structure_classes, tournament_reduct
from ternage import kernels
cls = [structure_classes(tournament_reduct(random_tournament(7, s))) for s in range(20)]
def work():
    return [bool(kernels.tournament_lift(c)[0]) for c in cls]
""",
    "parity_images": """
from ternage import kernels
def work():
    return kernels.parity_images(4).tolist()
""",
}

RUNNER = """
import json, time
{body}
work()
best = float("inf")
for _ in range({repeat}):
    t = time.perf_counter()
    out = work()
    best = min(best, time.perf_counter() - t)
print(json.dumps({{"secs": best, "out": out}}))
"""


def run(name: str, pure: bool, repeat: int) -> dict:
    env = dict(os.environ)
    if pure:
        env["TERNAGE_NO_NUMBA"] = "1"
    else:
        env.pop("TERNAGE_NO_NUMBA", None)
    code = RUNNER.format(body=WORKLOADS[name], repeat=repeat)
    proc = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    if proc.returncode:
        raise RuntimeError(f"{name} ({'pure' if pure else 'numba'}) failed:\n{proc.stderr}")
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--only", nargs="*", choices=sorted(WORKLOADS))
    ap.add_argument("--json", action="store_true", help="print one JSON object instead of a table")
    args = ap.parse_args(argv)
    names = args.only or list(WORKLOADS)
    rows = []
    for name in names:
        fast = run(name, False, args.repeat)
        slow = run(name, True, args.repeat)
        rows.append({"kernel": name, "numba_s": fast["secs"], "python_s": slow["secs"],
                     "speedup": slow["secs"] / max(fast["secs"], 1e-9),
                     "same_output": fast["out"] == slow["out"]})
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'kernel':22} {'numba s':>10} {'python s':>10} {'speedup':>9}  same")
        for r in rows:
            print(f"{r['kernel']:22} {r['numba_s']:10.4f} {r['python_s']:10.4f} "
                  f"{r['speedup']:8.1f}x  {r['same_output']}")
    return 0 if all(r["same_output"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
