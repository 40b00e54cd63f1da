from __future__ import annotations

import itertools

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ternage.constructions import GRAPH, HYPERGRAPH, TERNARY, TOURNAMENT
from ternage.structure import FinStructure, Signature

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

MIXED = Signature.of(("P", 1), ("E", 2), ("S", 2, True), ("R", 3))


@st.composite
def structures(draw, sig=TERNARY, min_size=0, max_size=5, density=None):
    """Random structures over ``sig``; symmetric symbols get whole orbits."""
    n = draw(st.integers(min_size, max_size))
    rels = {}
    for sym in sig.symbols:
        if sym.symmetric:
            pool = list(itertools.combinations(range(n), sym.arity))
        else:
            pool = list(itertools.permutations(range(n), sym.arity))
        if not pool:
            rels[sym.name] = []
            continue
        bits = draw(st.lists(st.booleans(), min_size=len(pool), max_size=len(pool)))
        rels[sym.name] = [t for t, b in zip(pool, bits) if b]
    return FinStructure.from_tuples(sig, n, rels)


def hypergraphs(min_size=0, max_size=5):
    return structures(HYPERGRAPH, min_size, max_size)


def graphs(min_size=0, max_size=5):
    return structures(GRAPH, min_size, max_size)


@st.composite
def tournaments(draw, min_size=1, max_size=6):
    n = draw(st.integers(min_size, max_size))
    edges = []
    for i, j in itertools.combinations(range(n), 2):
        edges.append((i, j) if draw(st.booleans()) else (j, i))
    return FinStructure.from_tuples(TOURNAMENT, n, {"E": edges})


@st.composite
def permutations_of(draw, n):
    return draw(st.permutations(list(range(n))))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
