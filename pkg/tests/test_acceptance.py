"""Acceptance gate: every numbered criterion at its full tolerance.

Each criterion prints one ``criterion N: PASS|FAIL`` line; the lines are
also collected and repeated in the terminal summary (see conftest.py).
"""
from __future__ import annotations

import json

import pytest

from ternage import suites

SEED = 1
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="module")
def ctx():
    # shared between checks, like run_suite does: the reduct constraints and
    # the parity approximation are built once
    return {}


def _line(res: suites.CheckResult) -> str:
    mark = "PASS" if res.status == "pass" else res.status.upper()
    kind = "exact" if res.exact else "evidence"
    extra = ""
    if res.status != "pass":
        extra = " " + json.dumps(res.details, sort_keys=True, default=str)[:300]
    return f"criterion {res.criterion:2d}: {mark} [{kind}] {res.id}: {res.title}{extra}"


@pytest.mark.parametrize("check", suites.CHECKS, ids=lambda c: f"criterion-{c.criterion:02d}")
def test_criterion(check, ctx):
    res = suites.run_check(check, SEED, ctx=ctx)
    line = _line(res)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert res.status == "pass", line
