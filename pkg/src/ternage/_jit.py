"""Optional numba acceleration.

Set ``TERNAGE_NO_NUMBA=1`` to run every kernel as plain Python over numpy
arrays. Both paths execute the same function bodies, so results are
bit-identical; only speed differs.
"""

import os


def _noop_jit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(f):
        return f

    return wrap


def _want_numba() -> bool:
    flag = os.environ.get("TERNAGE_NO_NUMBA", "").strip().lower()
    if flag in ("1", "true", "yes", "on"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _want_numba()

if USE_NUMBA:
    from numba import njit
else:
    njit = _noop_jit
