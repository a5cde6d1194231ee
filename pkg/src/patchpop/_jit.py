"""JIT backend selection.

Every hot kernel in this package is written in a numba-compatible subset of
Python (explicit loops over preallocated numpy arrays).  By default the
kernels are compiled with ``numba.njit``; setting the environment variable
``PATCHPOP_DISABLE_JIT=1`` (or running without numba installed) makes the
same source run as plain Python instead.  The fallback is functionally
identical but much slower; it exists for portability and for benchmarking
the compiled path against the interpreted one.

Helpers on the per-evaluation path are marked ``inline=True``: numba then
splices them into their callers at IR level, which removes the per-call
reference-count traffic on array arguments (roughly 13ns per argument per
call, enough to dominate sub-microsecond operations).
"""

import os

_disabled = os.environ.get("PATCHPOP_DISABLE_JIT", "").strip() in ("1", "true", "yes")

if not _disabled:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a hard dependency normally
        numba = None
        _disabled = True

JIT_ENABLED = not _disabled


def kernel(fn=None, *, inline=False):
    """Compile with njit(cache=True), or return the function unchanged when
    JIT is off.  ``inline=True`` additionally requests IR-level inlining into
    jitted callers."""

    def wrap(f):
        if not JIT_ENABLED:
            return f
        if inline:
            return numba.njit(cache=True, inline="always")(f)
        return numba.njit(cache=True)(f)

    if fn is not None:
        return wrap(fn)
    return wrap
