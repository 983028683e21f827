"""Numba acceleration switch.

Kernels in :mod:`rbpb._kernels` come in two flavours: a numba ``@njit``
version and a pure-numpy version.  The numba path is used when numba is
importable and the environment variable ``RBPB_DISABLE_NUMBA`` is unset (or
set to ``0``/``false``).  Tests and benchmarks can compare both paths since
each kernel keeps both implementations importable regardless of the flag.
"""

import os

_FLAG = os.environ.get("RBPB_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False
    _numba_njit = None

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit`` when numba is installed, otherwise an identity decorator.

    Unlike ``USE_NUMBA`` this ignores the env flag: the compiled variants are
    always built so the benchmark can time them next to the numpy variants.
    """
    if HAVE_NUMBA:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
