"""Streaming equalizer loops: compiled core with a pure-NumPy fallback.

The compiled extension is preferred when present; importing this package
never fails just because the extension was not built.  ``BACKEND`` records
which implementation is active.
"""

from . import _loops_py

try:
    from . import _loops_cy as _active
    BACKEND = "cython"
except ImportError:  # extension not built
    _active = _loops_py
    BACKEND = "numpy"

swkrls_equalize = _active.swkrls_equalize
lms_equalize = _active.lms_equalize


def available_backends() -> dict:
    """Name -> module map of the loop implementations importable here."""
    backends = {"numpy": _loops_py}
    if BACKEND == "cython":
        backends["cython"] = _active
    return backends
