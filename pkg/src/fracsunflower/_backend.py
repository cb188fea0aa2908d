"""Select the time-loop implementation at import.

Set ``FRACSUNFLOWER_PURE=1`` to force the numpy fallback.
"""

import os

from . import _fallback

try:
    if os.environ.get("FRACSUNFLOWER_PURE", "") not in ("", "0"):
        raise ImportError("pure backend requested")
    from ._kernels import run_scheme as _compiled_run_scheme
except ImportError:
    _compiled_run_scheme = None

BACKEND = "cython" if _compiled_run_scheme is not None else "python"


def get_run_scheme(backend=None):
    """Return ``run_scheme`` for ``backend`` ('cython', 'python' or None=auto)."""
    if backend is None:
        backend = BACKEND
    if backend == "python":
        return _fallback.run_scheme
    if backend == "cython":
        if _compiled_run_scheme is None:
            raise ImportError("compiled kernel fracsunflower._kernels is not built")
        return _compiled_run_scheme
    raise ValueError(f"unknown backend {backend!r}")
