"""Select the integration kernel at import.

The compiled kernel is used when it was built; otherwise the pure-Python one.
Set ``ETRC_PURE_PYTHON=1`` to force the fallback.
"""

import logging
import os

from . import _kernel_py

log = logging.getLogger(__name__)

_compiled = None
if os.environ.get("ETRC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernel as _compiled
    except ImportError:  # extension not built
        log.debug("compiled kernel unavailable, using pure Python")

BACKEND = "cython" if _compiled is not None else "python"
AVAILABLE = ("cython", "python") if _compiled is not None else ("python",)


def get_kernel(name=None):
    """Return the ``run_loop`` implementation called ``name`` (default: best available)."""
    name = name or BACKEND
    if name == "python":
        return _kernel_py.run_loop
    if name == "cython":
        if _compiled is None:
            raise ImportError("the compiled kernel is not built")
        return _compiled.run_loop
    raise ValueError(f"unknown backend {name!r}")
