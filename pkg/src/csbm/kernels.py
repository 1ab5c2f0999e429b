"""Backend selection for the search kernels.

The compiled extension is preferred; set ``CSBM_PURE_PYTHON=1`` to force the
pure-Python implementations (used by the equivalence tests and benchmark).
"""

import os

from . import _pykernels as python_backend

try:
    from . import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("CSBM_PURE_PYTHON", "") not in ("1", "true"):
    _impl = compiled_backend
    BACKEND = "cython"
else:
    _impl = python_backend
    BACKEND = "python"

exhaustive_argmax = _impl.exhaustive_argmax
enumerate_map_stats = _impl.enumerate_map_stats
local_search = _impl.local_search


def available_backends() -> dict:
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out
