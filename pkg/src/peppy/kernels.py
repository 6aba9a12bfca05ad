"""Backend selection for the hot kernels.

The compiled Cython extension is used when it was built; otherwise the NumPy
reference implementation is imported. Set ``PEPPY_PURE_PYTHON=1`` to force
the fallback (handy for debugging and for the benchmark).
"""

import os

from . import _kernels_py

GEOM_FIELDS = _kernels_py.GEOM_FIELDS


def _load(force_python=False):
    if force_python or os.environ.get("PEPPY_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from . import _kernels
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "cython"


_impl, BACKEND = _load()

build_chain = _impl.build_chain
clash_pairs = _impl.clash_pairs
pair_terms = _impl.pair_terms


def backends():
    """Every importable backend as ``{name: module}``."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels

        found["cython"] = _kernels
    except ImportError:
        pass
    return found
