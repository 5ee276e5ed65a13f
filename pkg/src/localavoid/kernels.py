"""Kernel selection: the compiled extension when importable, else Python.

Set ``LOCALAVOID_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

COMPILED_LIMIT = 1 << 62

try:
    if os.environ.get("LOCALAVOID_PURE_PYTHON"):
        raise ImportError("pure Python requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

HAVE_COMPILED = _compiled is not None


def product_max_valuation(terms, columns, modulus, p, cap, groups=None, stop_at=None, backend=None):
    """Dispatch to the compiled kernel when it can represent ``modulus``."""
    if backend is None:
        backend = "compiled" if (HAVE_COMPILED and modulus < COMPILED_LIMIT) else "python"
    if backend == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernels are not built")
        return _compiled.product_max_valuation(terms, columns, modulus, p, cap, groups, stop_at)
    return _kernels_py.product_max_valuation(terms, columns, modulus, p, cap, groups, stop_at)
