"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise the numpy
implementation is loaded. Set ``STARRIS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _nearfield_py

if os.environ.get("STARRIS_PURE_PYTHON", "") not in ("", "0"):
    near_field_sum = _nearfield_py.near_field_sum
    BACKEND = "python"
else:
    try:
        from ._nearfield import near_field_sum
        BACKEND = "cython"
    except ImportError:  # extension not built
        near_field_sum = _nearfield_py.near_field_sum
        BACKEND = "python"

__all__ = ["near_field_sum", "BACKEND"]
