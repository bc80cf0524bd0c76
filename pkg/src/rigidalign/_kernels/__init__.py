"""Kernel backend selection.

Prefers the compiled Cython extension; falls back to the NumPy reference
implementation when the extension is missing or when the environment
variable RIGIDALIGN_PURE_PYTHON is set to a non-empty value.
"""

import os

from . import _reference

if os.environ.get("RIGIDALIGN_PURE_PYTHON"):
    _impl = _reference
    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _reference
        BACKEND = "python"

sampled_triple_product = _impl.sampled_triple_product
count_mapped_edges = _impl.count_mapped_edges

__all__ = ["BACKEND", "sampled_triple_product", "count_mapped_edges"]
