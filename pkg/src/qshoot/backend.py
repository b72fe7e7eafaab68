"""Kernel backend selection.

The compiled extension is preferred when present; setting QSHOOT_PURE=1 in
the environment forces the pure-Python kernels.  Both modules expose the same
functions, so everything above this layer is backend-agnostic.  The
benchmarks import both modules directly to compare them.
"""

import os

from . import _kernels_py

try:
    from . import _kernels
except ImportError:
    _kernels = None

if _kernels is not None and not os.environ.get("QSHOOT_PURE"):
    active = _kernels
else:
    active = _kernels_py

COMPILED_AVAILABLE = _kernels is not None
BACKEND = active.BACKEND
DIVERGENCE_LIMIT = active.DIVERGENCE_LIMIT

propagate_scalar = active.propagate_scalar
propagate_coupled = active.propagate_coupled
det_along_raw = active.det_along_raw
