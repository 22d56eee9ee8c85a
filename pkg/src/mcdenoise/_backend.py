"""Pick the compiled kernels when available, else the numpy fallback.

Set ``MCDENOISE_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and by the backend-equivalence tests).
"""
import os

from . import _fallback

if os.environ.get("MCDENOISE_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _fallback

BACKEND = kernels.NAME

overlap_add = kernels.overlap_add
welford_update = kernels.welford_update
relu_dropout = kernels.relu_dropout
relu_dropout_backward = kernels.relu_dropout_backward
msle_and_grad = kernels.msle_and_grad
