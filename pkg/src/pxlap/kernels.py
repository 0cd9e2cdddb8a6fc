"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the NumPy
fallback. Setting ``PXLAP_KERNELS=python`` forces the fallback.
``coefficients`` always runs on NumPy: its vectorised ``pow`` beats the
scalar loop (see benchmarks/bench_kernels.py).
"""

import os

from . import _pykernels

if os.environ.get("PXLAP_KERNELS", "").lower() == "python":
    from . import _pykernels as _impl
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as _impl
        BACKEND = "python"

grad_1d = _impl.grad_1d
grad_2d = _impl.grad_2d
grad_t_1d = _impl.grad_t_1d
grad_t_2d = _impl.grad_t_2d
coefficients = _pykernels.coefficients
thomas = _impl.thomas

__all__ = [
    "BACKEND",
    "grad_1d",
    "grad_2d",
    "grad_t_1d",
    "grad_t_2d",
    "coefficients",
    "thomas",
]
