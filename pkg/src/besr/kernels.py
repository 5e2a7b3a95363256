"""Kernel dispatch: the compiled extension when importable, else pure Python.

Set ``BESR_PURE_PYTHON=1`` to force the fallback. ``BACKEND`` names the
implementation in use.
"""

import os

from . import _pykernels

OK = _pykernels.OK
STEP_UNDERFLOW = _pykernels.STEP_UNDERFLOW
MAX_STEPS = _pykernels.MAX_STEPS

if os.environ.get("BESR_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    jacobi_eigh = _compiled.jacobi_eigh
    integrate_bottleneck = _compiled.integrate_bottleneck
    BACKEND = "cython"
else:
    jacobi_eigh = _pykernels.jacobi_eigh
    integrate_bottleneck = _pykernels.integrate_bottleneck
    BACKEND = "python"


def available_backends():
    """Map of backend name -> module exposing the kernel functions."""
    out = {"python": _pykernels}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
