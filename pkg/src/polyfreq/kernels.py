"""Backend selection for the hot kernels.

The compiled Cython extension is used when it imports cleanly; otherwise
(or when ``POLYFREQ_PURE_PYTHON=1``) the pure-Python twins are used.
``BACKEND`` records which one is active.
"""

import os

from . import _pykernels

if os.environ.get("POLYFREQ_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

clip_area = _impl.clip_area
overlap_grid = _impl.overlap_grid
symmetrize_sweep = _impl.symmetrize_sweep

STATUS_APPLIED = _pykernels.STATUS_APPLIED
STATUS_REJECTED = _pykernels.STATUS_REJECTED
ERR_NONE = _pykernels.ERR_NONE
ERR_COLLINEAR = _pykernels.ERR_COLLINEAR


def get_backend(name):
    """Return the kernel module for ``"python"`` or ``"cython"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
