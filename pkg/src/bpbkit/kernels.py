"""Backend selection for the hot loops.

The compiled extension is used when it was built; set ``BPBKIT_PURE=1`` to
force the numpy implementation.
"""

import os

from . import _pykernels

try:
    if os.environ.get("BPBKIT_PURE"):
        raise ImportError("pure backend requested")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

OUTER_SUM = _pykernels.OUTER_SUM
OUTER_MAX = _pykernels.OUTER_MAX

ascent = _impl.ascent
c_modulus_grid = _impl.c_modulus_grid


def backend(name: str):
    """Return the kernel module ``"python"`` or ``"cython"`` explicitly."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
