"""Backend selection for the orbit kernels.

The compiled extension is used when it imports; set ``ERGOMET_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _pykernels

INDEPENDENT = _pykernels.INDEPENDENT
MONOTONE = _pykernels.MONOTONE
MAXIMAL = _pykernels.MAXIMAL

_native = None
if not os.environ.get("ERGOMET_PURE_PYTHON"):
    try:
        from . import _ckernels as _native
    except ImportError:
        _native = None

if _native is not None:
    BACKEND = "cython"
    first_mismatch = _native.first_mismatch
    block_codes = _native.block_codes
    coupled_chain = _native.coupled_chain
else:
    BACKEND = "python"
    first_mismatch = _pykernels.first_mismatch
    block_codes = _pykernels.block_codes
    coupled_chain = _pykernels.coupled_chain


def backends():
    """Mapping of available backend name to kernel module."""
    out = {"python": _pykernels}
    if _native is not None:
        out["cython"] = _native
    return out
