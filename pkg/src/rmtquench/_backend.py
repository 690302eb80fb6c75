"""Pick the kernel implementation at import time.

The compiled ``_ckernels`` module is used when it was built; otherwise, or when
``RMTQUENCH_BACKEND=python`` is set, the numpy module ``_pykernels`` is used.
"""

import os

from . import _pykernels

kernels = _pykernels
BACKEND = "python"

if os.environ.get("RMTQUENCH_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        kernels = _ckernels
        BACKEND = "cython"


def available_backends():
    """Map of backend name to kernel module for every importable backend."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        return out
    out["cython"] = _ckernels
    return out
