"""Backend selection for the hot loops.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy versions in ``_pykernels`` are used. Set ``QRNG_CERT_PURE=1`` to force
the fallback.
"""

import os
import warnings

from . import _pykernels as py_backend

c_backend = None
if os.environ.get("QRNG_CERT_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as c_backend
    except ImportError as exc:  # pragma: no cover - depends on build
        warnings.warn(f"qrng_cert: compiled kernels unavailable ({exc}); using numpy fallback")

_active = c_backend if c_backend is not None else py_backend
BACKEND = "cython" if _active is c_backend else "numpy"

toeplitz_direct = _active.toeplitz_direct
compositions = _active.compositions
