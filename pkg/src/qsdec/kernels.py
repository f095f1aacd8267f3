"""Backend dispatch for the hot lattice kernels.

The compiled extension is preferred when it imported cleanly; the numpy
implementation is the fallback and the reference in tests.  Set
QSDEC_FORCE_NUMPY=1 to force the fallback (the benchmark uses this).
"""

from __future__ import annotations

import os

from . import _kernels_np

_backend = "numpy"
_impl = _kernels_np

if not os.environ.get("QSDEC_FORCE_NUMPY"):
    try:
        from . import _qskernels as _ext

        _impl = _ext
        _backend = "cython"
    except ImportError:
        pass


def backend_name() -> str:
    return _backend


def rescaled_accum(*args, **kwargs):
    return _impl.rescaled_accum(*args, **kwargs)


def rescaled_accum_with(backend: str, *args, **kwargs):
    if backend == "numpy":
        return _kernels_np.rescaled_accum(*args, **kwargs)
    if backend == "cython":
        from . import _qskernels

        return _qskernels.rescaled_accum(*args, **kwargs)
    raise ValueError(f"unknown backend {backend!r}")
