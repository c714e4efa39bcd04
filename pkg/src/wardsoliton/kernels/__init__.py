"""Hot numerical kernels with a numba backend and a numpy fallback.

The backend is picked once at import time from the ``WSF_KERNELS``
environment variable (``numba`` or ``numpy``; default ``numba``).  If numba
cannot be imported the numpy versions are used.  The public wrappers accept
arbitrary leading batch shapes and flatten them for the backend.
"""

from __future__ import annotations

import os

import numpy as np

from . import _numpy

_requested = os.environ.get("WSF_KERNELS", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"WSF_KERNELS must be 'numba' or 'numpy', got {_requested!r}")

_impl = _numpy
BACKEND = "numpy"
if _requested == "numba":
    try:
        from . import _numba as _impl  # noqa: F811

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _impl = _numpy


def backend_module(name: str):
    return {"numpy": _numpy, "numba": _load_numba()}[name]


def _load_numba():
    from . import _numba

    return _numba


def _c(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def chain_product(perps, coeffs, impl=None):
    """Ordered product of simple-element matrices.

    perps: (k, *batch, n, n) complements of the projectors.
    coeffs: (k, *batch) scalars (z - conj z)/(lambda - z).
    Returns (*batch, n, n) = (I + c_{k-1} Q_{k-1}) ... (I + c_0 Q_0).
    """
    impl = impl or _impl
    perps = np.asarray(perps)
    k = perps.shape[0]
    batch = perps.shape[1:-2]
    n = perps.shape[-1]
    if k == 0:
        return np.broadcast_to(np.eye(n, dtype=complex), batch + (n, n)).copy()
    coeffs = np.broadcast_to(np.asarray(coeffs, dtype=complex), (k,) + batch)
    N = int(np.prod(batch)) if batch else 1
    out = impl.chain_product(_c(perps.reshape(k, N, n, n)), _c(coeffs.reshape(k, N)))
    return out.reshape(batch + (n, n))


def rank_one_projectors(v, impl=None):
    impl = impl or _impl
    v = np.asarray(v)
    batch, n = v.shape[:-1], v.shape[-1]
    out = impl.rank_one_projectors(_c(v.reshape(-1, n)))
    return out.reshape(batch + (n, n))


def energy_density(jxp, jxm, jyp, jym, jtp, jtm, h, impl=None):
    impl = impl or _impl
    batch, n = jxp.shape[:-2], jxp.shape[-1]
    args = [_c(np.asarray(a).reshape(-1, n, n)) for a in (jxp, jxm, jyp, jym, jtp, jtm)]
    return impl.energy_density(*args, float(h)).reshape(batch)


def ward_residual(j0, jp, jm, h, impl=None):
    impl = impl or _impl
    j0 = np.asarray(j0)
    batch, n = j0.shape[:-2], j0.shape[-1]
    out = impl.ward_residual(
        _c(j0.reshape(-1, n, n)),
        _c(np.asarray(jp).reshape(3, -1, n, n)),
        _c(np.asarray(jm).reshape(3, -1, n, n)),
        float(h),
    )
    return out.reshape(batch)
