"""Numerical kernels with a compiled fast path.

The Cython extension ``_speedups`` is preferred when it was built;
otherwise the pure-Python ``_fallback`` module supplies the same
operations. Set ``THREADCAST_PURE_PYTHON=1`` to force the fallback (used
by the backend-equivalence tests and the benchmark).
"""
from __future__ import annotations

import os

import numpy as np

from . import _fallback

if os.environ.get("THREADCAST_PURE_PYTHON") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"


def _f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def hawkes_nll_grad(top_times, reply_gaps, event_gaps, T, theta, impl=None):
    impl = impl or _impl
    return impl.hawkes_nll_grad(
        _f64(top_times), _f64(reply_gaps), _f64(event_gaps), float(T), _f64(theta)
    )


def random_walks(indptr, indices, cumw, starts, uniforms, walk_len, impl=None):
    impl = impl or _impl
    return impl.random_walks(
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(indices, dtype=np.int64),
        _f64(cumw),
        np.ascontiguousarray(starts, dtype=np.int64),
        np.ascontiguousarray(uniforms, dtype=np.float64),
        int(walk_len),
    )


def attraction_updates(walks, emb, rates, window, lower, upper, impl=None):
    impl = impl or _impl
    return impl.attraction_updates(
        np.ascontiguousarray(walks, dtype=np.int32),
        emb,
        _f64(rates),
        int(window),
        _f64(lower),
        _f64(upper),
    )
