"""Backend dispatch for the hot numerical kernels.

The compiled extension ``qcdi._core`` is preferred when importable; the
numpy fallback ``qcdi._purepy`` is always available.  Set the environment
variable ``QCDI_PURE_PYTHON=1`` before import to force the fallback, or call
:func:`set_backend` at runtime (tests and benchmarks do).
"""

from __future__ import annotations

import os

import numpy as np

from . import _purepy

_BACKENDS = {"python": _purepy}

try:
    from . import _core as _compiled
except ImportError:
    _compiled = None
else:
    _BACKENDS["compiled"] = _compiled

if os.environ.get("QCDI_PURE_PYTHON", "") == "1" or _compiled is None:
    _active = "python"
else:
    _active = "compiled"


def available_backends() -> tuple:
    return tuple(sorted(_BACKENDS))


def backend() -> str:
    """Name of the active backend: 'compiled' or 'python'."""

    return _active


def set_backend(name: str) -> str:
    """Switch backends; returns the previous name.  Raises on unknown names."""

    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}, have {available_backends()}")
    previous = _active
    _active = name
    return previous


def _c(arr, dtype):
    return np.ascontiguousarray(arr, dtype=dtype)


def rank(ks, G, binom):
    return _BACKENDS[_active].rank(_c(ks, np.int64), int(G), binom)


def locate(points, G, binom):
    return _BACKENDS[_active].locate(_c(points, np.float64), int(G), binom)


def nearest(points, G, binom):
    return _BACKENDS[_active].nearest(_c(points, np.float64), int(G), binom)


def update_batch(beliefs, symbols, fmat, p, nu):
    return _BACKENDS[_active].update_batch(
        _c(beliefs, np.float64),
        _c(symbols, np.int64),
        _c(fmat, np.float64),
        float(p),
        _c(nu, np.float64),
    )


def expected_next_value(beliefs, values, fmat, p, nu, G, binom):
    return _BACKENDS[_active].expected_next_value(
        _c(beliefs, np.float64),
        _c(values, np.float64),
        _c(fmat, np.float64),
        float(p),
        _c(nu, np.float64),
        int(G),
        binom,
    )
