"""Selects the compiled swap kernels when available.

Set CHAINLAB_PURE=1 to force the numpy fallback.
"""
import os

import numpy as np

from . import _fallback

BACKEND = "numpy"
_impl = _fallback
if os.environ.get("CHAINLAB_PURE") != "1":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback


def _check(eta):
    if eta.ndim != 2 or eta.dtype != np.float64 or not eta.flags.c_contiguous:
        raise ValueError("eta must be a C-contiguous float64 array of shape (R, N)")


def apply_swaps(eta, bonds, starts, stops, impl=None):
    """Apply bonds[starts[r]:stops[r]] to row r of eta in place."""
    _check(eta)
    bonds = np.ascontiguousarray(bonds, dtype=np.int32)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    stops = np.ascontiguousarray(stops, dtype=np.int64)
    if starts.shape != (eta.shape[0],) or stops.shape != starts.shape:
        raise ValueError("starts/stops must have one entry per row")
    (impl or _impl).apply_swaps(eta, bonds, starts, stops)


def apply_bond_column(eta, bonds, impl=None):
    """Swap bond bonds[r] in row r in place; negative bonds mean no swap."""
    _check(eta)
    bonds = np.ascontiguousarray(bonds, dtype=np.int32)
    if bonds.shape != (eta.shape[0],):
        raise ValueError("need one bond per row")
    (impl or _impl).apply_bond_column(eta, bonds)
