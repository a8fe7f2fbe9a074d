"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
implementation takes over. Set ``OVERLAP_SKETCH_PURE=1`` to force numpy.
"""
from __future__ import annotations

import os

from . import _pykernels

SENTINEL = _pykernels.SENTINEL

_impl = _pykernels
BACKEND = "numpy"

if os.environ.get("OVERLAP_SKETCH_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

hash_values = _impl.hash_values
minhash_minima = _impl.minhash_minima
partition_ids = _impl.partition_ids
grouped_minhash = _impl.grouped_minhash

__all__ = [
    "BACKEND",
    "SENTINEL",
    "grouped_minhash",
    "hash_values",
    "minhash_minima",
    "partition_ids",
]
