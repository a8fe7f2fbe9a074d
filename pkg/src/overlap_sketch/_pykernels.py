"""Pure numpy implementations of the hashing kernels.

These are the reference semantics; ``_ckernels.pyx`` must agree bit for bit.
"""
from __future__ import annotations

import numpy as np

SENTINEL = np.uint64(0xFFFFFFFFFFFFFFFF)

_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


def mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized. Wraps modulo 2**64."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _C1
        z = (z ^ (z >> _S27)) * _C2
    return z ^ (z >> _S31)


def premix(values: np.ndarray) -> np.ndarray:
    return mix64(values)


def hash_values(values: np.ndarray, seed: int) -> np.ndarray:
    """Seeded 64-bit hash of each element: mix64(mix64(e) ^ seed)."""
    return mix64(premix(values) ^ np.uint64(seed))


def minhash_minima(values: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    values = np.ascontiguousarray(values, dtype=np.uint64)
    seeds = np.ascontiguousarray(seeds, dtype=np.uint64)
    out = np.full(seeds.shape[0], SENTINEL, dtype=np.uint64)
    if values.size == 0:
        return out
    pre = premix(values)
    for t, s in enumerate(seeds):
        out[t] = mix64(pre ^ s).min()
    return out


def partition_ids(values: np.ndarray, seed: int, batch_count: int) -> np.ndarray:
    values = np.ascontiguousarray(values, dtype=np.uint64)
    return (hash_values(values, seed) % np.uint64(batch_count)).astype(np.int64)


def grouped_minhash(
    values: np.ndarray, groups: np.ndarray, group_count: int, seeds: np.ndarray
) -> np.ndarray:
    """Per-group minima, shape (group_count, k). Empty groups hold SENTINEL."""
    values = np.ascontiguousarray(values, dtype=np.uint64)
    groups = np.ascontiguousarray(groups, dtype=np.int64)
    seeds = np.ascontiguousarray(seeds, dtype=np.uint64)
    out = np.full((group_count, seeds.shape[0]), SENTINEL, dtype=np.uint64)
    if values.size == 0:
        return out
    order = np.argsort(groups, kind="stable")
    sorted_groups = groups[order]
    pre = premix(values[order])
    present, starts = np.unique(sorted_groups, return_index=True)
    for t, s in enumerate(seeds):
        out[present, t] = np.minimum.reduceat(mix64(pre ^ s), starts)
    return out
