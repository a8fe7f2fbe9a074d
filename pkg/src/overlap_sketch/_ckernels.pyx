# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hashing kernels. Semantics mirror ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t SENTINEL = 0xFFFFFFFFFFFFFFFFULL


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def hash_values(values, uint64_t seed):
    cdef const uint64_t[::1] v = np.ascontiguousarray(values, dtype=np.uint64)
    cdef Py_ssize_t n = v.shape[0], i
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _mix64(_mix64(v[i]) ^ seed)
    return out


def minhash_minima(values, seeds):
    cdef const uint64_t[::1] v = np.ascontiguousarray(values, dtype=np.uint64)
    cdef const uint64_t[::1] s = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef Py_ssize_t n = v.shape[0], k = s.shape[0], i, t
    out = np.full(k, SENTINEL, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef uint64_t pre, h
    with nogil:
        for i in range(n):
            pre = _mix64(v[i])
            for t in range(k):
                h = _mix64(pre ^ s[t])
                if h < o[t]:
                    o[t] = h
    return out


def partition_ids(values, uint64_t seed, int64_t batch_count):
    cdef const uint64_t[::1] v = np.ascontiguousarray(values, dtype=np.uint64)
    cdef Py_ssize_t n = v.shape[0], i
    cdef uint64_t b = <uint64_t>batch_count
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = <int64_t>(_mix64(_mix64(v[i]) ^ seed) % b)
    return out


def grouped_minhash(values, groups, Py_ssize_t group_count, seeds):
    cdef const uint64_t[::1] v = np.ascontiguousarray(values, dtype=np.uint64)
    cdef const int64_t[::1] g = np.ascontiguousarray(groups, dtype=np.int64)
    cdef const uint64_t[::1] s = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef Py_ssize_t n = v.shape[0], k = s.shape[0], i, t
    if g.shape[0] != n:
        raise ValueError("values and groups differ in length")
    out = np.full((group_count, k), SENTINEL, dtype=np.uint64)
    cdef uint64_t[:, ::1] o = out
    cdef uint64_t pre, h
    cdef int64_t row
    for i in range(n):
        if g[i] < 0 or g[i] >= group_count:
            raise ValueError(f"group id {g[i]} out of range")
    with nogil:
        for i in range(n):
            pre = _mix64(v[i])
            row = g[i]
            for t in range(k):
                h = _mix64(pre ^ s[t])
                if h < o[row, t]:
                    o[row, t] = h
    return out
