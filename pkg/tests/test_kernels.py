import numpy as np
import pytest

from overlap_sketch import _kernels, _pykernels

ck = pytest.importorskip("overlap_sketch._ckernels")


def _values(rng, n):
    return rng.integers(0, 2**64, size=n, dtype=np.uint64)


def test_hash_values_match(rng):
    v = _values(rng, 5000)
    for seed in (0, 1, 2**63 + 5, 2**64 - 1):
        np.testing.assert_array_equal(ck.hash_values(v, np.uint64(seed)), _pykernels.hash_values(v, seed))


def test_minhash_minima_match(rng):
    v = _values(rng, 3000)
    seeds = _values(rng, 64)
    np.testing.assert_array_equal(ck.minhash_minima(v, seeds), _pykernels.minhash_minima(v, seeds))


def test_minhash_of_empty_is_sentinel():
    seeds = np.arange(5, dtype=np.uint64)
    empty = np.empty(0, dtype=np.uint64)
    for mod in (ck, _pykernels):
        assert (np.asarray(mod.minhash_minima(empty, seeds)) == _pykernels.SENTINEL).all()


@pytest.mark.parametrize("batches", [1, 7, 30])
def test_partition_ids_match(rng, batches):
    v = _values(rng, 4000)
    np.testing.assert_array_equal(
        ck.partition_ids(v, np.uint64(99), batches), _pykernels.partition_ids(v, 99, batches)
    )


def test_grouped_minhash_match(rng):
    v = _values(rng, 2500)
    seeds = _values(rng, 16)
    groups = _pykernels.partition_ids(v, 3, 40)
    a = ck.grouped_minhash(v, np.asarray(groups, dtype=np.int64), 41, seeds)
    b = _pykernels.grouped_minhash(v, np.asarray(groups, dtype=np.int64), 41, seeds)
    np.testing.assert_array_equal(a, b)
    assert (np.asarray(a)[40] == _pykernels.SENTINEL).all()  # group 40 is never used


def test_grouped_equals_per_group_minhash(kernels, rng):
    v = _values(rng, 500)
    seeds = _values(rng, 8)
    groups = np.asarray(_pykernels.partition_ids(v, 1, 5), dtype=np.int64)
    table = np.asarray(kernels.grouped_minhash(v, groups, 5, seeds))
    for g in range(5):
        np.testing.assert_array_equal(table[g], _pykernels.minhash_minima(v[groups == g], seeds))


def test_grouped_minhash_rejects_bad_group(rng):
    v = _values(rng, 10)
    with pytest.raises((ValueError, IndexError)):
        ck.grouped_minhash(v, np.full(10, 3, dtype=np.int64), 2, np.arange(2, dtype=np.uint64))


def test_backend_selected():
    assert _kernels.BACKEND in ("cython", "numpy")
