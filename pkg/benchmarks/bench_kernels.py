"""Compare the compiled hashing kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 200000] [--k 200] [--repeat 3]
"""
import argparse
import time

import numpy as np

from overlap_sketch import _pykernels

try:
    from overlap_sketch import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000, help="elements per set")
    ap.add_argument("--k", type=int, default=200, help="hash functions")
    ap.add_argument("--batches", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    values = rng.integers(0, 2**64, size=args.n, dtype=np.uint64)
    seeds = rng.integers(0, 2**64, size=args.k, dtype=np.uint64)
    groups = np.asarray(_pykernels.partition_ids(values, 1, args.batches), dtype=np.int64)

    cases = {
        "minhash_minima": lambda m: m.minhash_minima(values, seeds),
        "grouped_minhash": lambda m: m.grouped_minhash(values, groups, args.batches, seeds),
        "partition_ids": lambda m: m.partition_ids(values, np.uint64(1), args.batches),
    }
    backends = {"numpy": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        print("compiled kernels not built; timing the numpy fallback only")

    print(f"n={args.n} k={args.k} batches={args.batches} (best of {args.repeat})")
    print(f"{'kernel':<18}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases.items():
        t = {b: best_of(lambda: fn(m), args.repeat) for b, m in backends.items()}
        speed = f"{t['numpy'] / t['cython']:>9.1f}x" if "cython" in t else ""
        print(f"{name:<18}" + "".join(f"{t[b]:>11.4f}s" for b in backends) + speed)


if __name__ == "__main__":
    main()
