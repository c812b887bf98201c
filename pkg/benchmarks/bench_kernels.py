"""Time the compiled swap kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--rows 256] [--N 512] [--swaps-per-row 20000]
"""
import argparse
import timeit

import numpy as np

from chainlab import _fallback, kernels


def _workload(rows: int, N: int, per_row: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    eta = rng.normal(size=(rows, N))
    bonds = rng.integers(0, N, rows * per_row, dtype=np.int32)
    starts = np.arange(rows, dtype=np.int64) * per_row
    return eta, bonds, starts, starts + per_row


def _best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=256)
    ap.add_argument("--N", type=int, default=512)
    ap.add_argument("--swaps-per-row", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    eta, bonds, starts, stops = _workload(args.rows, args.N, args.swaps_per_row)
    impls = {"numpy": _fallback}
    if kernels.BACKEND == "cython":
        impls["cython"] = kernels._impl
    else:
        print("compiled kernels unavailable; timing the fallback only")

    results = {}
    finals = {}
    for name, impl in impls.items():
        work = eta.copy()
        results[name] = _best(lambda: kernels.apply_swaps(work, bonds, starts, stops, impl=impl), args.repeat)
        finals[name] = work
    total = args.rows * args.swaps_per_row
    for name, sec in results.items():
        print(f"{name:>7}: {sec * 1e3:9.2f} ms  ({total / sec / 1e6:7.1f} Mswaps/s)")
    if len(results) == 2:
        same = np.array_equal(finals["numpy"], finals["cython"])
        print(f"speedup: {results['numpy'] / results['cython']:.1f}x, identical output: {same}")


if __name__ == "__main__":
    main()
