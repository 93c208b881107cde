"""Benchmark the hot kernels on both backends (numba jit vs pure numpy).

Run:  python3 benchmarks/bench_kernels.py [--repeats 5]

The numpy path is the one selected by SMOOTHCERT_NO_NUMBA=1; this script
times both families directly in one process and checks they produce
bitwise-identical output while at it.
"""

import argparse
import time

import numpy as np

from smoothcert import kernels


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not kernels.HAVE_NUMBA:
        print("numba unavailable (or disabled); only the numpy backend exists here")
        return 0

    print(f"{'kernel':<34}{'numba':>12}{'numpy':>12}{'numpy/numba':>14}")
    rows = [
        ("derive_seeds n=1e6", lambda: kernels.nb_derive_seeds(np.uint64(7), 1_000_000),
         lambda: kernels.np_derive_seeds(7, 1_000_000)),
    ]
    for n, dim in ((100_000, 1), (10_000, 64), (2_000, 512)):
        seeds = kernels.np_derive_seeds(42, n)
        rows.append(
            (f"normal_rows n={n} dim={dim}",
             lambda s=seeds, d=dim: kernels.nb_normal_rows(s, d),
             lambda s=seeds, d=dim: kernels.np_normal_rows(s, d))
        )
    p = np.random.default_rng(0).random(1_000_000)
    rows.append(("ndtri n=1e6", lambda: kernels.nb_ndtri(p), lambda: kernels.np_ndtri(p)))

    for name, nb_fn, np_fn in rows:
        nb_fn()  # jit warm-up
        nb_time, nb_out = timeit(nb_fn, args.repeats)
        np_time, np_out = timeit(np_fn, args.repeats)
        if not np.array_equal(np.asarray(nb_out), np.asarray(np_out)):
            print(f"{name}: BACKEND MISMATCH (bitwise)")
            return 1
        print(f"{name:<34}{nb_time * 1e3:>10.2f}ms{np_time * 1e3:>10.2f}ms{np_time / nb_time:>13.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
