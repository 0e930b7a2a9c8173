"""Compare the numba kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--count N] [--repeat R]

Each case runs once untimed (JIT compilation) and then ``repeat`` times;
the best time is reported.  Results of the two paths are checked equal.
"""
import argparse
import time
from functools import partial

import numpy as np

from collatzkit import canonical_program, kernels


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(count):
    odd = np.arange(1, 2 * count, 2, dtype=np.int64)
    p2 = canonical_program("p2")
    p453 = canonical_program("p4", [53])
    p1 = canonical_program("p1")
    return {
        "p1 lengths to 1": lambda jit: kernels.scan(p1, odd, (1,), use_jit=jit),
        "p1 drop below start": lambda jit: kernels.scan(p1, odd, (), stop_below=True, use_jit=jit),
        "p2 basin lengths": lambda jit: kernels.scan(p2, odd, (1, 7, 21, 85, 121, 141, 1303, 69721), use_jit=jit),
        "p4(53) basin lengths": lambda jit: kernels.scan(
            p453, odd, (1, 25, 35, 43, 55, 63, 2125, 15871), use_jit=jit),
        "picket exits": lambda jit: kernels.picket_exits(odd, 10**7, use_jit=jit),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200_000, help="odd starts per case")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not kernels.JIT_ENABLED:
        print("numba is unavailable or disabled; only the numpy path can run")
    print(f"{args.count} odd starts, best of {args.repeat}")
    print(f"{'case':<24} {'numba s':>9} {'numpy s':>9} {'speedup':>8}")
    for name, fn in cases(args.count).items():
        t_np, out_np = best_of(partial(fn, False), args.repeat)
        if kernels.JIT_ENABLED:
            t_jit, out_jit = best_of(partial(fn, True), args.repeat)
            assert all(np.array_equal(a, b) for a, b in zip(out_jit, out_np)), name
            print(f"{name:<24} {t_jit:>9.4f} {t_np:>9.4f} {t_np / t_jit:>7.1f}x")
        else:
            print(f"{name:<24} {'-':>9} {t_np:>9.4f} {'-':>8}")


if __name__ == "__main__":
    main()
