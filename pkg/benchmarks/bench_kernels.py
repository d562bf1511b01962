"""Compare the compiled EM kernel against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--sizes 100,1000,10000] [--repeat 5]

Both backends are imported directly, so the comparison does not depend on
``MIXTEST_PURE_PYTHON``. Reported times are the best of ``--repeat`` runs.
The last block times a whole ``em_test`` call through each backend.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from mixtest import _pykernels

try:
    from mixtest import _ckernels
except ImportError:
    _ckernels = None


def kernel_args(n, rounds, seed=0):
    rng = np.random.default_rng(seed)
    x = np.concatenate([rng.normal(0, 1, n - n // 3), rng.normal(2, 1, n // 3)])
    sn2 = float(x.var())
    return (x, 0.3, -0.2, 1.8, sn2, sn2, sn2, False, 0.25, 1, True, rounds, 0.0)


def best_time(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.2:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def em_test_time(pure: bool, n: int) -> float:
    env = dict(os.environ, MIXTEST_PURE_PYTHON="1" if pure else "0")
    code = (
        "import timeit, numpy as np\n"
        "from mixtest import Sample, em_test\n"
        f"s = Sample.from_values(np.random.default_rng(1).normal(size={n}))\n"
        "print(min(timeit.repeat(lambda: em_test(s), number=20, repeat=3)) / 20)\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    return float(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100,1000,10000")
    ap.add_argument("--rounds", type=int, default=50, help="EM rounds per kernel call")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if _ckernels is None:
        print("compiled extension not built; only the numpy backend is timed")
    print(f"em_fit, {args.rounds} rounds per call (best of {args.repeat})")
    print(f"{'n':>8} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8}")
    for n in sizes:
        a = kernel_args(n, args.rounds)
        tp = best_time(_pykernels.em_fit, a, args.repeat)
        if _ckernels is None:
            print(f"{n:8d} {1e3 * tp:12.3f} {'-':>12} {'-':>8}")
            continue
        tc = best_time(_ckernels.em_fit, a, args.repeat)
        print(f"{n:8d} {1e3 * tp:12.3f} {1e3 * tc:12.3f} {tp / tc:8.1f}")

    print("\nem_test, default config")
    print(f"{'n':>8} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8}")
    for n in (100, 200, 1000):
        tp = em_test_time(True, n)
        tc = em_test_time(False, n) if _ckernels is not None else float("nan")
        print(f"{n:8d} {1e3 * tp:12.3f} {1e3 * tc:12.3f} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
