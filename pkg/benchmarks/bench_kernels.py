"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 7]

Prints one line per kernel with the best-of-N time for each backend and the
speedup. Exits quietly with a note when the extension is not built.
"""

import argparse
import timeit

import numpy as np

from rksampling import _core_py

try:
    from rksampling import _core
except ImportError:  # extension not built
    _core = None


def cases(rng):
    thr = 1.0375 ** np.arange(-40, 45, dtype=float)
    vals = np.abs(rng.standard_normal(200_000)) * 3
    approx = np.abs(rng.standard_normal((84, 5_000))) * 3
    samples = rng.standard_normal(4096)
    x = rng.uniform(-1, 5, 100_000)
    K = rng.standard_normal((1536, 1792))
    return {
        "assign_levels_sorted": lambda m: m.assign_levels_sorted(vals, thr),
        "assign_levels_multi": lambda m: m.assign_levels_multi(approx, thr[1:]),
        "interp_linear_1d": lambda m: m.interp_linear_1d(samples, -1.0, 6.0 / 4096, x),
        "window_max_absdiff": lambda m: m.window_max_absdiff(K, 25),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _core is None:
        print("compiled core not available; build with `pip install -e . --no-build-isolation`")
        return
    print(f"seed={args.seed}")
    print(f"{'kernel':<22} {'cython ms':>10} {'python ms':>10} {'speedup':>8}")
    for name, fn in cases(np.random.default_rng(args.seed)).items():
        tc = min(timeit.repeat(lambda: fn(_core), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(_core_py), number=1, repeat=args.repeat))
        print(f"{name:<22} {tc * 1e3:10.2f} {tp * 1e3:10.2f} {tp / tc:8.2f}x")


if __name__ == "__main__":
    main()
