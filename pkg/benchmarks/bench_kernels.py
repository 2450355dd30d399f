"""Compare the jitted fused-loop kernels against the vectorized numpy
fallbacks.

Usage:
    python3 benchmarks/bench_kernels.py [--sizes 1000,100000,1000000] [--reps 200]

The numba backend is compiled ahead of the timed region, so the numbers
reflect steady-state throughput, not JIT warm-up.
"""

import argparse
import time

import numpy as np

from optparity import kernels


def time_kernel(fn, args, reps):
    # warm-up (also triggers compilation for the jitted variants)
    fn(*args)
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def make_args(name, n, rng):
    theta = rng.normal(size=n)
    g = rng.normal(size=n)
    if name == "heavy_ball_step":
        return (theta, g, rng.normal(size=n), 0.1, 0.9, 1e-4)
    if name == "nesterov_step":
        return (theta, g, rng.normal(size=n), 0.1, 0.9, 1e-4)
    if name == "adam_moments":
        return (rng.normal(size=n), np.abs(rng.normal(size=n)), g, 0.9, 0.999)
    if name == "adam_direction":
        return (np.empty(n), rng.normal(size=n), np.abs(rng.normal(size=n)),
                1e-8, 0.1, 0.001)
    if name == "trust_momentum_step":
        return (theta, g, rng.normal(size=n), 0.02, 0.9)
    raise ValueError(name)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="1000,100000,1000000")
    parser.add_argument("--reps", type=int, default=200)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if kernels.NUMBA_BACKEND is None:
        raise SystemExit("numba backend unavailable (OPTPARITY_NO_NUMBA set "
                         "or numba not importable); nothing to compare")

    rng = np.random.default_rng(0)
    header = f"{'kernel':<22}{'n':>10}{'numpy (us)':>14}{'numba (us)':>14}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name in sorted(kernels.NUMPY_BACKEND):
        for n in sizes:
            np_args = make_args(name, n, rng)
            nb_args = tuple(a.copy() if isinstance(a, np.ndarray) else a
                            for a in np_args)
            t_np = time_kernel(kernels.NUMPY_BACKEND[name], np_args, args.reps)
            t_nb = time_kernel(kernels.NUMBA_BACKEND[name], nb_args, args.reps)
            print(f"{name:<22}{n:>10}{t_np * 1e6:>14.2f}{t_nb * 1e6:>14.2f}"
                  f"{t_np / t_nb:>10.2f}x")


if __name__ == "__main__":
    main()
