"""Timing comparison: numpy kernels vs compiled kernels, plus one fusion run.

Usage:  python3 benchmarks/bench_backends.py [--repeats N]

Each kernel is timed over the best of N repeats after a warmup call (the
warmup also absorbs compilation time for the jitted variants).  Run with
OMICSFUSE_DISABLE_NUMBA=1 to confirm the package works without the
compiled paths; this script itself always times both variants directly.
"""

import argparse
import time

import numpy as np

from omicsfuse import backend
from omicsfuse.fusion import FusionConfig, fuse_affinities


def best_of(fn, args, repeats):
    fn(*args)  # warmup / compile
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--n", type=int, default=400, help="sample count")
    parser.add_argument("--p", type=int, default=120, help="feature count")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    x = rng.normal(size=(args.n, args.p))
    observed = rng.random((args.n, args.p)) > 0.1
    rows = rng.normal(size=(args.n, args.n))
    centroids = x[rng.choice(args.n, size=6, replace=False)]

    cases = [
        ("pairwise_sq_dists", backend.pairwise_sq_dists_numpy, (x,)),
        ("masked_pairwise_dists", backend.masked_pairwise_dists_numpy, (x, observed)),
        ("project_rows", backend.project_rows_numpy, (rows,)),
        ("lloyd", backend.lloyd_numpy, (x, centroids, 100, 1e-8)),
    ]
    jitted = {}
    if backend.HAVE_NUMBA:
        jitted = {
            "pairwise_sq_dists": backend.pairwise_sq_dists_jit,
            "masked_pairwise_dists": backend.masked_pairwise_dists_jit,
            "project_rows": backend.project_rows_jit,
            "lloyd": backend.lloyd_jit,
        }

    print(f"active backend: {backend.backend_name()}  "
          f"(n={args.n}, p={args.p}, best of {args.repeats})")
    header = f"{'kernel':<24}{'numpy':>12}{'numba':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, numpy_fn, call_args in cases:
        t_numpy = best_of(numpy_fn, call_args, args.repeats)
        if name in jitted:
            contig = tuple(
                np.ascontiguousarray(a) if isinstance(a, np.ndarray) else a
                for a in call_args
            )
            t_jit = best_of(jitted[name], contig, args.repeats)
            ratio = t_numpy / t_jit
            print(f"{name:<24}{t_numpy * 1e3:>10.2f}ms{t_jit * 1e3:>10.2f}ms"
                  f"{ratio:>9.2f}x")
        else:
            print(f"{name:<24}{t_numpy * 1e3:>10.2f}ms{'n/a':>12}{'':>10}")

    # one realistic composite workload: a single fused-network solve
    n = 150
    d = backend.pairwise_sq_dists_numpy(rng.normal(size=(n, 20)))
    affinities = [np.exp(-d / (m + 1.0)) for m in range(3)]
    for a in affinities:
        np.fill_diagonal(a, 0.0)
    config = FusionConfig(c=3, gamma=1.0, max_iter=30)
    t0 = time.perf_counter()
    state = fuse_affinities(affinities, config)
    t_fuse = time.perf_counter() - t0
    print(f"\nfuse_affinities (n={n}, 3 inputs, {len(state.objective_trace)} "
          f"iterations): {t_fuse * 1e3:.1f}ms")


if __name__ == "__main__":
    main()
