"""Times the sign-permutation kernel on both backends.

Both implement the same counter-indexed contract, so the counts must agree
bit for bit; this script checks that while it times them. Run from the repo
root after an editable install:

    python3 benchmarks/bench_permutation.py [--n-permutations N]
"""

import argparse
import time

import numpy as np

from groundedness._kernels import permute_np
from groundedness._rng import derive_key

try:
    from groundedness._kernels import permute_cy
except ImportError:
    permute_cy = None


def bench(fn, x, observed, n_perm, subsample, key, repeats=3):
    best = float("inf")
    count = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        count = fn(x, observed, n_perm, subsample, key)
        best = min(best, time.perf_counter() - t0)
    return count, best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-permutations", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    cases = [
        ("signs only, n=200", 200, 500),      # k == n: no index shuffling
        ("signs only, n=2000", 2000, 2000),
        ("subsampled, n=5000, k=500", 5000, 500),
        ("subsampled, n=50000, k=500", 50_000, 500),
    ]

    print(f"{'case':32} {'backend':8} {'count':>10} {'time':>9} {'perms/s':>12}")
    for label, n, subsample in cases:
        x = rng.standard_normal(n)
        observed = float(x.mean())
        key = derive_key(args.seed, "bench", label)
        counts = {}
        for name, mod in (("numpy", permute_np), ("cython", permute_cy)):
            if mod is None:
                print(f"{label:32} {name:8} {'(not built)':>10}")
                continue
            count, secs = bench(mod.count_extreme, x, observed,
                                args.n_permutations, subsample, key)
            counts[name] = count
            print(f"{label:32} {name:8} {count:10d} {secs:8.3f}s "
                  f"{args.n_permutations / secs:11.0f}")
        if len(counts) == 2 and counts["numpy"] != counts["cython"]:
            raise SystemExit(f"BACKEND MISMATCH on {label!r}: {counts}")
    print("backends agree on every case" if permute_cy is not None
          else "cython backend not built; timed numpy only")


if __name__ == "__main__":
    main()
