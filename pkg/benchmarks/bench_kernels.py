"""Time the pure-Python and compiled kernels on identical inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--n-exhaustive 7] [--n-local 200]
"""

import argparse
import time

import numpy as np

from csbm import kernels


def random_adj(n, p, rng):
    u = np.triu(rng.random((n, n)) < p, 1)
    return (u | u.T).astype(np.uint8)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--n-exhaustive", type=int, default=7)
    ap.add_argument("--n-local", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; run `pip install -e . --no-build-isolation` first")
    rng = np.random.default_rng(args.seed)
    A, B = random_adj(args.n_exhaustive, 0.4, rng), random_adj(args.n_exhaustive, 0.4, rng)
    same = (rng.choice([1, -1], size=args.n_exhaustive)[:, None] ==
            rng.choice([1, -1], size=args.n_exhaustive)[None, :]).astype(np.uint8)
    same = np.triu(same, 1) | np.triu(same, 1).T
    L1, L2 = random_adj(args.n_local, 0.1, rng), random_adj(args.n_local, 0.1, rng)
    start = rng.permutation(args.n_local).astype(np.int64)

    cases = {
        f"exhaustive_argmax n={args.n_exhaustive}": lambda be: be.exhaustive_argmax(A, B)[1:],
        f"enumerate_map_stats n={args.n_exhaustive}":
            lambda be: int(be.enumerate_map_stats(A, B, same)[1].sum()),
        f"local_search n={args.n_local}": lambda be: be.local_search(L1, L2, start.copy(), 10**9),
    }
    print(f"{'kernel':<32}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, fn in cases.items():
        row, results = [], []
        for name, be in backends.items():
            t, out = best_of(lambda: fn(be), args.repeat)
            row.append(t)
            results.append(out)
        agree = all(r == results[0] for r in results)
        speed = f"{row[0] / row[-1]:>9.1f}x" if len(row) > 1 else f"{'-':>10}"
        print(f"{label:<32}" + "".join(f"{t * 1000:>10.1f}ms" for t in row) + speed
              + ("" if agree else "  (outputs differ!)"))


if __name__ == "__main__":
    main()
