"""Time the compiled coalescent core against the numpy fallback.

Both backends receive identical random inputs, so the timings compare the
same work. Run with ``python benchmarks/bench_kernels.py [--reps R] [--n N]``.
"""

import argparse
import timeit

import numpy as np

from abclab import _pykernels

try:
    from abclab import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def make_inputs(n, reps, theta0, seed=0):
    rng = np.random.default_rng(seed)
    beta = rng.uniform(0, 100, reps)
    expo = rng.standard_exponential((reps, n - 1))
    pick = rng.random((reps, n - 1, 2))
    parent, time, leaves = _pykernels.build_genealogies(n, beta, expo, pick)
    total = _pykernels.branch_lengths(parent, time).sum(axis=1)
    n_mut = rng.poisson(theta0 / 2.0 * total)
    pos = rng.random(int(n_mut.sum()))
    return (beta, expo, pick), (parent, time, leaves, n_mut, pos)


def bench(module, n, tree_args, sfs_args, repeat):
    t_tree = min(timeit.repeat(lambda: module.build_genealogies(n, *tree_args),
                               number=1, repeat=repeat))
    t_sfs = min(timeit.repeat(lambda: module.site_frequency_spectra(n, *sfs_args),
                              number=1, repeat=repeat))
    return t_tree, t_sfs


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=30, help="sample size")
    parser.add_argument("--reps", type=int, default=20_000, help="replicates per call")
    parser.add_argument("--theta0", type=float, default=100.0)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    tree_args, sfs_args = make_inputs(args.n, args.reps, args.theta0)
    print(f"n={args.n}, replicates={args.reps}, mutations={sfs_args[3].sum()}")
    print(f"{'backend':<8} {'genealogies (s)':>16} {'spectra (s)':>12} {'total (s)':>10}")
    rows = {"python": bench(_pykernels, args.n, tree_args, sfs_args, args.repeat)}
    if _ckernels is not None:
        rows["cython"] = bench(_ckernels, args.n, tree_args, sfs_args, args.repeat)
        same = np.array_equal(_pykernels.site_frequency_spectra(args.n, *sfs_args),
                              _ckernels.site_frequency_spectra(args.n, *sfs_args))
    for name, (a, b) in rows.items():
        print(f"{name:<8} {a:>16.4f} {b:>12.4f} {a + b:>10.4f}")
    if _ckernels is None:
        print("compiled extension not available; only the fallback was timed")
    else:
        speed = sum(rows["python"]) / sum(rows["cython"])
        print(f"speed-up {speed:.1f}x; identical spectra: {same}")


if __name__ == "__main__":
    main()
