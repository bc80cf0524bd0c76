#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy reference backend.

Times the similarity-propagation sweep kernel and the overlap counter on
synthetic workloads shaped like real alignment runs (sparse graphs, k-NN
sized prior support). Usage:

    python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from rigidalign import GenConfig, Matching, PreferentialAttachment, generate
from rigidalign._kernels import _reference
from rigidalign.netalign import _support_arrays, _sym_normalized
from rigidalign.prior import prior_knn

try:
    from rigidalign._kernels import _speedups
except ImportError:
    _speedups = None


def workload(grid_extent, k, seed=0):
    g = generate(GenConfig(grid_extent=grid_extent, dim=3, occupancy_p=0.5,
                           model=PreferentialAttachment(m=4, n0=5), seed=seed))
    l = prior_knn(g.coords, g.coords + 0.01, k)
    a = _sym_normalized(g.adjacency())
    lp, lc, vals = _support_arrays(l)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(g.n)
    matching = Matching(np.column_stack([np.arange(g.n), perm]))
    return g, a, (lp, lc, vals), matching


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_triple_product(backend, g, a, support, repeats):
    lp, lc, vals = support
    fn = lambda: backend.sampled_triple_product(*a, *a, lp, lc, vals, g.n, g.n)
    return best_of(fn, repeats)


def bench_overlap(backend, g, matching, repeats):
    map_ab = matching.to_map(g.n)
    keys = g.edge_keys()
    fn = lambda: backend.count_mapped_edges(g.edges, map_ab, keys, g.n)
    return best_of(fn, repeats)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if _speedups is None:
        print("compiled extension not available; only the reference backend runs")
    backends = [("python", _reference)] + ([("cython", _speedups)] if _speedups else [])

    print(f"{'kernel':<24}{'n':>6}{'nnz':>8}" +
          "".join(f"{name:>12}" for name, _ in backends) +
          ("{:>10}".format("speedup") if _speedups else ""))
    for extent, k in ((8, 10), (10, 10), (13, 20)):
        g, a, support, matching = workload(extent, k)
        row = [bench_triple_product(impl, g, a, support, args.repeats)
               for _, impl in backends]
        line = f"{'sampled_triple_product':<24}{g.n:>6}{support[1].size:>8}"
        line += "".join(f"{t * 1e3:>10.2f}ms" for t in row)
        if _speedups:
            line += f"{row[0] / row[-1]:>9.1f}x"
        print(line)
    for extent in (10, 16, 20):
        g, a, support, matching = workload(extent, 10)
        row = [bench_overlap(impl, g, matching, args.repeats) for _, impl in backends]
        line = f"{'count_mapped_edges':<24}{g.n:>6}{g.num_edges:>8}"
        line += "".join(f"{t * 1e6:>10.1f}us" for t in row)
        if _speedups:
            line += f"{row[0] / row[-1]:>9.1f}x"
        print(line)

    # sanity: identical results across backends on the last workload
    if _speedups:
        lp, lc, vals = support
        ref = _reference.sampled_triple_product(*a, *a, lp, lc, vals, g.n, g.n)
        fast = _speedups.sampled_triple_product(*a, *a, lp, lc, vals, g.n, g.n)
        assert np.allclose(ref, fast, rtol=1e-12)
        print("backend outputs agree (rtol 1e-12)")


if __name__ == "__main__":
    main()
