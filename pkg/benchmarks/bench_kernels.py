#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the two hot kernels (single-source shortest paths, self-avoiding
walk) on random geometric graphs of several sizes, then an end-to-end
dataset sampling run through whichever backend each module object wires
in. Usage:

    python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from navprior import _kernels_py
from navprior.dataset import LengthDistribution
from navprior.envgraph import SynthConfig, generate_synthetic_env
from navprior.samplers import SamplerConfig, sample_dataset

try:
    from navprior import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def graph_for(n_nodes, seed=0):
    area = 2.0 * n_nodes  # keeps density roughly constant as n grows
    side = float(np.sqrt(area))
    cfg = SynthConfig(n_nodes=n_nodes, radius=2.8, extent=(side, side, 2.5),
                      max_attempts=30)
    return generate_synthetic_env(cfg, np.random.default_rng(seed), f"bench{n_nodes}")


def bench_dijkstra(backend, g, repeats):
    indptr, indices, weights = g._indptr, g._indices, g._weights

    def run():
        for src in range(g.n_nodes):
            backend.dijkstra(indptr, indices, weights, src)

    return timeit(run, repeats) / g.n_nodes


def bench_walk(backend, g, repeats):
    indptr, indices = g._indptr, g._indices
    rng = np.random.default_rng(1)
    starts = rng.integers(g.n_nodes, size=2000)
    uniforms = rng.random((2000, 6))

    def run():
        for i in range(2000):
            backend.self_avoiding_walk(indptr, indices, int(starts[i]), 6,
                                       uniforms[i])

    return timeit(run, repeats) / 2000


def bench_end_to_end(backend_name, repeats):
    import navprior.kernels as kernels

    module = _kernels_cy if backend_name == "cython" else _kernels_py
    saved = (kernels.dijkstra, kernels.self_avoiding_walk)
    kernels.dijkstra, kernels.self_avoiding_walk = module.dijkstra, module.self_avoiding_walk
    try:
        graphs = [graph_for(70, seed=s) for s in range(4)]
        dist = LengthDistribution({4: 0.5, 5: 0.5})

        def run():
            for g in graphs:  # drop memoized shortest-path trees
                g._sssp_cache.clear()
            sample_dataset(graphs, 100, SamplerConfig(strategy="shortest"), seed=1)
            sample_dataset(graphs, 100, SamplerConfig(strategy="random_walk"),
                           seed=1, dist=dist)

        return timeit(run, repeats)
    finally:
        kernels.dijkstra, kernels.self_avoiding_walk = saved


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if _kernels_cy is None:
        print("compiled extension not built; showing pure-Python numbers only")
    backends = [("pure-python", _kernels_py)]
    if _kernels_cy is not None:
        backends.append(("cython", _kernels_cy))

    print(f"{'kernel':<28}{'graph':<10}" + "".join(f"{name:>14}" for name, _ in backends)
          + ("" if _kernels_cy is None else f"{'speedup':>10}"))
    for n_nodes in (70, 300, 1000):
        g = graph_for(n_nodes)
        rows = [("dijkstra (per source)", bench_dijkstra),
                ("self-avoiding walk (each)", bench_walk)]
        for label, bench in rows:
            times = [bench(module, g, args.repeats) for _, module in backends]
            line = f"{label:<28}{g.n_nodes:<10}" + "".join(f"{t * 1e6:>12.1f}us" for t in times)
            if len(times) == 2:
                line += f"{times[0] / times[1]:>9.1f}x"
            print(line)

    print()
    times = [bench_end_to_end(name, args.repeats) for name, _ in backends]
    line = f"{'sample_dataset (800 paths)':<38}" + "".join(f"{t:>12.3f}s " for t in times)
    if len(times) == 2:
        line += f"{times[0] / times[1]:>8.1f}x"
    print(line)


if __name__ == "__main__":
    main()
