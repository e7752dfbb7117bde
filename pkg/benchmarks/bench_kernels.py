"""Time the compiled kernels against their pure-Python twins.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``. Prints one row
per workload with the best-of-N time for each backend and the speedup.
Both backends must produce identical results; the script checks that too.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from specround.graph import Graph
from specround.instances import random_isotropic_instance
from specround.kernels import available_backends, get_backend
from specround.rounding import exact_round
from specround.sparsify import greedy_additive_sparsify


def _workloads():
    rng = np.random.default_rng(0)
    mu = np.sort(rng.uniform(0, 50, 200))
    mu -= mu[0]
    m = 20_000
    ah = rng.uniform(0, 0.05, m)
    x = rng.uniform(0, 1, m)
    in_s = (rng.random(m) < 0.4).astype(np.uint8)
    rem, add = np.empty(m), np.empty(m)
    masses = rng.uniform(0, 1, m) / m
    inst = random_isotropic_instance(10, 150, seed=1000, x_range=(0.05, 0.6))
    G = Graph.complete(20)

    def shift(name):
        k = get_backend(name)
        return lambda: k.solve_shift(mu, 1e-12, 200)

    def swap_masses(name):
        k = get_backend(name)
        return lambda: k.swap_masses(ah, x, in_s, 3.0, 1e-4, rem, add)

    def inverse_cdf(name):
        k = get_backend(name)
        return lambda: k.inverse_cdf(masses, 0.73)

    def full_round(name):
        return lambda: exact_round(inst, 0.1, 3, backend=name, record_history=False).selected

    def sparsify(name):
        return lambda: greedy_additive_sparsify(G, 0.5, 0.1, backend=name, check_blocks=False).edges

    return [
        ("solve_shift n=200", shift, 200),
        ("swap_masses m=20000", swap_masses, 50),
        ("inverse_cdf m=20000", inverse_cdf, 200),
        ("exact_round n=10 m=150", full_round, 3),
        ("sparsify K_20", sparsify, 3),
    ]


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the Python backend is available")
    print(f"{'workload':28s}" + "".join(f"{b:>14s}" for b in backends) + f"{'speedup':>10s}")
    for label, make, number in _workloads():
        times, results = [], []
        for b in backends:
            fn = make(b)
            results.append(fn())
            times.append(min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number)
        same = all(_same(results[0], r) for r in results[1:])
        row = f"{label:28s}" + "".join(f"{t * 1e6:12.1f}us" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:9.1f}x"
        if not same:
            row += "  MISMATCH"
        print(row)


def _same(a, b) -> bool:
    return repr(a) == repr(b)


if __name__ == "__main__":
    main()
