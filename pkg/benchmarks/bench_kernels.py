#!/usr/bin/env python3
"""Benchmark the pair-sum kernels: compiled extension vs numpy fallback.

Times one modular evaluation and one gradient evaluation per backend over a
range of grid sizes (the pair sum is O(N^2)). Two instance families are
timed: ``quadratic`` (both exponents identically 2, the multiply-only fast
path) and ``generic`` (spatially varying exponents, elementwise powers).
``--partitions`` adds an OpenMP-parallel column for the compiled backend.

Run from the repo root:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --sizes 64 256 1024 --repeats 5 --partitions 2
"""

import argparse
import time

import numpy as np

from fracap._core import available_backends
from fracap.exponents import build_node_exponent, build_pair_exponent
from fracap.grids import Grid
from fracap.modular import ModularParams


def build_instance(n: int, family: str):
    grid = Grid(1, (n,), (0.0,), 1.0 / (n - 1))
    if family == "quadratic":
        q_spec = p_spec = {"kind": "constant", "value": 2.0}
    else:
        q_spec = {"kind": "ramp", "lo": 1.5, "hi": 2.5}
        p_spec = {"kind": "diagonal-invariant", "base": 2.0, "slope": 1.0, "clip": 1.0}
    params = ModularParams(
        grid, build_node_exponent(grid, q_spec), build_pair_exponent(grid, p_spec), 0.5
    )
    rng = np.random.default_rng(0)
    return rng.uniform(-2.0, 2.0, grid.size), params.kernel


def time_call(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512, 1024])
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--partitions", type=int, default=1, help="parallel row partitions")
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}; partitions={args.partitions}")
    columns = [(name, 1) for name in backends]
    if args.partitions > 1 and "cython" in backends:
        columns.append(("cython", args.partitions))
    header = f"{'family':>10s} {'nodes':>7s} {'op':>8s}"
    for name, parts in columns:
        label = name if parts == 1 else f"{name} x{parts}"
        header += f" {label:>13s}"
    header += f" {'best speedup':>13s}"
    print(header)

    for family in ("quadratic", "generic"):
        for n in args.sizes:
            u, kernel = build_instance(n, family)
            arrays = (kernel.qvals, kernel.cell, kernel.pmat, kernel.wmat)
            flags = (kernel.node_quadratic, kernel.pair_quadratic, kernel.pair_symmetric)
            for op in ("value", "gradient"):
                times = {}
                for name, parts in columns:
                    impl = backends[name]
                    if op == "value":
                        call = lambda: impl.modular_terms(u, *arrays, parts, *flags)
                    else:
                        call = lambda: impl.modular_gradient(
                            u, *arrays, parts, *flags, kernel.pmat_t, kernel.wmat_t
                        )
                    call()  # warm up
                    times[(name, parts)] = time_call(call, args.repeats)
                line = f"{family:>10s} {n:7d} {op:>8s}"
                for key in columns:
                    line += f" {times[key] * 1e3:11.3f}ms"
                base = times[("python", 1)]
                best = min(t for key, t in times.items() if key[0] == "cython") if any(
                    k[0] == "cython" for k in times
                ) else base
                line += f" {base / best:12.1f}x"
                print(line)


if __name__ == "__main__":
    main()
