"""Time the compiled and numpy Euler-Maruyama loops on the same noise.

    python benchmarks/bench_em.py [--paths 64] [--steps 10000] [--repeat 3]

Reports best-of-``repeat`` wall time per backend and the max abs
difference between their outputs.
"""

import argparse
import math
import time

import numpy as np

from stochabound.kernel import KernelSpec
from stochabound.sde import InitialState, SystemSpec, available_backends, integrate_batch

CASES = {
    "cosine n=1": SystemSpec([[-1.0]], KernelSpec.cosine_scalar(0.25, 4.0), InitialState([0.0]), 10.0, 1e-3),
    "linear n=4 m=2": SystemSpec(
        -np.eye(4) + 0.1 * np.triu(np.ones((4, 4)), 1),
        KernelSpec.linear_matrix(np.full((4, 4, 2), 0.02), G0=np.full((4, 2), 0.1)),
        InitialState(np.zeros(4)),
        10.0,
        1e-3,
    ),
}


def best_time(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=64)
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"backends: {available_backends()}  paths={args.paths} steps={args.steps}")
    for name, spec in CASES.items():
        x0 = rng.normal(size=(args.paths, spec.n))
        dW = math.sqrt(spec.dt) * rng.normal(size=(args.paths, args.steps, spec.m))
        results = {}
        for backend in available_backends():
            secs, states = best_time(lambda: integrate_batch(spec, x0, dW, backend), args.repeat)
            results[backend] = (secs, states)
            rate = args.paths * args.steps / secs / 1e6
            print(f"{name:16s} {backend:7s} {secs * 1e3:9.1f} ms  {rate:7.2f} Msteps/s")
        if len(results) == 2:
            diff = np.max(np.abs(results["cython"][1] - results["python"][1]))
            print(f"{name:16s} speedup {results['python'][0] / results['cython'][0]:.1f}x  max|diff| {diff:.1e}")


if __name__ == "__main__":
    main()
