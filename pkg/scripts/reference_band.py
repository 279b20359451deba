"""Long reference run for the scalar cosine-kernel example started at 0.

Establishes the band that the desk-scale (100 paths, dt = 1e-3) tail
estimate of E||X|| is tested against.  Takes a few minutes.

    python scripts/reference_band.py [--paths 10000] [--dt 1e-4]
"""

import argparse
import json
import time

from stochabound.cli import paper_system
from stochabound.montecarlo import estimate_limit, run_ensemble


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--T", type=float, default=10.0)
    ap.add_argument("--seed", type=int, default=20240101)
    args = ap.parse_args()

    spec = paper_system(0.0, T=args.T, dt=args.dt)
    t0 = time.perf_counter()
    res = run_ensemble(spec, args.paths, args.seed)
    mean, sem = estimate_limit(res, 0.2)
    print(json.dumps({
        "paths": args.paths,
        "dt": args.dt,
        "T": args.T,
        "seed": args.seed,
        "tail_mean": mean,
        "tail_sem": sem,
        "final_mean": float(res.mean_norm[-1]),
        "final_sem": float(res.sem_norm[-1]),
        "seconds": time.perf_counter() - t0,
    }, indent=2))


if __name__ == "__main__":
    main()
