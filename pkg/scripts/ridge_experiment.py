"""Hypervolume of the optimizer's archive against the exact front on the ridge world.

    python3 scripts/ridge_experiment.py --seeds 10 --imax 600
"""

import argparse
import time

import numpy as np

from solarmesh import moea, oracle, synthetic
from solarmesh.geodata import generate_candidate_sites
from solarmesh.moea import MoeaParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--imax", type=int, default=600)
    ap.add_argument("--pop-size", type=int, default=32)
    ap.add_argument("--n-max", type=int, default=3)
    args = ap.parse_args()

    world = synthetic.ridge_world()
    candidates = generate_candidate_sites(world, 0.5, 1.0)
    front = oracle.exhaustive_pareto(world, candidates, args.n_max, 0)
    objs = sorted({p.objectives for p in front})
    ref = tuple(1.1 * v for v in np.max(np.array(objs, dtype=float), axis=0))
    target = oracle.hypervolume(objs, ref)
    print(f"{len(candidates)} candidates, exact front {objs}, HV {target:.1f}")

    for seed in range(args.seeds):
        t0 = time.perf_counter()
        params = MoeaParams(pop_size=args.pop_size, imax=args.imax, n_max=args.n_max, seed=seed)
        result = moea.run(world, candidates, params)
        pts = [m.objectives for m in result.archive if all(o < r for o, r in zip(m.objectives, ref))]
        hv = oracle.hypervolume(pts, ref)
        print(f"seed {seed}: HV ratio {hv / target:.3f}, archive {len(result.archive)}, "
              f"NP {result.np.objectives}, {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
