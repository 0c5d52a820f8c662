"""Print the per-iteration history of a run on the two-season world."""

import argparse

from solarmesh import moea, synthetic
from solarmesh.geodata import generate_candidate_sites
from solarmesh.moea import MoeaParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sdr", type=int, default=10)
    ap.add_argument("--imax", type=int, default=60)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    world = synthetic.seasonal_world()
    candidates = generate_candidate_sites(world, 0.5, 1.0)
    params = MoeaParams(pop_size=16, imax=args.imax, sdr=args.sdr, n_max=3, seed=args.seed)
    result = moea.run(world, candidates, params)
    print("iteration month best_deficit best_uncovered archive")
    for row in result.history:
        print(f"{row.iteration:9d} {row.month:5d} {row.best_deficit!s:>12} {row.best_uncovered!s:>14} {row.archive_size:7d}")
    np_ = result.np
    print(f"NP {';'.join(map(str, np_.placement))} worst month {np_.month}: {np_.objectives}")


if __name__ == "__main__":
    main()
