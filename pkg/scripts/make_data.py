"""Regenerate the worlds under data/ from solarmesh.synthetic."""

from pathlib import Path

from solarmesh import synthetic

ROOT = Path(__file__).resolve().parent.parent / "data"

WORLDS = {
    "demo": (synthetic.demo_world, dict(
        sem_threshold=3.0, max_slope=0.5, pop_size=24, imax=60, sdr=25, n_max=2, seed=42)),
    "cluster": (synthetic.cluster_world, dict(
        sem_threshold=1.0, max_slope=1.0, pop_size=24, imax=200, n_max=2, seed=42)),
    "ridge": (synthetic.ridge_world, dict(
        sem_threshold=0.5, max_slope=1.0, pop_size=32, imax=600, n_max=3, seed=42)),
    "seasonal": (synthetic.seasonal_world, dict(
        sem_threshold=0.5, max_slope=1.0, pop_size=16, imax=60, sdr=10, n_max=3, seed=7)),
}


def main():
    for name, (build, settings) in WORLDS.items():
        path = synthetic.write_world(build(), ROOT / name, output_dir="out", **settings)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
