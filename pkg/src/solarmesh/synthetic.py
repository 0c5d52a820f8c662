"""Small hand-built worlds used by the demo data, experiment scripts and tests."""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from solarmesh.energy import EnergyParams
from solarmesh.geodata import GridRaster, World, load_world, write_ascii_grid
from solarmesh.radio import RadioParams

NODATA = -9999.0


def raster(values, cellsize: float = 100.0, xll: float = 0.0, yll: float = 0.0,
           nodata: float = NODATA) -> GridRaster:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    nrows, ncols = v.shape
    return GridRaster(ncols, nrows, xll, yll, cellsize, nodata, v)


def build_world(dem, demand, sem_layers: Sequence, gateway, radio: RadioParams | None = None,
                energy: EnergyParams | None = None, cellsize: float = 100.0) -> World:
    return load_world(
        raster(dem, cellsize),
        raster(demand, cellsize),
        [raster(s, cellsize) for s in sem_layers],
        gateway,
        radio or RadioParams(),
        energy or EnergyParams(),
    )


def demo_world() -> World:
    """3x3 hamlet: one node in the middle serves every house from full sun."""
    dem = [[12, 11, 10], [11, 10, 9], [10, 9, 8]]
    demand = [[3, 0, 2], [1, 4, 0], [2, 0, 3]]
    sem = [[4.5, 5.0, 5.0], [4.0, 5.0, 4.8], [3.5, 4.2, 4.6]]
    return build_world(dem, demand, [sem], (0, 0),
                       RadioParams(r_access=150.0, r_backhaul=300.0, h_ant=5.0))


def cluster_world() -> World:
    """8x8 flat plain, uniform sun, four hamlets, gateway in the north-west corner."""
    demand = np.zeros((8, 8))
    demand[1:3, 1:3] = 2.0     # next to the gateway
    demand[1:3, 5:7] = 3.0
    demand[5:7, 1:3] = 1.0
    demand[5:7, 5:7] = 4.0
    demand[4, 4] = 1.0
    return build_world(np.zeros((8, 8)), demand, [np.full((8, 8), 5.0)], (0, 0),
                       RadioParams(r_access=150.0, r_backhaul=450.0, h_ant=3.0))


def ridge_world() -> World:
    """12x12 valley pair split by a north-south ridge with a saddle.

    The east valley sits in the ridge's shadow: insolation recovers with
    distance from the crest and is better behind the low saddle, so serving
    eastern houses from inside the valley costs energy.
    """
    n = 12
    rows, cols = np.mgrid[0:n, 0:n]
    saddle = (rows >= 5) & (rows <= 6)
    crest = np.where(saddle, 25.0, 60.0)
    dem = crest * np.clip(1.0 - np.abs(cols - 5.5) / 3.0, 0.0, None) + 2.0 * rows / n

    sem = np.full((n, n), 5.2)
    east = cols >= 7
    shade = 1.0 + 0.45 * (cols - 7) + np.where(saddle, 1.2, 0.0) + 0.1 * (rows % 3)
    sem = np.where(east, np.minimum(shade, 5.2), sem)
    sem = np.round(sem, 2)

    demand = np.zeros((n, n))
    demand[2:5, 1:4] = 2.0    # west village
    demand[3, 2] = 4.0
    demand[8, 2] = 1.0
    demand[7:10, 8:11] = 3.0  # east village
    demand[8, 9] = 5.0
    demand[2, 9] = 2.0
    demand[3, 10] = 1.0
    demand[10, 5] = 1.0
    return build_world(dem, demand, [sem], (1, 1),
                       RadioParams(r_access=250.0, r_backhaul=450.0, h_ant=5.0))


def seasonal_world() -> World:
    """6x6 flat world with a sunny and a dim uniform SEM layer."""
    demand = np.zeros((6, 6))
    demand[1, 1] = 2.0
    demand[4, 4] = 3.0
    demand[2, 4] = 1.0
    return build_world(np.zeros((6, 6)), demand,
                       [np.full((6, 6), 5.0), np.full((6, 6), 1.0)], (0, 0),
                       RadioParams(r_access=200.0, r_backhaul=400.0, h_ant=3.0))


def write_world(world: World, directory, name: str = "config.json", **overrides) -> Path:
    """Write a world as ESRI ASCII grids plus a ``plan`` config; returns the config path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_ascii_grid(directory / "dem.asc", world.dem)
    write_ascii_grid(directory / "demand.asc", world.demand)
    sem_names = []
    for i, layer in enumerate(world.sem_stack):
        sem_names.append(f"sem_{i + 1:02d}.asc")
        write_ascii_grid(directory / sem_names[-1], layer)
    config = {
        "dem": "dem.asc",
        "demand": "demand.asc",
        "sem_layers": sem_names,
        "gateway": list(world.gateway),
        **asdict(world.radio),
        **asdict(world.energy),
    }
    config.update(overrides)
    path = directory / name
    path.write_text(json.dumps(config, indent=2) + "\n")
    return path
