"""Terrain-aware reachability: sight lines, household coverage, mesh backhaul."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from solarmesh.geodata import CellIndex, World, world_cache


@dataclass(frozen=True)
class RadioParams:
    r_access: float = 250.0  # node -> household, meters
    r_backhaul: float = 400.0  # node <-> node and node <-> gateway, meters
    h_ant: float = 5.0
    clearance: float = 0.0

    def __post_init__(self):
        errors = []
        if not self.r_access > 0:
            errors.append("r_access must be > 0")
        if not self.r_backhaul > 0:
            errors.append("r_backhaul must be > 0")
        if not self.h_ant >= 0:
            errors.append("h_ant must be >= 0")
        if not self.clearance >= 0:
            errors.append("clearance must be >= 0")
        if errors:
            raise ValueError("; ".join(errors))


def grid_line(a: tuple[int, int], b: tuple[int, int]) -> list[tuple[CellIndex, float]]:
    """Interior cells of the 8-connected line between two cell centers.

    Each cell comes with its parametric position t in (0, 1) measured from
    ``min(a, b)``. The traversal always starts at the smaller endpoint so the
    result is the same set of cells for (a, b) and (b, a).
    """
    lo, hi = (tuple(a), tuple(b)) if tuple(a) <= tuple(b) else (tuple(b), tuple(a))
    r0, c0 = lo
    r1, c1 = hi
    dr, dc = abs(r1 - r0), abs(c1 - c0)
    sr = 1 if r1 >= r0 else -1
    sc = 1 if c1 >= c0 else -1
    n = max(dr, dc)
    out = []
    r, c = r0, c0
    if dc >= dr:
        err = 2 * dr - dc
        for step in range(1, n):
            c += sc
            if err > 0:
                r += sr
                err -= 2 * dc
            err += 2 * dr
            out.append((CellIndex(r, c), step / n))
    else:
        err = 2 * dc - dr
        for step in range(1, n):
            r += sr
            if err > 0:
                c += sc
                err -= 2 * dr
            err += 2 * dc
            out.append((CellIndex(r, c), step / n))
    return out


def _check_cell(world: World, cell) -> None:
    if not world.dem.in_bounds(cell):
        raise IndexError(f"cell {tuple(cell)} out of bounds")


def line_of_sight(world: World, a: tuple[int, int], b: tuple[int, int]) -> bool:
    """True if no interior cell's terrain plus clearance rises above the sight line.

    Both ends sit ``h_ant`` above their own terrain. Interior nodata cells
    never block.
    """
    _check_cell(world, a)
    _check_cell(world, b)
    if tuple(a) == tuple(b):
        return True
    lo, hi = (a, b) if tuple(a) <= tuple(b) else (b, a)
    z = world.dem.values
    nodata = world.dem.nodata_mask
    h = world.radio.h_ant
    z_lo = z[lo[0], lo[1]] + h
    z_hi = z[hi[0], hi[1]] + h
    clearance = world.radio.clearance
    for cell, t in grid_line(lo, hi):
        if nodata[cell]:
            continue
        if z[cell] + clearance > z_lo + t * (z_hi - z_lo):
            return False
    return True


def cell_distance(world: World, a: tuple[int, int], b: tuple[int, int]) -> float:
    """Euclidean distance between cell centers, meters."""
    return world.cellsize * math.hypot(a[0] - b[0], a[1] - b[1])


def _demand_cells(world: World):
    cache = world_cache(world, "demand")
    if not cache:
        d = world.demand.values
        positive = world.demand.valid_mask & (d > 0)
        rows, cols = np.nonzero(positive)
        cache["rows"] = rows
        cache["cols"] = cols
        cache["weights"] = d[rows, cols].astype(np.float64)
        cache["coverable"] = world.dem.valid_mask[rows, cols]
    return cache


def demand_cells(world: World) -> tuple[np.ndarray, np.ndarray]:
    """(rows, cols) of the positive-demand cells in raster order."""
    dc = _demand_cells(world)
    return dc["rows"], dc["cols"]


def demand_weights(world: World) -> np.ndarray:
    """Positive demand values in raster order."""
    return _demand_cells(world)["weights"]


def coverage_mask(world: World, node: tuple[int, int]) -> np.ndarray:
    """Boolean vector over the positive-demand cells (raster order) served by ``node``."""
    _check_cell(world, node)
    cache = world_cache(world, "coverage_mask")
    node = CellIndex(*node)
    mask = cache.get(node)
    if mask is None:
        dc = _demand_cells(world)
        rows, cols = dc["rows"], dc["cols"]
        dist = world.cellsize * np.hypot(rows - node.row, cols - node.col)
        mask = np.zeros(rows.size, dtype=bool)
        if not world.dem.is_nodata(node):
            near = np.nonzero((dist <= world.radio.r_access) & dc["coverable"])[0]
            for i in near:
                mask[i] = line_of_sight(world, node, (int(rows[i]), int(cols[i])))
        mask.flags.writeable = False
        cache[node] = mask
    return mask


def covered_mask(world: World, placement: Iterable[tuple[int, int]]) -> np.ndarray:
    dc = _demand_cells(world)
    covered = np.zeros(dc["rows"].size, dtype=bool)
    for node in placement:
        covered |= coverage_mask(world, node)
    return covered


def coverage(world: World, placement: Iterable[tuple[int, int]]) -> tuple[float, float]:
    """(covered_demand, uncovered_demand) for the household weights in the demand raster.

    Both sums are exactly rounded, so they do not depend on summation order.
    """
    covered = covered_mask(world, placement)
    w = demand_weights(world)
    return math.fsum(w[covered]), math.fsum(w[~covered])


def link(world: World, u: tuple[int, int], v: tuple[int, int]) -> bool:
    """Backhaul link: within r_backhaul and in line of sight."""
    u, v = CellIndex(*u), CellIndex(*v)
    if u == v:
        return True
    key = (u, v) if u < v else (v, u)
    cache = world_cache(world, "link")
    ok = cache.get(key)
    if ok is None:
        ok = (
            cell_distance(world, u, v) <= world.radio.r_backhaul
            and line_of_sight(world, u, v)
        )
        cache[key] = ok
    return ok


def reachable_from_gateway(world: World, placement: Sequence[tuple[int, int]]) -> list[bool]:
    nodes = [CellIndex(*c) for c in placement]
    for n in nodes:
        _check_cell(world, n)
    seen = [False] * len(nodes)
    queue = deque([world.gateway])
    while queue:
        u = queue.popleft()
        for i, n in enumerate(nodes):
            if not seen[i] and link(world, u, n):
                seen[i] = True
                queue.append(n)
    return seen


def backhaul_violation(world: World, placement: Sequence[tuple[int, int]]) -> int:
    """Number of placement nodes with no mesh path to the gateway."""
    return sum(not r for r in reachable_from_gateway(world, placement))
