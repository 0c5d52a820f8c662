"""Brute-force references: the exact Pareto front of a small instance and exact hypervolume.

``exhaustive_pareto`` shares the coverage, link and energy models with the
optimizer but none of its search or bookkeeping; objective values are
formed with exactly rounded sums so they compare equal to
:func:`solarmesh.moea.evaluate` bit for bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from solarmesh import energy, radio
from solarmesh.geodata import CandidateSet, World
from solarmesh.moea import Placement

ENUMERATION_LIMIT = 2_000_000
CHUNK = 100_000


class OracleGuardError(ValueError):
    def __init__(self, size: int, limit: int = ENUMERATION_LIMIT):
        self.size = size
        super().__init__(f"enumeration size {size} exceeds limit {limit}")


@dataclass(frozen=True)
class FrontPoint:
    objectives: tuple[float, float, int]
    placement: Placement


def enumeration_size(n_candidates: int, n_max: int) -> int:
    return sum(math.comb(n_candidates, k) for k in range(1, min(n_max, n_candidates) + 1))


def nondominated_mask(points: np.ndarray) -> np.ndarray:
    """Rows of ``points`` not strictly dominated by any other row (minimization)."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    keep = np.ones(n, dtype=bool)
    if n == 0:
        return keep
    step = max(1, 4_000_000 // max(n, 1))
    for s in range(0, n, step):
        block = pts[s:s + step, None, :]
        weak = np.all(pts[None, :, :] <= block, axis=2)
        strict = np.any(pts[None, :, :] < block, axis=2)
        keep[s:s + step] = ~np.any(weak & strict, axis=1)
    return keep


def _unique_fsum(keys: np.ndarray, term_fn) -> np.ndarray:
    """Evaluate an exact sum once per distinct row of ``keys``."""
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    sums = np.array([term_fn(row) for row in uniq], dtype=np.float64)
    return sums[inverse.reshape(-1)]


def exhaustive_pareto(world: World, candidates: CandidateSet, n_max: int,
                      month_index: int) -> list[FrontPoint]:
    """Every feasible nondominated placement with 1..n_max nodes."""
    n = len(candidates)
    size = enumeration_size(n, n_max)
    if size > ENUMERATION_LIMIT:
        raise OracleGuardError(size)
    if n == 0:
        return []
    cells = candidates.cells

    cover = np.array([radio.coverage_mask(world, c) for c in cells], dtype=bool)
    weights = radio.demand_weights(world)
    gw = np.array([radio.link(world, world.gateway, c) for c in cells], dtype=bool)
    links = np.array([[radio.link(world, a, b) for b in cells] for a in cells], dtype=bool)

    reports = energy.solar_evaluation(world, cells, month_index)
    cap = world.energy.battery_capacity
    shortfall = [max(0.0, -r.balance) for r in reports]
    penalty = [0.0 if r.soc_feasible else cap for r in reports]
    # candidates with identical (shortfall, penalty) are interchangeable for the deficit sum
    classes = {}
    energy_class = np.array(
        [classes.setdefault((shortfall[i], penalty[i]), len(classes)) for i in range(n)]
    )
    class_terms = {v: k for k, v in classes.items()}

    def deficit_of(class_row) -> float:
        terms = [class_terms[int(c)] for c in class_row]
        return math.fsum([t[0] for t in terms] + [t[1] for t in terms])

    def uncovered_of(packed_row) -> float:
        mask = np.unpackbits(packed_row, count=weights.size).astype(bool)
        return math.fsum(weights[~mask])

    survivors_obj = []
    survivors_combo = []
    for k in range(1, min(n_max, n) + 1):
        combos_iter = itertools.combinations(range(n), k)
        objs_k, combos_k = [], []
        while True:
            chunk = np.fromiter(
                itertools.chain.from_iterable(itertools.islice(combos_iter, CHUNK)),
                dtype=np.int64,
            ).reshape(-1, k)
            if chunk.size == 0:
                break
            reach = gw[chunk]
            for _ in range(k - 1):
                for i in range(k):
                    hop = reach & links[chunk, chunk[:, i:i + 1]]
                    reach[:, i] |= hop.any(axis=1)
            chunk = chunk[reach.all(axis=1)]
            if len(chunk) == 0:
                continue
            covered = np.logical_or.reduce(cover[chunk], axis=1)
            if weights.size:
                uncovered = _unique_fsum(np.packbits(covered, axis=1), uncovered_of)
            else:
                uncovered = np.zeros(len(chunk))
            deficit = _unique_fsum(np.sort(energy_class[chunk], axis=1), deficit_of)
            objs = np.column_stack([uncovered, deficit, np.full(len(chunk), k, dtype=np.float64)])
            # a point dominated inside its own size class is dominated overall
            uniq, inverse = np.unique(objs, axis=0, return_inverse=True)
            good = nondominated_mask(uniq)[inverse.reshape(-1)]
            objs_k.append(objs[good])
            combos_k.append(chunk[good])
        if objs_k:
            objs = np.concatenate(objs_k)
            uniq, inverse = np.unique(objs, axis=0, return_inverse=True)
            good = nondominated_mask(uniq)[inverse.reshape(-1)]
            survivors_obj.append(objs[good])
            survivors_combo.extend(tuple(int(i) for i in row) for row in np.concatenate(combos_k)[good])

    if not survivors_obj:
        return []
    objs = np.concatenate(survivors_obj)
    uniq, inverse = np.unique(objs, axis=0, return_inverse=True)
    good = nondominated_mask(uniq)[inverse.reshape(-1)]
    front = [
        FrontPoint(
            objectives=(float(o[0]), float(o[1]), int(o[2])),
            placement=tuple(cells[i] for i in combo),
        )
        for o, combo, g in zip(objs, survivors_combo, good)
        if g
    ]
    front.sort(key=lambda p: (p.objectives, p.placement))
    return front


def _hv2d(points: np.ndarray, ref: Sequence[float]) -> float:
    area = 0.0
    floor = ref[1]
    for x, y in sorted(map(tuple, points)):
        if y < floor:
            area += (ref[0] - x) * (floor - y)
            floor = y
    return area


def hypervolume(front: Sequence[Sequence[float]], ref: Sequence[float]) -> float:
    """Exact volume dominated by ``front`` and bounded by ``ref`` (3 objectives, minimized)."""
    pts = np.asarray(front, dtype=np.float64).reshape(-1, 3)
    ref = tuple(float(r) for r in ref)
    for p in pts:
        if not np.all(p < ref):
            raise ValueError(f"point {tuple(p)} does not dominate reference {ref}")
    if len(pts) == 0:
        return 0.0
    levels = np.unique(pts[:, 2])
    volume = 0.0
    for i, z in enumerate(levels):
        top = levels[i + 1] if i + 1 < len(levels) else ref[2]
        volume += _hv2d(pts[pts[:, 2] <= z, :2], ref[:2]) * (top - z)
    return volume
