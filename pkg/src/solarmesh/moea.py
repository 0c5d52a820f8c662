"""Constrained multi-objective evolutionary search over node placements.

Objectives, all minimized: uncovered household demand, energy deficit
(Wh/day) and node count. Backhaul connectivity is a constraint handled by
feasibility-first dominance. The generation loop evaluates at one SEM layer
at a time and advances to the next layer every ``sdr`` iterations.

Randomness comes from independent numpy streams keyed by
(seed, iteration, slot, operator tag); nothing depends on evaluation order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from solarmesh import energy, radio
from solarmesh.geodata import CandidateSet, CellIndex, World, world_cache

Placement = tuple[CellIndex, ...]
Objectives = tuple[float, float, int]

TAG_INIT = 0
TAG_VARY = 1
TAG_SECONDARY = 2


@dataclass(frozen=True)
class MoeaParams:
    pop_size: int = 32
    imax: int = 200
    sdr: int = 25
    n_max: int = 12
    seed: int = 42
    p_move: float = 0.5
    p_add: float = 0.15
    p_remove: float = 0.15
    move_radius: int = 3
    eo_top_fraction: float = 0.25
    ps_count: int = 8

    def __post_init__(self):
        errors = []
        if self.pop_size < 4 or self.pop_size % 2:
            errors.append("pop_size must be even and >= 4")
        if self.imax < 1:
            errors.append("imax must be >= 1")
        if self.sdr < 1:
            errors.append("sdr must be >= 1")
        if self.n_max < 1:
            errors.append("n_max must be >= 1")
        if not 0 <= self.seed < 2**64:
            errors.append("seed must be a 64-bit unsigned integer")
        for name in ("p_move", "p_add", "p_remove", "eo_top_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                errors.append(f"{name} must be in [0, 1]")
        if self.move_radius < 0:
            errors.append("move_radius must be >= 0")
        if self.ps_count < 0:
            errors.append("ps_count must be >= 0")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def n_top(self) -> int:
        return math.ceil(self.eo_top_fraction * self.pop_size)


@dataclass(frozen=True)
class Individual:
    placement: Placement
    objectives: Objectives
    violation: int
    reports: tuple[energy.NodeEnergyReport, ...]
    month: int = 0

    @property
    def uncovered(self) -> float:
        return self.objectives[0]

    @property
    def deficit(self) -> float:
        return self.objectives[1]

    @property
    def node_count(self) -> int:
        return self.objectives[2]

    @property
    def feasible(self) -> bool:
        return self.violation == 0


class Comparison(enum.Enum):
    A_BETTER = "a_better"
    B_BETTER = "b_better"
    NEITHER = "neither"


def make_placement(cells: Iterable[tuple[int, int]]) -> Placement:
    out = sorted(CellIndex(int(r), int(c)) for r, c in cells)
    for a, b in zip(out, out[1:]):
        if a == b:
            raise ValueError(f"duplicate cell {a}")
    return tuple(out)


def rng_stream(seed: int, iteration: int, slot: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, iteration, slot, tag])))


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    if len(a) != len(b):
        raise ValueError(f"arity mismatch: {len(a)} vs {len(b)}")
    strict = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            strict = True
    return strict


def constrained_compare(a: Individual, b: Individual) -> Comparison:
    if a.violation != b.violation:
        return Comparison.A_BETTER if a.violation < b.violation else Comparison.B_BETTER
    if a.violation == 0:
        if dominates(a.objectives, b.objectives):
            return Comparison.A_BETTER
        if dominates(b.objectives, a.objectives):
            return Comparison.B_BETTER
    return Comparison.NEITHER


def nondominated_sort(population: Sequence[Individual]) -> list[list[int]]:
    """Fronts of population indices under constrained dominance, best first."""
    n = len(population)
    beats: list[list[int]] = [[] for _ in range(n)]
    beaten_by = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            cmp = constrained_compare(population[i], population[j])
            if cmp is Comparison.A_BETTER:
                beats[i].append(j)
                beaten_by[j] += 1
            elif cmp is Comparison.B_BETTER:
                beats[j].append(i)
                beaten_by[i] += 1
    fronts = []
    current = [i for i in range(n) if beaten_by[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in beats[i]:
                beaten_by[j] -= 1
                if beaten_by[j] == 0:
                    nxt.append(j)
        current = sorted(nxt)
    return fronts


def crowding_distance(front: Sequence[Sequence[float]]) -> list[float]:
    n = len(front)
    if n <= 2:
        return [math.inf] * n
    dist = [0.0] * n
    for k in range(len(front[0])):
        order = sorted(range(n), key=lambda i: (front[i][k], i))
        lo, hi = front[order[0]][k], front[order[-1]][k]
        if hi == lo:
            continue
        dist[order[0]] = dist[order[-1]] = math.inf
        for pos in range(1, n - 1):
            i = order[pos]
            dist[i] += (front[order[pos + 1]][k] - front[order[pos - 1]][k]) / (hi - lo)
    return dist


def elite_key(ind: Individual):
    return (ind.deficit, ind.uncovered, ind.node_count, ind.placement)


def select_elite(individuals: Sequence[Individual], count: int) -> list[Individual]:
    return sorted(individuals, key=elite_key)[:count]


def _sampling_p(weights: np.ndarray) -> np.ndarray:
    return weights / weights.sum()


def initialize_population(world: World, candidates: CandidateSet, params: MoeaParams) -> list[Placement]:
    """Random placements biased toward sunnier candidate cells.

    Each slot draws from its own stream, so slot k is the same regardless of
    ``pop_size``.
    """
    if len(candidates) == 0:
        raise ValueError("empty candidate set")
    n = len(candidates)
    p = _sampling_p(np.asarray(candidates.weights))
    kmax = min(params.n_max, n)
    population = []
    for slot in range(params.pop_size):
        rng = rng_stream(params.seed, 0, slot, TAG_INIT)
        k = int(rng.integers(1, kmax + 1))
        picks = rng.choice(n, size=k, replace=False, p=p)
        population.append(make_placement(candidates.cells[i] for i in picks))
    return population


def evaluate(world: World, placement: Sequence[tuple[int, int]], month_index: int) -> Individual:
    placement = make_placement(placement)
    cache = world_cache(world, "individuals")
    key = (placement, month_index)
    ind = cache.get(key)
    if ind is None:
        _, uncovered = radio.coverage(world, placement)
        reports = tuple(energy.solar_evaluation(world, placement, month_index))
        deficit = energy.total_deficit(reports, world.energy.battery_capacity)
        ind = Individual(
            placement=placement,
            objectives=(uncovered, deficit, len(placement)),
            violation=radio.backhaul_violation(world, placement),
            reports=reports,
            month=month_index,
        )
        cache[key] = ind
    return ind


def mutate(placement: Placement, candidates: CandidateSet, params: MoeaParams,
           rng: np.random.Generator) -> Placement:
    cells = list(placement)
    coins = rng.random(3)
    if coins[0] < params.p_move and cells:
        i = int(rng.integers(len(cells)))
        near = candidates.neighbors(cells[i], params.move_radius)
        for _ in range(8):
            target = near[int(rng.integers(len(near)))]
            if target not in cells:
                cells[i] = target
                break
    if coins[1] < params.p_add and len(cells) < params.n_max:
        present = set(cells)
        absent = [j for j, c in enumerate(candidates.cells) if c not in present]
        if absent:
            w = np.asarray([candidates.weights[j] for j in absent])
            j = absent[int(rng.choice(len(absent), p=_sampling_p(w)))]
            cells.append(candidates.cells[j])
    if coins[2] < params.p_remove and len(cells) > 1:
        del cells[int(rng.integers(len(cells)))]
    return make_placement(cells)


def crossover(a: Placement, b: Placement, rng: np.random.Generator) -> Placement:
    """Child of random length between the parents' sizes, drawn from their union."""
    union = sorted(set(a) | set(b))
    lo, hi = sorted((len(a), len(b)))
    k = int(rng.integers(lo, hi + 1))
    picks = rng.choice(len(union), size=k, replace=False)
    return make_placement(union[i] for i in picks)


def energy_optimization(world: World, individual: Individual, month_index: int,
                        candidates: CandidateSet, params: MoeaParams) -> Individual:
    """One greedy pass relocating energy-deficient nodes to sunnier nearby cells.

    A move is kept only if total deficit drops and neither coverage nor
    connectivity gets worse.
    """
    current = evaluate(world, individual.placement, month_index)
    for node in individual.placement:
        rep = energy.cell_report(world, node, month_index)
        if rep.balance >= 0 and rep.soc_feasible:
            continue
        occupied = set(current.placement)
        options = [c for c in candidates.neighbors(node, params.move_radius) if c not in occupied]
        if not options:
            continue

        def preference(c):
            cheb = max(abs(c.row - node.row), abs(c.col - node.col))
            return (-energy.cell_report(world, c, month_index).balance, cheb, c)

        target = min(options, key=preference)
        trial = evaluate(
            world, [target if c == node else c for c in current.placement], month_index
        )
        if (
            trial.deficit < current.deficit
            and trial.uncovered <= current.uncovered
            and trial.violation <= current.violation
        ):
            current = trial
    return current


def generate_secondary(elite: Sequence[Individual], candidates: CandidateSet, params: MoeaParams,
                       rng: np.random.Generator) -> list[Placement]:
    if not elite:
        return []
    return [
        mutate(elite[i % len(elite)].placement, candidates, params, rng)
        for i in range(params.ps_count)
    ]


def dedupe(pool: Iterable[Individual]) -> list[Individual]:
    seen = set()
    out = []
    for ind in pool:
        if ind.placement not in seen:
            seen.add(ind.placement)
            out.append(ind)
    return out


def ranked_order(pool: Sequence[Individual]) -> list[int]:
    """Indices best first: by front, then crowding (descending), then placement."""
    order = []
    for front in nondominated_sort(pool):
        cd = crowding_distance([pool[i].objectives for i in front])
        within = sorted(range(len(front)), key=lambda j: (-cd[j], pool[front[j]].placement))
        order.extend(front[j] for j in within)
    return order


def environmental_selection(pool: Sequence[Individual], pop_size: int) -> list[Individual]:
    pool = dedupe(pool)
    if not pool:
        raise ValueError("empty selection pool")
    order = ranked_order(pool)
    chosen = order[:pop_size]
    while len(chosen) < pop_size:
        chosen.extend(order[: pop_size - len(chosen)])
    return [pool[i] for i in chosen]


def update_archive(archive: Sequence[Individual], pool: Iterable[Individual]) -> list[Individual]:
    """Feasible nondominated set, one placement (the smallest) per objective vector."""
    best: dict[Objectives, Individual] = {}
    for ind in list(archive) + [p for p in pool if p.violation == 0]:
        held = best.get(ind.objectives)
        if held is None or ind.placement < held.placement:
            best[ind.objectives] = ind
    points = list(best.values())
    keep = [p for p in points if not any(dominates(q.objectives, p.objectives) for q in points)]
    return sorted(keep, key=lambda p: (p.objectives, p.placement))


def select_final_np(archive: Sequence[Individual], world: World) -> Individual:
    """Member with the smallest worst-month deficit, evaluated at that month."""
    if not archive:
        raise ValueError("empty archive")
    scored = []
    for member in archive:
        per_month = [evaluate(world, member.placement, m) for m in range(world.n_months)]
        worst = max(per_month, key=lambda ind: ind.deficit)  # first month on ties
        scored.append(((worst.deficit, worst.uncovered, worst.node_count, worst.placement), worst))
    return min(scored, key=lambda s: s[0])[1]


@dataclass(frozen=True)
class HistoryRow:
    iteration: int
    month: int
    best_deficit: float | None
    best_uncovered: float | None
    archive_size: int


@dataclass
class RunResult:
    archive: list[Individual]
    np: Individual
    history: list[HistoryRow]
    population: list[Individual] = field(repr=False)
    month: int = 0


def _tournament(rng: np.random.Generator, pop: Sequence[Individual], rank: dict, crowd: dict) -> int:
    i, j = (int(x) for x in rng.integers(len(pop), size=2))
    if (rank[j], -crowd[j]) < (rank[i], -crowd[i]):
        return j
    return i  # ties go to the first draw


def _rank_and_crowding(pop: Sequence[Individual]) -> tuple[dict, dict]:
    rank, crowd = {}, {}
    for r, front in enumerate(nondominated_sort(pop)):
        cd = crowding_distance([pop[i].objectives for i in front])
        for i, d in zip(front, cd):
            rank[i] = r
            crowd[i] = d
    return rank, crowd


def run(world: World, candidates: CandidateSet, params: MoeaParams,
        on_iteration: Callable[[int, list[Individual], list[Individual]], None] | None = None) -> RunResult:
    """Evolve placements for ``params.imax`` iterations and pick the final NP.

    ``on_iteration(itr, population, archive)`` is called after each
    iteration's archive update, before any SEM refresh.
    """
    month = 0
    pop = [evaluate(world, p, month) for p in initialize_population(world, candidates, params)]
    archive: list[Individual] = []
    history: list[HistoryRow] = []

    for itr in range(1, params.imax + 1):
        rank, crowd = _rank_and_crowding(pop)
        offspring = []
        for slot in range(params.pop_size):
            rng = rng_stream(params.seed, itr, slot, TAG_VARY)
            a = pop[_tournament(rng, pop, rank, crowd)]
            b = pop[_tournament(rng, pop, rank, crowd)]
            child = mutate(crossover(a.placement, b.placement, rng), candidates, params, rng)
            offspring.append(evaluate(world, child, month))

        top = sorted(range(len(offspring)), key=lambda i: elite_key(offspring[i]))[: params.n_top]
        for i in top:
            offspring[i] = energy_optimization(world, offspring[i], month, candidates, params)

        elite = select_elite(pop + offspring, params.n_top)
        secondary = [
            evaluate(world, p, month)
            for p in generate_secondary(
                elite, candidates, params, rng_stream(params.seed, itr, 0, TAG_SECONDARY)
            )
        ]

        pool = archive + pop + offspring + secondary
        pop = environmental_selection(pool, params.pop_size)
        archive = update_archive(archive, pool)

        history.append(HistoryRow(
            iteration=itr,
            month=month,
            best_deficit=min((m.deficit for m in archive), default=None),
            best_uncovered=min((m.uncovered for m in archive), default=None),
            archive_size=len(archive),
        ))
        if on_iteration is not None:
            on_iteration(itr, pop, archive)

        if itr % params.sdr == 0:
            month = (month + 1) % world.n_months
            pop = [evaluate(world, ind.placement, month) for ind in pop]
            archive = update_archive([], [evaluate(world, ind.placement, month) for ind in archive])

    if archive:
        np_ind = select_final_np(archive, world)
    else:
        # nothing feasible: best of the least-violating front
        np_ind = min((pop[i] for i in nondominated_sort(pop)[0]), key=elite_key)
    return RunResult(archive=archive, np=np_ind, history=history, population=pop, month=month)
