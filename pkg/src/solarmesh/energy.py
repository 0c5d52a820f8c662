"""Node energy budget: constant-draw consumption, PV yield and a one-day battery walk.

SEM values are daily insolation in kWh/m^2/day (peak sun hours).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Iterable, Sequence

import numpy as np

from solarmesh.geodata import CellIndex, World, world_cache

STEPS_PER_DAY = 48
STEP_HOURS = 24.0 / STEPS_PER_DAY


@dataclass(frozen=True)
class EnergyParams:
    p_base: float = 10.0  # W
    panel_area: float = 1.0  # m^2
    panel_efficiency: float = 0.20
    performance_ratio: float = 0.75
    battery_capacity: float = 500.0  # Wh
    soc_init: float = 0.5

    day_start_hour: ClassVar[float] = 6.0
    day_end_hour: ClassVar[float] = 18.0

    def __post_init__(self):
        errors = []
        if not self.p_base >= 0:
            errors.append("p_base must be >= 0")
        if not self.panel_area > 0:
            errors.append("panel_area must be > 0")
        if not 0 < self.panel_efficiency <= 1:
            errors.append("panel_efficiency must be in (0, 1]")
        if not 0 < self.performance_ratio <= 1:
            errors.append("performance_ratio must be in (0, 1]")
        if not self.battery_capacity > 0:
            errors.append("battery_capacity must be > 0")
        if not 0 <= self.soc_init <= 1:
            errors.append("soc_init must be in [0, 1]")
        if errors:
            raise ValueError("; ".join(errors))


@dataclass(frozen=True)
class NodeEnergyReport:
    cell: CellIndex
    production: float  # Wh/day
    consumption: float  # Wh/day
    balance: float  # production - consumption
    soc_feasible: bool
    min_soc: float


def daily_consumption(params: EnergyParams) -> float:
    return 24.0 * params.p_base


def daily_production(params: EnergyParams, sem_value: float) -> float:
    if sem_value < 0:
        raise ValueError(f"negative SEM value {sem_value}")
    return (
        sem_value * 1000.0 * params.panel_area
        * params.panel_efficiency * params.performance_ratio
    )


def _profile_fractions() -> np.ndarray:
    # closed-form integral of sin(pi (t - 6) / 12) over each half-hour step,
    # normalized by its integral over the whole day (24 / pi)
    start, end = EnergyParams.day_start_hour, EnergyParams.day_end_hour
    span = end - start
    t0 = np.arange(STEPS_PER_DAY) * STEP_HOURS
    a = np.clip(t0, start, end)
    b = np.clip(t0 + STEP_HOURS, start, end)
    integral = (span / math.pi) * (np.cos(math.pi * (a - start) / span) - np.cos(math.pi * (b - start) / span))
    return integral / (2.0 * span / math.pi)


PROFILE = _profile_fractions()
PROFILE.flags.writeable = False


def production_steps(params: EnergyParams, sem_value: float) -> np.ndarray:
    """Per-step PV output (Wh) for the 48 half-hour steps starting at midnight."""
    return daily_production(params, sem_value) * PROFILE


@dataclass(frozen=True)
class SocTrace:
    production: np.ndarray  # Wh per step
    unclamped: np.ndarray  # stored energy after each step, before clamping
    stored: np.ndarray  # after clamping to [0, capacity]
    initial: float


def soc_trace(params: EnergyParams, sem_value: float) -> SocTrace:
    prod = production_steps(params, sem_value)
    draw = params.p_base * STEP_HOURS
    cap = params.battery_capacity
    energy = params.soc_init * cap
    initial = energy
    unclamped = np.empty(STEPS_PER_DAY)
    stored = np.empty(STEPS_PER_DAY)
    for k in range(STEPS_PER_DAY):
        e = energy + prod[k] - draw
        unclamped[k] = e
        energy = min(max(e, 0.0), cap)
        stored[k] = energy
    return SocTrace(prod, unclamped, stored, initial)


def simulate_soc(params: EnergyParams, sem_value: float) -> tuple[bool, float]:
    """(soc_feasible, min_soc) for one representative day.

    Feasible means the battery never has to go below empty.
    """
    tr = soc_trace(params, sem_value)
    feasible = bool(tr.unclamped.min() >= 0.0)
    min_soc = min(tr.initial, float(tr.stored.min())) / params.battery_capacity
    return feasible, min_soc


def node_report(params: EnergyParams, cell: tuple[int, int], sem_value: float) -> NodeEnergyReport:
    production = daily_production(params, sem_value)
    consumption = daily_consumption(params)
    feasible, min_soc = simulate_soc(params, sem_value)
    return NodeEnergyReport(
        cell=CellIndex(*cell),
        production=production,
        consumption=consumption,
        balance=production - consumption,
        soc_feasible=feasible,
        min_soc=min_soc,
    )


def cell_report(world: World, cell: tuple[int, int], month_index: int) -> NodeEnergyReport:
    cell = CellIndex(*cell)
    cache = world_cache(world, "energy")
    key = (cell, month_index)
    rep = cache.get(key)
    if rep is None:
        layer = world.sem_stack[month_index]
        if not layer.in_bounds(cell):
            raise IndexError(f"cell {cell} out of bounds")
        if layer.is_nodata(cell):
            raise ValueError(f"node {cell} sits on a nodata cell of SEM layer {month_index}")
        rep = cache[key] = node_report(world.energy, cell, layer.value(cell))
    return rep


def solar_evaluation(world: World, placement: Iterable[tuple[int, int]], month_index: int) -> list[NodeEnergyReport]:
    """Energy report per node, in placement order, for one SEM layer."""
    if not 0 <= month_index < world.n_months:
        raise IndexError(f"month_index {month_index} outside SEM stack of {world.n_months}")
    return [cell_report(world, c, month_index) for c in placement]


def deficit_terms(reports: Sequence[NodeEnergyReport], battery_capacity: float) -> list[float]:
    shortfalls = [max(0.0, -r.balance) for r in reports]
    penalties = [0.0 if r.soc_feasible else battery_capacity for r in reports]
    return shortfalls + penalties


def total_deficit(reports: Sequence[NodeEnergyReport], battery_capacity: float) -> float:
    """Summed daily shortfall plus one battery capacity per node that runs flat.

    Exactly rounded, so node order is irrelevant.
    """
    return math.fsum(deficit_terms(reports, battery_capacity))
