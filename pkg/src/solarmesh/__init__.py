"""Placement of solar-powered mesh-network nodes over rural terrain."""

from solarmesh.energy import EnergyParams
from solarmesh.geodata import CandidateSet, CellIndex, GridRaster, World, load_world
from solarmesh.moea import Individual, MoeaParams, run
from solarmesh.radio import RadioParams

__all__ = [
    "CandidateSet",
    "CellIndex",
    "EnergyParams",
    "GridRaster",
    "Individual",
    "MoeaParams",
    "RadioParams",
    "World",
    "load_world",
    "run",
]
__version__ = "0.1.0"
