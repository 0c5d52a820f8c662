"""Raster ingestion, the world model and candidate-site generation.

Rasters use the ESRI ASCII grid layout: six header lines followed by
``nrows`` lines of ``ncols`` values, northernmost row first.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, NamedTuple, Sequence

import numpy as np

if TYPE_CHECKING:
    from solarmesh.energy import EnergyParams
    from solarmesh.radio import RadioParams

HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")
GEOMETRY_TOL = 1e-9


class GridError(ValueError):
    """Malformed ASCII grid; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class WorldValidationError(ValueError):
    def __init__(self, failures: list[str]):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class EmptyCandidateSetError(ValueError):
    pass


class CellIndex(NamedTuple):
    row: int
    col: int

    def __str__(self) -> str:
        return f"{self.row}:{self.col}"


@dataclass(frozen=True, eq=False)
class GridRaster:
    ncols: int
    nrows: int
    xllcorner: float
    yllcorner: float
    cellsize: float
    nodata: float
    values: np.ndarray  # (nrows, ncols), row 0 is the northern edge

    def __post_init__(self):
        if self.ncols <= 0 or self.nrows <= 0:
            raise GridError("ncols and nrows must be positive")
        if not self.cellsize > 0:
            raise GridError("cellsize must be > 0")
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.size != self.ncols * self.nrows:
            raise GridError(
                f"wrong value count: expected {self.ncols * self.nrows}, got {values.size}"
            )
        values = values.reshape(self.nrows, self.ncols)
        mask = values == self.nodata
        if not np.all(np.isfinite(values[~mask])):
            raise GridError("non-finite data value")
        values.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_nodata_mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nodata_mask(self) -> np.ndarray:
        return self._nodata_mask

    @property
    def valid_mask(self) -> np.ndarray:
        return ~self._nodata_mask

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        return 0 <= cell[0] < self.nrows and 0 <= cell[1] < self.ncols

    def is_nodata(self, cell: tuple[int, int]) -> bool:
        return bool(self._nodata_mask[cell[0], cell[1]])

    def value(self, cell: tuple[int, int]) -> float:
        return float(self.values[cell[0], cell[1]])

    def same_geometry(self, other: GridRaster) -> bool:
        return (
            self.ncols == other.ncols
            and self.nrows == other.nrows
            and abs(self.cellsize - other.cellsize) <= GEOMETRY_TOL
            and abs(self.xllcorner - other.xllcorner) <= GEOMETRY_TOL
            and abs(self.yllcorner - other.yllcorner) <= GEOMETRY_TOL
        )

    def with_values(self, values) -> GridRaster:
        """Same geometry and sentinel, new data."""
        return GridRaster(
            self.ncols, self.nrows, self.xllcorner, self.yllcorner,
            self.cellsize, self.nodata, np.asarray(values, dtype=np.float64),
        )


def _parse_number(token: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise GridError(f"non-numeric token {token!r}", line) from None


def parse_ascii_grid(text: bytes | str) -> GridRaster:
    """Parse an ESRI ASCII grid held in memory."""
    if isinstance(text, bytes):
        try:
            text = text.decode("ascii")
        except UnicodeDecodeError as exc:
            raise GridError(f"not ASCII text ({exc.reason})") from None
    lines = text.splitlines()

    header: dict[str, float] = {}
    for i, key in enumerate(HEADER_KEYS):
        lineno = i + 1
        if i >= len(lines):
            raise GridError(f"malformed header: missing {key!r}", lineno)
        parts = lines[i].split()
        if len(parts) != 2 or parts[0].lower() != key:
            raise GridError(f"malformed header: expected {key!r}, got {lines[i]!r}", lineno)
        header[key] = _parse_number(parts[1], lineno)

    for key, lineno in (("ncols", 1), ("nrows", 2)):
        v = header[key]
        if v != int(v) or v <= 0:
            raise GridError(f"malformed header: {key} must be a positive integer", lineno)
    if not header["cellsize"] > 0:
        raise GridError("cellsize must be > 0", 5)

    ncols, nrows = int(header["ncols"]), int(header["nrows"])
    expected = ncols * nrows
    nodata = header["nodata_value"]
    values: list[float] = []
    last_line = len(HEADER_KEYS)
    for lineno, line in enumerate(lines[len(HEADER_KEYS):], start=len(HEADER_KEYS) + 1):
        tokens = line.split()
        if not tokens:
            continue
        last_line = lineno
        for tok in tokens:
            v = _parse_number(tok, lineno)
            if v != nodata and not math.isfinite(v):
                raise GridError(f"non-finite data value {tok!r}", lineno)
            values.append(v)
            if len(values) > expected:
                raise GridError(
                    f"wrong value count: more than {expected} values", lineno
                )
    if len(values) != expected:
        raise GridError(
            f"wrong value count: expected {expected}, got {len(values)}", last_line
        )

    return GridRaster(
        ncols=ncols,
        nrows=nrows,
        xllcorner=header["xllcorner"],
        yllcorner=header["yllcorner"],
        cellsize=header["cellsize"],
        nodata=nodata,
        values=np.asarray(values, dtype=np.float64),
    )


def _fmt(v: float) -> str:
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def format_ascii_grid(raster: GridRaster) -> str:
    """Serialize so that :func:`parse_ascii_grid` reproduces every value bit for bit."""
    head = [
        f"ncols {raster.ncols}",
        f"nrows {raster.nrows}",
        f"xllcorner {_fmt(raster.xllcorner)}",
        f"yllcorner {_fmt(raster.yllcorner)}",
        f"cellsize {_fmt(raster.cellsize)}",
        f"NODATA_value {_fmt(raster.nodata)}",
    ]
    rows = [" ".join(_fmt(v) for v in row) for row in raster.values]
    return "\n".join(head + rows) + "\n"


def read_ascii_grid(path: str | Path) -> GridRaster:
    return parse_ascii_grid(Path(path).read_bytes())


def write_ascii_grid(path: str | Path, raster: GridRaster) -> None:
    Path(path).write_text(format_ascii_grid(raster))


def cell_center(raster: GridRaster, cell: tuple[int, int]) -> tuple[float, float]:
    """Map coordinates (x, y) of the center of ``cell``."""
    if not raster.in_bounds(cell):
        raise IndexError(f"cell {tuple(cell)} out of bounds for {raster.nrows}x{raster.ncols} grid")
    row, col = cell
    x = raster.xllcorner + (col + 0.5) * raster.cellsize
    y = raster.yllcorner + (raster.nrows - row - 0.5) * raster.cellsize
    return x, y


@dataclass(frozen=True, eq=False)
class World:
    dem: GridRaster
    demand: GridRaster
    sem_stack: tuple[GridRaster, ...]
    gateway: CellIndex
    radio: RadioParams
    energy: EnergyParams

    @property
    def shape(self) -> tuple[int, int]:
        return self.dem.shape

    @property
    def cellsize(self) -> float:
        return self.dem.cellsize

    @property
    def n_months(self) -> int:
        return len(self.sem_stack)


def load_world(
    dem: GridRaster,
    demand: GridRaster,
    sem_layers: Sequence[GridRaster],
    gateway: tuple[int, int],
    radio: RadioParams,
    energy: EnergyParams,
) -> World:
    """Assemble a World, collecting every validation failure before raising."""
    failures = []
    sem_layers = tuple(sem_layers)
    if not sem_layers:
        failures.append("empty SEM stack")
    elif len(sem_layers) > 12:
        failures.append(f"SEM stack has {len(sem_layers)} layers, at most 12 allowed")

    if not demand.same_geometry(dem):
        failures.append("geometry mismatch: demand raster vs DEM")
    for i, layer in enumerate(sem_layers):
        if not layer.same_geometry(dem):
            failures.append(f"geometry mismatch: SEM layer {i} vs DEM")
        elif np.any(layer.values[layer.valid_mask] < 0):
            failures.append(f"negative SEM value in layer {i}")
    if demand.same_geometry(dem) and np.any(demand.values[demand.valid_mask] < 0):
        failures.append("negative demand value")

    gateway = CellIndex(int(gateway[0]), int(gateway[1]))
    if not dem.in_bounds(gateway):
        failures.append(f"gateway out of bounds: {gateway.row}:{gateway.col}")
    elif dem.is_nodata(gateway):
        failures.append(f"gateway on DEM nodata cell: {gateway.row}:{gateway.col}")

    if failures:
        raise WorldValidationError(failures)
    return World(dem, demand, sem_layers, gateway, radio, energy)


@dataclass(frozen=True)
class CandidateSet:
    """Sorted candidate cells plus their sampling weights.

    ``weights`` rank the month-0 SEM value: weight = max-rank / n, so the
    sunniest cells get 1 and ties share a weight.
    """

    cells: tuple[CellIndex, ...]
    weights: tuple[float, ...] = ()
    _index: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _near: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        cells = tuple(CellIndex(*c) for c in self.cells)
        if list(cells) != sorted(set(cells)):
            raise ValueError("candidate cells must be distinct and sorted by (row, col)")
        object.__setattr__(self, "cells", cells)
        if not self.weights:
            object.__setattr__(self, "weights", (1.0,) * len(cells))
        elif len(self.weights) != len(cells):
            raise ValueError("one weight per candidate cell required")
        self._index.update((c, i) for i, c in enumerate(cells))

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __contains__(self, cell) -> bool:
        return tuple(cell) in self._index

    def index(self, cell) -> int:
        return self._index[tuple(cell)]

    def neighbors(self, cell, radius: int) -> tuple[CellIndex, ...]:
        """Candidates within Chebyshev distance ``radius`` of ``cell`` (itself included)."""
        key = (tuple(cell), radius)
        found = self._near.get(key)
        if found is None:
            r0, c0 = cell
            found = tuple(
                c for c in self.cells
                if abs(c.row - r0) <= radius and abs(c.col - c0) <= radius
            )
            self._near[key] = found
        return found


def sem_rank_weights(values: Sequence[float]) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return v
    ranks = np.searchsorted(np.sort(v), v, side="right")
    return ranks / v.size


def local_slope(dem: GridRaster) -> np.ndarray:
    """Max |delta elevation| / cellsize over the in-bounds 4-neighborhood.

    Nodata neighbors are skipped like boundary ones.
    """
    z = dem.values
    valid = dem.valid_mask
    slope = np.zeros(dem.shape)
    for axis, shift in ((0, 1), (0, -1), (1, 1), (1, -1)):
        nb = np.roll(z, shift, axis=axis)
        nb_valid = np.roll(valid, shift, axis=axis)
        edge = np.zeros(dem.shape, dtype=bool)
        index = [slice(None), slice(None)]
        index[axis] = 0 if shift == 1 else -1
        edge[tuple(index)] = True  # wrapped-around neighbors
        use = valid & nb_valid & ~edge
        diff = np.where(use, np.abs(z - nb), 0.0)
        slope = np.maximum(slope, diff / dem.cellsize)
    return slope


def candidate_mask(world: World, sem_threshold: float, max_slope: float) -> np.ndarray:
    ok = world.dem.valid_mask.copy()
    sem_min = np.full(world.shape, np.inf)
    for layer in world.sem_stack:
        ok &= layer.valid_mask
        sem_min = np.minimum(sem_min, np.where(layer.valid_mask, layer.values, -np.inf))
    ok &= sem_min >= sem_threshold
    ok &= local_slope(world.dem) <= max_slope
    return ok


def generate_candidate_sites(world: World, sem_threshold: float, max_slope: float) -> CandidateSet:
    """Feasible installation cells: sunny enough in every layer and not too steep."""
    ok = candidate_mask(world, sem_threshold, max_slope)
    rows, cols = np.nonzero(ok)  # C order, so already sorted by (row, col)
    if rows.size == 0:
        raise EmptyCandidateSetError(
            f"empty candidate set (sem_threshold={sem_threshold}, max_slope={max_slope})"
        )
    cells = tuple(CellIndex(int(r), int(c)) for r, c in zip(rows, cols))
    weights = sem_rank_weights(world.sem_stack[0].values[rows, cols])
    return CandidateSet(cells, tuple(float(w) for w in weights))


_world_caches: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def world_cache(world: World, name: str) -> dict:
    """Per-world memo table; World is immutable so entries never go stale."""
    tables = _world_caches.get(world)
    if tables is None:
        tables = _world_caches[world] = {}
    return tables.setdefault(name, {})
