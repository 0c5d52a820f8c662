"""Command-line front end.

    solarmesh plan <config> [--seed N] [--out DIR]
    solarmesh evaluate <config> <placement>
    solarmesh render <config> <placement> [--out DIR]
    solarmesh oracle <config> [--out DIR]

The config is one JSON object whose keys are the :class:`RunConfig` fields.
Placements are written ``r:c;r:c;...``.

Exit codes: 0 ok, 1 config or parse error, 2 validation error, 3 empty
candidate set, 4 oracle enumeration too large.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from solarmesh import moea, oracle, radio
from solarmesh.energy import EnergyParams
from solarmesh.geodata import (
    CandidateSet,
    CellIndex,
    EmptyCandidateSetError,
    GridError,
    World,
    WorldValidationError,
    cell_center,
    generate_candidate_sites,
    load_world,
    read_ascii_grid,
)
from solarmesh.radio import RadioParams

PARETO_HEADER = ["uncovered_demand", "energy_deficit_wh", "node_count", "cells"]
HISTORY_HEADER = ["iteration", "month", "best_deficit_wh", "best_uncovered_demand", "archive_size"]


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


@dataclass
class RunConfig:
    dem: str
    demand: str
    sem_layers: list[str]
    gateway: list[int]
    output_dir: str = "out"
    sem_threshold: float = 0.0
    max_slope: float = 1.0
    # radio
    r_access: float = 250.0
    r_backhaul: float = 400.0
    h_ant: float = 5.0
    clearance: float = 0.0
    # energy
    p_base: float = 10.0
    panel_area: float = 1.0
    panel_efficiency: float = 0.20
    performance_ratio: float = 0.75
    battery_capacity: float = 500.0
    soc_init: float = 0.5
    # search
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
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def params_of(self, cls):
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(cls) if f.init}

    def echo(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "base_dir"}


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise CliError(1, f"config file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(1, f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise CliError(1, f"config {path} must be a JSON object")

    known = {f.name: f for f in dataclasses.fields(RunConfig) if f.name != "base_dir"}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise CliError(1, f"unknown config field(s): {', '.join(unknown)}")
    missing = [n for n, f in known.items()
               if f.default is dataclasses.MISSING and n not in raw]
    if missing:
        raise CliError(1, f"missing config field(s): {', '.join(missing)}")

    problems = []
    for name, value in raw.items():
        kind = known[name].type
        if kind == "str" and not isinstance(value, str):
            problems.append(f"{name} must be a string")
        elif kind == "int" and (not isinstance(value, int) or isinstance(value, bool)):
            problems.append(f"{name} must be an integer")
        elif kind == "float" and (not isinstance(value, (int, float)) or isinstance(value, bool)):
            problems.append(f"{name} must be a number")
        elif name == "sem_layers" and not (
            isinstance(value, list) and all(isinstance(v, str) for v in value)
        ):
            problems.append("sem_layers must be a list of paths")
        elif name == "gateway" and not (
            isinstance(value, list) and len(value) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
        ):
            problems.append("gateway must be [row, col]")
    if problems:
        raise CliError(1, "; ".join(problems))
    values = {k: (float(v) if known[k].type == "float" else v) for k, v in raw.items()}
    return RunConfig(**values, base_dir=path.resolve().parent)


def _read_grid(cfg: RunConfig, path: str):
    full = cfg.resolve(path)
    try:
        return read_ascii_grid(full)
    except FileNotFoundError:
        raise CliError(1, f"raster file not found: {full}") from None
    except OSError as exc:
        raise CliError(1, f"cannot read raster {full}: {exc}") from None
    except GridError as exc:
        raise CliError(1, f"{full}: {exc}") from None


def _build_params(cfg: RunConfig):
    failures = []
    built = []
    for cls in (RadioParams, EnergyParams, moea.MoeaParams):
        try:
            built.append(cls(**cfg.params_of(cls)))
        except ValueError as exc:
            failures.extend(str(exc).split("; "))
            built.append(None)
    return built, failures


def build_world(cfg: RunConfig) -> tuple[World, moea.MoeaParams]:
    dem = _read_grid(cfg, cfg.dem)
    demand = _read_grid(cfg, cfg.demand)
    sem = [_read_grid(cfg, p) for p in cfg.sem_layers]
    (radio_p, energy_p, moea_p), failures = _build_params(cfg)
    try:
        world = load_world(dem, demand, sem, tuple(cfg.gateway),
                           radio_p or RadioParams(), energy_p or EnergyParams())
    except WorldValidationError as exc:
        failures.extend(exc.failures)
    if failures:
        raise CliError(2, "validation failed:\n  " + "\n  ".join(failures))
    return world, moea_p


def candidates_for(world: World, cfg: RunConfig) -> CandidateSet:
    try:
        return generate_candidate_sites(world, cfg.sem_threshold, cfg.max_slope)
    except EmptyCandidateSetError as exc:
        raise CliError(3, str(exc)) from None


_CELL = re.compile(r"^\s*(-?\d+)\s*:\s*(-?\d+)\s*$")


def parse_placement(text: str) -> list[CellIndex]:
    """Parse ``r:c;r:c``; the empty string means no nodes."""
    if not text.strip():
        return []
    cells = []
    for part in text.split(";"):
        m = _CELL.match(part)
        if not m:
            raise CliError(1, f"malformed placement element {part!r}, expected r:c")
        cells.append(CellIndex(int(m.group(1)), int(m.group(2))))
    seen = set()
    for c in cells:
        if c in seen:
            raise CliError(1, f"duplicate cell {c}")
        seen.add(c)
    return sorted(cells)


def check_in_candidates(cells: Sequence[CellIndex], candidates: CandidateSet) -> None:
    bad = [str(c) for c in cells if c not in candidates]
    if bad:
        raise CliError(2, f"cell(s) not in the candidate set: {', '.join(bad)}")


def format_cells(cells: Sequence[tuple[int, int]]) -> str:
    return ";".join(f"{r}:{c}" for r, c in cells)


def _num(v: float) -> str:
    return repr(float(v))


def pareto_csv(points: Sequence[tuple[tuple[float, float, int], Sequence[CellIndex]]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PARETO_HEADER)
    for obj, cells in sorted(points, key=lambda p: (p[0], tuple(p[1]))):
        w.writerow([_num(obj[0]), _num(obj[1]), int(obj[2]), format_cells(cells)])
    return buf.getvalue()


def read_pareto_csv(text: str) -> list[tuple[tuple[float, float, int], list[CellIndex]]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != PARETO_HEADER:
        raise ValueError("not a pareto csv")
    return [
        ((float(r[0]), float(r[1]), int(r[2])), parse_placement(r[3]))
        for r in rows[1:]
    ]


def history_csv(history: Sequence[moea.HistoryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTORY_HEADER)
    for h in history:
        w.writerow([
            h.iteration, h.month,
            "" if h.best_deficit is None else _num(h.best_deficit),
            "" if h.best_uncovered is None else _num(h.best_uncovered),
            h.archive_size,
        ])
    return buf.getvalue()


def placement_geojson(world: World, ind: moea.Individual) -> str:
    features = []
    for rep in ind.reports:
        x, y = cell_center(world.dem, rep.cell)
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [x, y]},
            "properties": {
                "cell": str(rep.cell),
                "energy_balance_wh": rep.balance,
                "soc_feasible": rep.soc_feasible,
            },
        })
    return json.dumps({"type": "FeatureCollection", "features": features}, indent=2) + "\n"


def render_pgm(world: World, cells: Sequence[CellIndex]) -> str:
    """Plain PGM map: demand shading, covered houses brightened, nodes white, gateway black."""
    d = world.demand.values
    positive = world.demand.valid_mask & (d > 0)
    peak = float(d[positive].max()) if positive.any() else 0.0
    covered = radio.covered_mask(world, cells)
    rows, cols = radio.demand_cells(world)
    covered_cells = {(int(r), int(c)) for r, c, k in zip(rows, cols, covered) if k}
    nodes = {tuple(c) for c in cells}

    lines = ["P2", f"{world.demand.ncols} {world.demand.nrows}", "255"]
    for r in range(world.demand.nrows):
        px = []
        for c in range(world.demand.ncols):
            v = math.floor(200.0 * d[r, c] / peak + 0.5) if positive[r, c] else 0
            if (r, c) in covered_cells:
                v += 55
            if (r, c) in nodes:
                v = 255
            if (r, c) == tuple(world.gateway):
                v = 0
            px.append(str(v))
        lines.append(" ".join(px))
    return "\n".join(lines) + "\n"


def read_pgm(text: str) -> list[list[int]]:
    tokens = text.split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM")
    ncols, nrows, _maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    px = [int(t) for t in tokens[4:]]
    return [px[r * ncols:(r + 1) * ncols] for r in range(nrows)]


def _out_dir(cfg: RunConfig, override: str | None) -> Path:
    out = Path(override) if override else cfg.resolve(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_plan(config_path: str, seed: int | None = None, out: str | None = None) -> int:
    cfg = load_config(config_path)
    if seed is not None:
        cfg.seed = seed
    world, params = build_world(cfg)
    candidates = candidates_for(world, cfg)
    result = moea.run(world, candidates, params)
    np_ind = result.np

    out_dir = _out_dir(cfg, out)
    (out_dir / "pareto.csv").write_text(
        pareto_csv([(m.objectives, m.placement) for m in result.archive])
    )
    (out_dir / "history.csv").write_text(history_csv(result.history))
    (out_dir / "placement.geojson").write_text(placement_geojson(world, np_ind))
    (out_dir / "map.pgm").write_text(render_pgm(world, np_ind.placement))
    summary = {
        "seed": cfg.seed,
        "params": cfg.echo(),
        "candidates": len(candidates),
        "archive_size": len(result.archive),
        "final_month": result.month,
        "np": {
            "cells": format_cells(np_ind.placement),
            "uncovered_demand": np_ind.uncovered,
            "energy_deficit_wh": np_ind.deficit,
            "node_count": np_ind.node_count,
            "violation": np_ind.violation,
            "worst_month": np_ind.month,
        },
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(
        f"NP {format_cells(np_ind.placement)}: uncovered={np_ind.uncovered} "
        f"deficit={np_ind.deficit} nodes={np_ind.node_count} violation={np_ind.violation}; "
        f"{len(result.archive)} archive members written to {out_dir}"
    )
    return 0


def _report_dict(rep) -> dict:
    return {
        "cell": str(rep.cell),
        "production_wh": rep.production,
        "consumption_wh": rep.consumption,
        "balance_wh": rep.balance,
        "soc_feasible": rep.soc_feasible,
        "min_soc": rep.min_soc,
    }


def _prepare_placement(config_path: str, placement_arg: str):
    cfg = load_config(config_path)
    cells = parse_placement(placement_arg)
    world, _ = build_world(cfg)
    candidates = candidates_for(world, cfg)
    check_in_candidates(cells, candidates)
    return cfg, world, cells


def cmd_evaluate(config_path: str, placement_arg: str) -> int:
    _, world, cells = _prepare_placement(config_path, placement_arg)
    per_month = [moea.evaluate(world, cells, m) for m in range(world.n_months)]
    first = per_month[0]
    doc = {
        "placement": format_cells(first.placement),
        "objectives": {
            "uncovered_demand": first.uncovered,
            "energy_deficit_wh": first.deficit,
            "node_count": first.node_count,
        },
        "violation": first.violation,
        "months": [
            {"month": ind.month, "energy_deficit_wh": ind.deficit,
             "reports": [_report_dict(r) for r in ind.reports]}
            for ind in per_month
        ],
        "worst_month_deficit_wh": max(ind.deficit for ind in per_month),
    }
    print(json.dumps(doc, indent=2))
    return 0


def cmd_render(config_path: str, placement_arg: str, out: str | None = None) -> int:
    cfg, world, cells = _prepare_placement(config_path, placement_arg)
    path = _out_dir(cfg, out) / "map.pgm"
    path.write_text(render_pgm(world, cells))
    print(f"wrote {path}")
    return 0


def cmd_oracle(config_path: str, out: str | None = None) -> int:
    cfg = load_config(config_path)
    world, params = build_world(cfg)
    candidates = candidates_for(world, cfg)
    try:
        front = oracle.exhaustive_pareto(world, candidates, params.n_max, 0)
    except oracle.OracleGuardError as exc:
        raise CliError(4, f"oracle refused: {exc}") from None
    path = _out_dir(cfg, out) / "oracle_front.csv"
    path.write_text(pareto_csv([(p.objectives, p.placement) for p in front]))
    print(f"wrote {len(front)} front placements to {path}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="solarmesh", description="Solar-powered mesh node placement.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="run the optimizer and write Pareto/NP outputs")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("evaluate", help="evaluate one placement under every SEM layer")
    p.add_argument("config")
    p.add_argument("placement")

    p = sub.add_parser("render", help="write map.pgm for a placement")
    p.add_argument("config")
    p.add_argument("placement")
    p.add_argument("--out")

    p = sub.add_parser("oracle", help="enumerate the exact Pareto front of a small instance")
    p.add_argument("config")
    p.add_argument("--out")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "plan":
            return cmd_plan(args.config, args.seed, args.out)
        if args.command == "evaluate":
            return cmd_evaluate(args.config, args.placement)
        if args.command == "render":
            return cmd_render(args.config, args.placement, args.out)
        return cmd_oracle(args.config, args.out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
