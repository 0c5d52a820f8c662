import itertools
import json
import shutil

import numpy as np
import pytest

from solarmesh import cli, synthetic
from solarmesh.geodata import cell_center
from solarmesh.moea import dominates
from solarmesh.radio import RadioParams

OUTPUTS = ("pareto.csv", "history.csv", "placement.geojson", "map.pgm", "summary.json")


@pytest.fixture
def demo_copy(tmp_path, demo_config):
    d = tmp_path / "demo"
    shutil.copytree(demo_config.parent, d, ignore=shutil.ignore_patterns("out"))
    return d / "config.json"


def test_plan_demo(demo_copy, tmp_path):
    out = tmp_path / "run"
    assert cli.main(["plan", str(demo_copy), "--out", str(out)]) == 0
    rows = cli.read_pareto_csv((out / "pareto.csv").read_text())
    assert rows
    summary = json.loads((out / "summary.json").read_text())
    np_ = summary["np"]
    assert (np_["uncovered_demand"], np_["energy_deficit_wh"], np_["node_count"]) == (0.0, 0.0, 1)
    assert summary["seed"] == 42
    for a, b in itertools.permutations(rows, 2):
        assert not dominates(a[0], b[0])


def test_plan_is_byte_identical(demo_copy, tmp_path):
    for name in ("a", "b"):
        assert cli.main(["plan", str(demo_copy), "--out", str(tmp_path / name)]) == 0
    for f in OUTPUTS:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_plan_geojson(demo_copy, tmp_path):
    cli.main(["plan", str(demo_copy), "--out", str(tmp_path / "o")])
    doc = json.loads((tmp_path / "o" / "placement.geojson").read_text())
    assert doc["type"] == "FeatureCollection" and doc["features"]
    world = synthetic.demo_world()
    for feat in doc["features"]:
        assert feat["type"] == "Feature" and feat["geometry"]["type"] == "Point"
        r, c = map(int, feat["properties"]["cell"].split(":"))
        assert tuple(feat["geometry"]["coordinates"]) == pytest.approx(cell_center(world.dem, (r, c)))
        assert "energy_balance_wh" in feat["properties"]


def test_plan_seed_override(demo_copy, tmp_path):
    cli.main(["plan", str(demo_copy), "--seed", "5", "--out", str(tmp_path / "o")])
    assert json.loads((tmp_path / "o" / "summary.json").read_text())["seed"] == 5


def test_missing_dem(demo_copy, capsys):
    cfg = json.loads(demo_copy.read_text())
    cfg["dem"] = "nowhere.asc"
    demo_copy.write_text(json.dumps(cfg))
    assert cli.main(["plan", str(demo_copy)]) == 1
    assert "nowhere.asc" in capsys.readouterr().err


@pytest.mark.parametrize("mutation, code", [
    ({"unexpected": 1}, 1),
    ({"pop_size": "many"}, 1),
    ({"pop_size": 7, "r_access": -1}, 2),
    ({"sem_threshold": 1e9}, 3),
])
def test_plan_error_codes(demo_copy, mutation, code):
    cfg = json.loads(demo_copy.read_text())
    cfg.update(mutation)
    demo_copy.write_text(json.dumps(cfg))
    assert cli.main(["plan", str(demo_copy)]) == code


def test_validation_lists_every_failure(demo_copy, capsys):
    cfg = json.loads(demo_copy.read_text())
    cfg.update(pop_size=7, r_access=-1)
    demo_copy.write_text(json.dumps(cfg))
    cli.main(["plan", str(demo_copy)])
    err = capsys.readouterr().err
    assert "pop_size" in err and "r_access" in err


def test_evaluate_demo(demo_config, capsys):
    assert cli.main(["evaluate", str(demo_config), "1:1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    obj = doc["objectives"]
    assert (obj["uncovered_demand"], obj["energy_deficit_wh"], obj["node_count"]) == (0.0, 0.0, 1)
    assert doc["violation"] == 0 and doc["worst_month_deficit_wh"] == 0.0
    assert doc["months"][0]["reports"][0]["cell"] == "1:1"


@pytest.mark.parametrize("arg, code, text", [
    ("9:9", 2, "not in the candidate set"),
    ("1:1;1:1", 1, "duplicate cell"),
    ("1-1", 1, "malformed"),
])
def test_evaluate_errors(demo_config, capsys, arg, code, text):
    assert cli.main(["evaluate", str(demo_config), arg]) == code
    assert text in capsys.readouterr().err


def test_render_demo(demo_config, tmp_path):
    for name in ("a", "b"):
        assert cli.main(["render", str(demo_config), "1:1", "--out", str(tmp_path / name)]) == 0
    a = (tmp_path / "a" / "map.pgm").read_bytes()
    assert a == (tmp_path / "b" / "map.pgm").read_bytes()
    assert a.startswith(b"P2\n")
    img = cli.read_pgm(a.decode())
    assert img[1][1] == 255 and img[0][0] == 0
    # (2,2) holds 3 of peak 4 and is covered by the node at (1,1)
    assert img[2][2] == 150 + 55
    assert img[1][0] == 50 + 55
    assert img[0][1] == 0


def test_render_empty_demand_no_nodes(tmp_path):
    w = synthetic.build_world(np.zeros((3, 4)), np.zeros((3, 4)), [np.full((3, 4), 5.0)], (1, 2))
    cfg = synthetic.write_world(w, tmp_path)
    assert cli.main(["render", str(cfg), "", "--out", str(tmp_path / "o")]) == 0
    img = cli.read_pgm((tmp_path / "o" / "map.pgm").read_text())
    assert img == [[0] * 4 for _ in range(3)]


def test_oracle_demo_matches_plan(demo_copy, tmp_path):
    assert cli.main(["oracle", str(demo_copy), "--out", str(tmp_path / "o")]) == 0
    assert cli.main(["plan", str(demo_copy), "--out", str(tmp_path / "o")]) == 0
    front = cli.read_pareto_csv((tmp_path / "o" / "oracle_front.csv").read_text())
    plan = cli.read_pareto_csv((tmp_path / "o" / "pareto.csv").read_text())
    assert {f[0] for f in front} == {p[0] for p in plan}


def test_oracle_guard(tmp_path, capsys):
    cfg = synthetic.write_world(synthetic.cluster_world(), tmp_path, n_max=12, sem_threshold=1.0)
    assert cli.main(["oracle", str(cfg)]) == 4
    assert "enumeration size" in capsys.readouterr().err


def test_oracle_empty_candidates(tmp_path):
    cfg = synthetic.write_world(synthetic.cluster_world(), tmp_path, sem_threshold=99.0)
    assert cli.main(["oracle", str(cfg)]) == 3


def test_parse_placement():
    assert cli.parse_placement("") == []
    assert cli.parse_placement("2:1; 0:3") == [(0, 3), (2, 1)]


def test_pareto_csv_round_trip():
    pts = [((0.1, 1e-17, 2), [(0, 1), (3, 4)]), ((5.0, 0.0, 1), [(2, 2)])]
    text = cli.pareto_csv(pts)
    assert text.splitlines()[0] == "uncovered_demand,energy_deficit_wh,node_count,cells"
    assert cli.read_pareto_csv(text) == pts
