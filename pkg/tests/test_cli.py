import csv
import json

import pytest

from moreaulab.cli import (EXIT_CONFIG, EXIT_FAIL, EXIT_OK, ConfigError, Registry,
                           list_catalog, main, report_digest, run_config)


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


THEOREM = {"geometry": "euclidean", "phi": "l1", "points": {"count": 10, "seed": 4},
           "suites": ["theorem"]}


def test_theorem_run_exits_zero(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["run", write(tmp_path, "c.json", THEOREM), "--out", str(out)])
    assert code == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["schema"] == "1" and rep["passed"]
    assert rep["max_residuals"]["residual_ii"] <= 1e-6
    assert rep["metadata"]["digest"] == report_digest(rep)


def test_unknown_geometry_exits_two(tmp_path, capsys):
    cfg = dict(THEOREM, geometry="burg")
    assert main(["run", write(tmp_path, "c.json", cfg)]) == EXIT_CONFIG
    assert "burg" in capsys.readouterr().err


@pytest.mark.parametrize("bad", [
    {"geometry": "euclidean", "phi": "huber"},
    {"geometry": "euclidean", "phi": "l1", "suites": ["nope"]},
    {"geometry": "euclidean", "phi": "l1", "points": [[1, 2], [3]]},
    {"geometry": "euclidean", "phi": "l1", "tolerances": {"bogus": 1}},
    {"geometry": "euclidean", "phi": "l1", "points": {"count": 0}},
    {"suites": ["theorem"]},
])
def test_config_errors(tmp_path, bad, capsys):
    assert main(["run", write(tmp_path, "c.json", bad)]) == EXIT_CONFIG


def test_missing_or_invalid_files(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.json")]) == EXIT_CONFIG
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["run", str(p)]) == EXIT_CONFIG
    assert main(["bogus-command"]) == EXIT_CONFIG
    assert main(["frame", str(tmp_path / "v.csv"), write(tmp_path, "c.json", THEOREM)]) == EXIT_CONFIG


def test_residual_failure_exits_one(tmp_path, capsys):
    # residuals of the l_p solve are tiny but not exactly zero
    cfg = {"geometry": {"name": "pnorm_energy", "params": {"p": 3}}, "phi": "l1", "dim": 3,
           "points": {"count": 5, "seed": 2}}
    code = main(["run", write(tmp_path, "c.json", cfg), "--tol-override", "gap_tol=1e-300",
                 "--tol-override", "vector_tol=1e-300", "--out", str(tmp_path / "r.json")])
    assert code == EXIT_FAIL
    assert not json.loads((tmp_path / "r.json").read_text())["passed"]


def test_bad_override_syntax(tmp_path, capsys):
    assert main(["run", write(tmp_path, "c.json", THEOREM), "--tol-override", "gap_tol"]) == EXIT_CONFIG


def test_oracle_suite_on_entropy_linear(tmp_path):
    cfg = {"geometry": "shannon_entropy", "phi": "linear", "dim": 2,
           "points": {"count": 3, "seed": 1}, "suites": ["oracle"]}
    rep = run_config(cfg)
    assert rep["passed"]
    det = rep["suite_details"]["oracle"]
    assert det["checks"] > 0
    for ident in det["identities"].values():
        assert ident["worst_ratio"] <= 1.0


def test_all_suites_and_csv(tmp_path, capsys):
    cfg = {"scenarios": [
        {"geometry": {"name": "pnorm_energy", "params": {"p": 3}}, "phi": "orthant", "dim": 3,
         "points": [[1, -2, 0.5], [0.1, 0.2, -3]]},
        {"geometry": "shannon_entropy", "phi": "box", "dim": 2, "points": {"count": 2}},
    ], "suites": ["theorem", "cone", "resolvent", "hilbert"], "seed": 11}
    csv_path = tmp_path / "res.csv"
    code = main(["run", write(tmp_path, "c.json", cfg), "--out", str(tmp_path / "r.json"),
                 "--csv", str(csv_path)])
    assert code == EXIT_OK
    rows = list(csv.reader(csv_path.open()))
    assert rows[0][:4] == ["scenario", "point", "geometry", "phi"]
    assert len(rows) == 1 + 4


def test_frame_command(tmp_path, capsys):
    vec = tmp_path / "v.csv"
    vec.write_text("1,0\n0,1\n1,1\n")
    cfg = {"geometry": "euclidean", "phi": "orthant", "dim": 2, "points": [[1, -2], [0.5, 0.5]]}
    out = tmp_path / "r.json"
    assert main(["frame", str(vec), write(tmp_path, "c.json", cfg), "--out", str(out)]) == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["suites"]["frame"]["passed"] and rep["suites"]["frame"]["checks"] > 0
    bad = tmp_path / "bad.csv"
    bad.write_text("1,0\n2,0\n")
    assert main(["frame", str(bad), write(tmp_path, "c.json", cfg)]) == EXIT_CONFIG


def test_report_is_deterministic():
    a, b = run_config(THEOREM), run_config(THEOREM)
    assert report_digest(a) == report_digest(b)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert report_digest(run_config(THEOREM, seed=99)) != report_digest(a)


def test_catalog_listing(capsys):
    cat = list_catalog()
    ent = next(g for g in cat["geometries"] if g["name"] == "shannon_entropy")
    assert ent["supercoercive"] is True
    pair = next(p for p in cat["pairings"] if (p["geometry"], p["phi"]) == ("euclidean", "l1"))
    assert pair["cq_primal"] and pair["cq_dual"]
    assert list_catalog(Registry.empty())["pairings"] == []
    assert main(["catalog"]) == EXIT_OK
    assert "shannon_entropy" in capsys.readouterr().out


def test_run_config_rejects_non_object():
    with pytest.raises(ConfigError):
        run_config([1, 2])
