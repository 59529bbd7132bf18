import json

import pytest

from polyauto.cli import main
from polyauto.io import read_csv, read_pgm, sha256_file, write_csv

from conftest import CONFIGS


def run(tmp_path, name, *args, config="horseshoe"):
    out = tmp_path / name
    code = main([args[0], "--config", str(CONFIGS / f"{config}.json"), "--out", str(out), *args[1:]])
    return code, out


def test_info_on_h1(tmp_path, capsys):
    code, out = run(tmp_path, "info", "info", config="h1")
    assert code == 0
    info = {r["key"]: r["value"] for r in read_csv(out / "info.csv")}
    assert (info["d"], info["d_inverse"], info["l"]) == ("2", "4", "2")
    assert (info["dim_I_minus"], info["dim_I_plus"], info["I_disjoint"]) == ("1", "0", "true")
    assert "d=2" in capsys.readouterr().out


def test_manifest_lists_artifacts(tmp_path):
    code, out = run(tmp_path, "info", "info")
    man = json.loads((out / "manifest.json").read_text())
    assert man["subcommand"] == "info" and man["seed"] == 20240601
    assert man["config_sha256"] == sha256_file(CONFIGS / "horseshoe.json")
    assert man["files"] == {"info.csv": sha256_file(out / "info.csv")}
    assert {"numpy", "sympy", "python", "polyauto"} <= set(man["versions"])


def test_unknown_subcommand_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate", "--config", "x.json"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["periodic", "--config", str(CONFIGS / "horseshoe.json"), "--period", "two"])
    assert e.value.code == 2


def test_bad_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"map": {"family": "henon", "c": -6, "q": 1}}')
    assert main(["info", "--config", str(bad), "--out", str(tmp_path / "o")]) == 3
    assert "field 'map.q'" in capsys.readouterr().err


def test_filtration_violation_exit_code(tmp_path):
    cfg = json.loads((CONFIGS / "horseshoe.json").read_text())
    cfg["radius"] = 0.1
    path = tmp_path / "small.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "fv"
    code = main(["filtration-verify", "--config", str(path), "--out", str(out), "--samples", "500"])
    assert code == 4
    rows = read_csv(out / "filtration.csv")
    assert any(int(r["violations"]) > 0 and r["witness"] for r in rows)
    assert (out / "manifest.json").exists()


def test_filtration_passes_at_fixture_radius(tmp_path):
    code, out = run(tmp_path, "fv", "filtration-verify", "--samples", "4000")
    assert code == 0
    assert read_csv(out / "filtration_summary.csv")[0]["violations"] == "0"


def test_classify_grid_outputs(tmp_path):
    code, out = run(tmp_path, "cg", "classify-grid", "--grid", "16", config="attracting")
    assert code == 0
    img = read_pgm(out / "classify.pgm")
    assert img.shape == (16, 16)
    assert len(read_csv(out / "classify.csv")) == 256


def test_periodic_is_deterministic_across_workers(tmp_path):
    _, a = run(tmp_path, "w1", "periodic", "--period", "4", "--workers", "1")
    _, b = run(tmp_path, "w2", "periodic", "--period", "4", "--workers", "2")
    for name in ("census.csv", "periodic.csv", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = read_csv(a / "census.csv")
    assert [int(r["fixed_points"]) for r in rows] == [2, 4, 8, 16]


def test_pressure_and_entropy(tmp_path):
    code, out = run(tmp_path, "pr", "pressure", "--kmax", "4", "--t-grid", "0:2:5")
    assert code == 0
    assert [float(r["t"]) for r in read_csv(out / "pressure.csv")] == [0.0, 0.5, 1.0, 1.5, 2.0]
    ent = read_csv(out / "entropy.csv")
    assert [int(r["count"]) for r in ent] == [2, 4, 8, 16]


def test_nonpositive_counts_are_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as e:
        run(tmp_path, "pr", "pressure", "--kmax", "0")
    assert e.value.code == 2


def test_failed_hypothesis_exit_code(tmp_path, capsys):
    code, out = run(tmp_path, "sw", "sweep", "--from", "0", "--to", "1", config="shiftlike3")
    assert code == 4
    assert "single quadratic Henon stage" in capsys.readouterr().err
    assert (out / "manifest.json").exists()


def test_boxdim_saddles(tmp_path):
    code, out = run(tmp_path, "bd", "boxdim", "--kmax", "5", "--scales", "1:6",
                    config="horseshoe_a01")
    assert code == 0
    fit = read_csv(out / "boxdim_fit.csv")[0]
    assert 0.0 <= float(fit["slope"]) <= 4.0
    assert len(read_csv(out / "boxdim.csv")) == 6


def test_growth_and_green(tmp_path):
    code, out = run(tmp_path, "gr", "growth", "--kmax", "6", "--period", "4",
                    config="horseshoe_a01")
    assert code == 0
    s = {r["direction"]: float(r["s"]) for r in read_csv(out / "growth_summary.csv")}
    assert s["plus"] > 0 and s["minus"] > 0
    code, out = run(tmp_path, "g", "green", "--grid", "8")
    assert code == 0
    assert read_pgm(out / "green.pgm").shape == (8, 8)


def test_write_csv_formats(tmp_path):
    p = write_csv(tmp_path / "x.csv", [{"a": 0.1, "b": True, "c": None, "d": 3}])
    assert p.read_bytes() == b"a,b,c,d\n0.1,true,,3\n"
