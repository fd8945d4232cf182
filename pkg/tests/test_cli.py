import json
import subprocess
import sys

import numpy as np
import pytest

from circbs.cli import main
from circbs.matrices import matrix_from_json, unitarity_error
from circbs.permanent import permanent_naive


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_circulant(capsys):
    code, out, _ = run(capsys, "gen", "--m", "6", "--count", "2", "--seed", "3")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 2
    obj = json.loads(lines[0])
    u = matrix_from_json(lines[0])
    assert unitarity_error(u) <= 1e-10 and len(obj["phases"]) == 6
    assert np.array_equal(u, np.roll(np.roll(u, 1, 0), 1, 1))


def test_gen_reproducible(capsys):
    a = run(capsys, "gen", "--ensemble", "haar", "--m", "4", "--seed", "9")[1]
    b = run(capsys, "gen", "--ensemble", "haar", "--m", "4", "--seed", "9")[1]
    assert a == b


def test_perm_from_file(tmp_path, capsys):
    a = np.array([[1, 2j], [3, 4]])
    path = tmp_path / "a.json"
    path.write_text(json.dumps({"rows": 2, "cols": 2, "data": [1, 0, 0, 2, 3, 0, 4, 0]}))
    code, out, _ = run(capsys, "perm", str(path))
    res = json.loads(out)
    assert code == 0 and complex(res["re"], res["im"]) == pytest.approx(permanent_naive(a))


def test_perm_random_naive_matches_ryser(capsys):
    r = json.loads(run(capsys, "perm", "--random", "6", "--seed", "1")[1])
    n = json.loads(run(capsys, "perm", "--random", "6", "--seed", "1", "--method", "naive")[1])
    assert r["abs2"] == pytest.approx(n["abs2"], rel=1e-9)


def test_dist_hom_from_matrix(tmp_path, capsys):
    path = tmp_path / "bs.json"
    h = 1 / np.sqrt(2)
    path.write_text(json.dumps({"rows": 2, "cols": 2, "data": [h, 0, h, 0, h, 0, -h, 0]}))
    code, out, _ = run(capsys, "dist", "--matrix", str(path), "--n", "2")
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0
    assert [r["modes"] for r in rows] == [[0, 0], [0, 1], [1, 1]]
    assert [r["probability"] for r in rows] == pytest.approx([0.5, 0, 0.5], abs=1e-12)


def test_dist_csv_to_file(tmp_path, capsys):
    out = tmp_path / "d.csv"
    code, _, _ = run(capsys, "dist", "--n", "2", "--m", "5", "--format", "csv", "--out", str(out))
    lines = out.read_text().splitlines()
    assert code == 0 and lines[0] == "modes,probability" and len(lines) == 16
    assert sum(float(x.split(",")[1]) for x in lines[1:]) == pytest.approx(1.0, abs=1e-12)


def test_run_with_overrides(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nexperiment = good-fraction\nn = 2\nm_per_n3 = 10\nsamples = 1000\n")
    out = tmp_path / "r.jsonl"
    code, stdout, _ = run(capsys, "run", str(cfg), "--seed", "5", "--workers", "2", "--out", str(out))
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert code == 0 and "good-fraction n=2 m=80" in stdout
    assert {r["master_seed"] for r in rows} == {5}


def test_run_format_override(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nexperiment = good-fraction\nn = 2\nm_per_n3 = 10\nsamples = 100\n")
    out = tmp_path / "r.txt"
    assert run(capsys, "run", str(cfg), "--out", str(out), "--format", "jsonl")[0] == 0
    assert out.read_text().startswith("{")


def test_exit_code_config_error(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nexperiment = good-fraction\nn = 2\nm_per_n3 = 10\nspeed = fast\n")
    code, _, err = run(capsys, "run", str(cfg))
    assert code == 2 and "speed" in err


def test_exit_code_guard(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nexperiment = avg-permanent\nn = 9\nm = 100\n")
    out = tmp_path / "never.csv"
    code, _, err = run(capsys, "run", str(cfg), "--out", str(out))
    assert code == 3 and "n <= 8" in err and not out.exists()


def test_exit_code_numerical(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"rows": 2, "cols": 2, "data": [2, 0, 0, 0, 0, 0, 2, 0]}))
    code, _, err = run(capsys, "dist", "--matrix", str(path), "--n", "2", "--seed", "77")
    assert code == 4 and "numerical" in err


def test_numerical_error_echoes_seed(capsys, monkeypatch):
    import circbs.verify as v

    monkeypatch.setattr(v, "CHECKS", [("always fails", lambda seed: (False, "forced"))])
    code, out, err = run(capsys, "verify", "--seed", "31337")
    assert code == 4 and "[FAIL] always fails" in out and "31337" in err


def test_full_scale_flag(tmp_path, capsys, monkeypatch):
    seen = {}
    import circbs.experiments as ex

    monkeypatch.setattr(ex, "run_campaign", lambda cfg, echo: seen.setdefault("cfg", cfg))
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nexperiment = good-fraction\nn = 2\nm_per_n3 = 10\n")
    assert run(capsys, "run", str(cfg), "--paper-scale")[0] == 0
    assert seen["cfg"].samples == 5_000_000


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0 and out.count("[PASS]") == 7


def test_console_script_module_entry():
    res = subprocess.run([sys.executable, "-m", "circbs.cli", "perm", "--random", "3"], capture_output=True, text=True)
    assert res.returncode == 0 and "abs2" in res.stdout
