import csv
import math
import subprocess
import sys

import pytest

from logoopt import theory
from logoopt.cli import main


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def without_wall(path):
    rows = read_rows(path)
    return [{k: v for k, v in r.items() if k != "wall_ms"} for r in rows]


def test_bench_sin1_reaches_target(capsys, tmp_path):
    out = tmp_path / "sin1.csv"
    code = main(["bench", "sin1", "logo-adaptive", "--target", "1e-4", "--nmax", "4000", "--out", str(out)])
    assert code == 0
    name, algo, n_at_target, wall = capsys.readouterr().out.strip().split(",")
    assert (name, algo) == ("sin1", "logo-adaptive") and int(n_at_target) <= 34 and float(wall) >= 0
    rows = read_rows(out)
    assert list(rows[0]) == ["n", "N", "best_value", "error", "wall_ms", "w"]
    assert int(rows[-1]["N"]) == int(n_at_target)
    best = [float(r["best_value"]) for r in rows]
    err = [float(r["error"]) for r in rows]
    assert best == sorted(best) and err == sorted(err, reverse=True)


def test_bench_budget_exhausted(capsys, tmp_path):
    out = tmp_path / "short.csv"
    assert main(["bench", "sin1", "logo-adaptive", "--nmax", "10", "--out", str(out)]) == 3
    assert len(read_rows(out)) <= 10
    assert capsys.readouterr().out.split(",")[:3] == ["sin1", "logo-adaptive", "NA"]


def test_bench_rosenbrock10_soo_gray_cell(capsys):
    assert main(["bench", "rosenbrock10", "soo", "--target", "1e-4", "--nmax", "8000"]) == 3
    assert capsys.readouterr().out.split(",")[2] == "NA"


def test_usage_errors(capsys):
    assert main(["bench", "nosuch"]) == 2
    assert main(["bench", "sin1", "--L", "3"]) == 2
    assert main(["bench", "sin1", "logo"]) == 2
    assert main(["bench", "sin1", "soo", "--w", "3"]) == 2
    assert main(["plan", "--mdp", "vent-world"]) == 2
    assert main(["plan", "--mdp", "vent-world", "--L", "-1"]) == 2
    assert main(["bound", "--alpha", "-1"]) == 2
    assert main([]) == 2


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sin1 with a tiny budget\nnmax = 10\nalgo = logo\nw = 2\n", encoding="utf-8")
    out = tmp_path / "a.csv"
    assert main(["bench", "sin1", "--config", str(cfg), "--out", str(out)]) == 3
    assert {r["w"] for r in read_rows(out)} == {"2"}
    assert main(["bench", "sin1", "--config", str(cfg), "--w", "3", "--out", str(out)]) == 3
    assert {r["w"] for r in read_rows(out)} == {"3"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("L = 3\n", encoding="utf-8")
    assert main(["bench", "sin1", "--config", str(bad)]) == 2


def test_plan_pruning_pair(tmp_path, capsys):
    full, pruned = tmp_path / "inf.csv", tmp_path / "L1.csv"
    assert main(["plan", "--mdp", "vent-world", "--L", "inf", "--nmax", "121", "--out", str(full)]) == 0
    assert main(["plan", "--mdp", "vent-world", "--L", "1", "--nmax", "121", "--out", str(pruned)]) == 0
    a, b = read_rows(full), read_rows(pruned)
    assert list(a[0]) == ["n", "m_steps", "best_value", "wall_ms"]
    assert abs(float(a[-1]["best_value"]) - float(b[-1]["best_value"])) <= 1e-9
    assert int(b[-1]["m_steps"]) < int(a[-1]["m_steps"])
    assert "best_x=" in capsys.readouterr().out


def test_plan_one_worker_csv_equals_serial(tmp_path):
    serial, par = tmp_path / "s.csv", tmp_path / "p.csv"
    assert main(["plan", "vent-world", "--L", "1", "--nmax", "81", "--out", str(serial)]) == 0
    assert main(["plan", "vent-world", "--L", "1", "--nmax", "81", "--workers", "1", "--out", str(par)]) == 0
    assert without_wall(serial) == without_wall(par)


def test_bound_table(tmp_path):
    out = tmp_path / "bound.csv"
    assert main(["bound", "--nmax", "400", "--w", "1", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 400 and list(rows[0]) == ["n", "bound"]
    s = theory.SmoothnessParams(1.0, 1.0, 2.0, 1)
    C = s.nu**-1
    for n in (1, 2, 3, 10, 50, 99, 100, 200, 333, 400):
        expected = s.c * math.exp(-min(math.sqrt(n) / C - 2, math.sqrt(n) - 1) * math.log(1 / s.gamma))
        assert float(rows[n - 1]["bound"]) == pytest.approx(expected, rel=1e-14)
    values = [float(r["bound"]) for r in rows]
    assert values == sorted(values, reverse=True) and values[-1] < values[0]


def test_floats_round_trip(tmp_path):
    out = tmp_path / "b.csv"
    main(["bench", "branin", "soo", "--nmax", "60", "--out", str(out)])
    for row in read_rows(out):
        assert "%.17g" % float(row["best_value"]) == row["best_value"]


def test_module_entry_point_and_logging(tmp_path):
    env_run = subprocess.run(
        [sys.executable, "-m", "logoopt", "bench", "sin1", "--nmax", "10"],
        capture_output=True, text=True, env={"LOGOOPT_LOG": "info", "PATH": ""},
    )
    assert env_run.returncode == 3 and "LOGO finished" in env_run.stderr
    bad = subprocess.run(
        [sys.executable, "-m", "logoopt", "bound"], capture_output=True, text=True, env={"LOGOOPT_LOG": "loud"}
    )
    assert bad.returncode == 2
