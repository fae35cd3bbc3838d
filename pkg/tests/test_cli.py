import csv
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from d2dcache import make_zipf, waterfill
from d2dcache.cli import PLACEMENT_COLUMNS, SWEEP_COLUMNS, CliError, main, parse_grid, read_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _header(path):
    return Path(path).read_text().splitlines()[0].split(",")


def test_waterfill_fig2(tmp_path, capsys):
    out = tmp_path / "wf.csv"
    assert main(["waterfill", "--config", str(CONFIGS / "fig2.cfg"), "--out", str(out)]) == 0
    assert _header(out) == list(PLACEMENT_COLUMNS)
    rows = _rows(out)
    assert [int(r["content"]) for r in rows] == list(range(1, 21))
    p = np.array([float(r["p_h"]) for r in rows])
    np.testing.assert_allclose(p[2:6], [0.966, 0.607, 0.328, 0.100], atol=2e-3)
    assert "total_offload_analytic=" in capsys.readouterr().out


def test_flag_overrides_config(tmp_path):
    out = tmp_path / "wf.csv"
    main(["waterfill", "--config", str(CONFIGS / "fig2.cfg"), "--m_h", "6", "--out", str(out)])
    p = np.array([float(r["p_h"]) for r in _rows(out)])
    assert p.sum() == pytest.approx(6, abs=1e-8)


def test_optimize_and_baseline(tmp_path):
    out = tmp_path / "opt.csv"
    assert main(["optimize", "--config", str(CONFIGS / "table1.cfg"), "--out", str(out)]) == 0
    dc = _rows(out)
    assert {r["scheme"] for r in dc} == {"dc"} and len(dc) == 30
    best = float(dc[0]["total_offload_analytic"])
    base = tmp_path / "base.csv"
    assert main(["baseline", "--config", str(CONFIGS / "table1.cfg"), "--out", str(base)]) == 0
    rows = _rows(base)
    assert [r["scheme"] for r in rows[::30]] == ["popular", "even", "nonjoint"]
    assert all(float(r["total_offload_analytic"]) <= best + 1e-9 for r in rows)


def test_optimize_reports_nonconvergence(tmp_path):
    status = main(["optimize", "--max_outer_iters", "1", "--boost", "false", "--out", str(tmp_path / "o.csv")])
    assert status == 3


def test_usertier(tmp_path):
    out = tmp_path / "ut.csv"
    assert main(["usertier", "--lambda_h", "0", "--out", str(out)]) == 0
    p = np.array([float(r["p_ue"]) for r in _rows(out)])
    assert p.sum() == pytest.approx(2, abs=1e-8)


def test_simulate_columns(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--schemes", "popular", "--trials", "20000", "--seed", "3", "--out", str(out)]) == 0
    rows = _rows(out)
    ana, emp, half = (float(rows[0][k]) for k in ("total_offload_analytic", "total_offload_empirical", "ci_halfwidth"))
    assert abs(emp - ana) <= 2 * half
    assert rows[0]["n_trials"] == "20000"


def test_sweep_dominance_and_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--param", "lambda_ue", "--grid", "0:0.003:6"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"\r\n" not in a.read_bytes()
    assert _header(a) == list(SWEEP_COLUMNS)
    rows = _rows(a)
    assert len(rows) == 6 * 4
    for k in range(6):
        point = {r["scheme"]: r for r in rows[4 * k : 4 * k + 4]}
        dc = float(point["dc"]["total_offload_analytic"])
        assert point["dc"]["converged"] == "true" and int(point["dc"]["iterations"]) > 0
        assert point["popular"]["iterations"] == ""
        assert all(dc >= float(point[s]["total_offload_analytic"]) - 1e-6 for s in ("popular", "even", "nonjoint"))


def test_sweep_validate_and_jobs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--param", "alpha", "--grid", "0.25,0.75", "--schemes", "even", "--validate", "--trials", "5000"]
    main(args + ["--out", str(a)])
    main(args + ["--jobs", "2", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    assert all(r["total_offload_empirical"] for r in _rows(a))


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--param", "alpha", "--grid", ""],
        ["sweep", "--param", "alpha", "--grid", "0.5,0.25"],
        ["sweep", "--grid", "0,1"],
        ["waterfill", "--alpha", "2"],
        ["waterfill", "--lambda_h", "0"],
        ["baseline", "--schemes", "bogus"],
        ["optimize", "--config", "/nonexistent.cfg"],
    ],
)
def test_errors_are_one_line(tmp_path, capsys, argv):
    assert main(argv + ["--out", str(tmp_path / "x.csv")]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("d2dcache: error:")


def test_sweep_keeps_going_past_bad_points(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--param", "alpha", "--grid", "0.5,1.5", "--schemes", "even", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0]["total_offload_analytic"] and rows[1]["converged"] == "false"
    assert "warning" in capsys.readouterr().err


def test_grid_parsing():
    assert parse_grid("0 : 0.25 : 5") == [0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("1e-4, 2e-4") == [1e-4, 2e-4]
    with pytest.raises(CliError):
        parse_grid("0:1:0")


def test_config_arithmetic():
    values = read_config(CONFIGS / "table1.cfg")
    assert values["lambda_ue"] == pytest.approx(5000 / (np.pi * 500**2))
    assert values["cache_mode"] == "independent" and values["m_h"] == 8


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "d2dcache", "waterfill", "--config", str(CONFIGS / "fig2.cfg"), "--out", "-"],
        capture_output=True, text=True, check=True,
    )
    assert "scheme,content,popularity" in res.stdout
