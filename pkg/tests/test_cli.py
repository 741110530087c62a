import json
import time

import numpy as np
import pytest

from mhdfsi.cli import main
from mhdfsi.diagnostics import LEDGER_COLUMNS, read_time_series


def test_zero_run(tmp_path, capsys):
    assert main(["run", "--config", "zero", "--out-dir", str(tmp_path)]) == 0
    cols = read_time_series(tmp_path / "timeseries.csv")
    assert all(not np.any(cols[c]) for c in LEDGER_COLUMNS)
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["eps_rule"] == "eps = dt"
    assert (tmp_path / "snapshots" / "psi.txt").exists()


def test_hundred_steps_monotone_time(tmp_path):
    assert main(["run", "--config", "zero", "--steps-override", "100", "--out-dir", str(tmp_path)]) == 0
    t = read_time_series(tmp_path / "timeseries.csv")["time"]
    assert len(t) == 101 and np.all(np.diff(t) > 0)


def test_smoke_preset_fast(tmp_path):
    t0 = time.perf_counter()
    assert main(["run", "--config", "smoke", "--out-dir", str(tmp_path)]) == 0
    assert time.perf_counter() - t0 < 10.0
    cols = read_time_series(tmp_path / "timeseries.csv")
    assert len(cols["step"]) == 51
    assert np.max(cols["div_b_max"]) <= 1e-12


def test_rerun_from_metadata_is_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", "smoke", "--steps-override", "10", "--out-dir", str(a)]) == 0
    echo = json.loads((a / "metadata.json").read_text())["config_echo"]
    (tmp_path / "echo.ini").write_text(echo)
    assert main(["run", "--config", str(tmp_path / "echo.ini"), "--out-dir", str(b)]) == 0
    assert (a / "timeseries.csv").read_bytes() == (b / "timeseries.csv").read_bytes()


def test_huge_dt_fails_with_diagnostic(tmp_path, capsys):
    cfg = tmp_path / "huge.ini"
    cfg.write_text("[initial]\nvelocity = vortex\nvelocity_amp = 1.0\n[scheme]\ndt = 10\n[run]\nsteps = 5\n")
    code = main(["run", "--config", str(cfg), "--out-dir", str(tmp_path / "o")])
    assert code in (2, 3)
    out = capsys.readouterr().out
    assert "violated" in out or "converge" in out


def test_invalid_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[scheme]\ngamma = 1.4\n")
    assert main(["validate", "--config", str(cfg)]) == 1
    assert "gamma > 3/2" in capsys.readouterr().err


def test_validate_prints_echo(capsys):
    assert main(["--config", "smoke", "validate"]) == 0
    assert "[scheme]" in capsys.readouterr().out


def test_nondim_blood(capsys):
    assert main(["nondim", "--preset", "blood"]) == 0
    out = capsys.readouterr().out
    line = next(l for l in out.splitlines() if l.startswith("displacement_ratio"))
    assert float(line.split(":")[1]) == pytest.approx(2.78e-18, rel=0.01)
    assert "verdict_speed: holds" in out


def test_pillbox_csv(tmp_path):
    assert main(["pillbox", "--out-dir", str(tmp_path)]) == 0
    text = (tmp_path / "pillbox.csv").read_text()
    assert text.startswith("study,size,defect,slope,status")
    assert "identically satisfied" in text
