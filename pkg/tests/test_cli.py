import json
import math

import pytest

from fluidspan.cli import main


def test_bounds_generic_endpoint(capsys):
    code = main(["bounds", "--model", "generic", "--c1", "1", "--c2", "1",
                 "--c3", "1", "--kappa", "1", "--zeta", "1",
                 "--log10-delta", repr(math.log10(0.99) - math.e**2 / math.log(10))])
    out = capsys.readouterr().out
    assert code == 0
    assert "0.693147" in out


def test_bounds_mhd_prints_log_space(capsys, tmp_path):
    code = main(["bounds", "--model", "mhd", "--c", "1", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "log10(delta0) = -3.6671" in out.replace("e+12", "")  # ~ -3.667e12
    report = json.loads((tmp_path / "bounds.json").read_text())
    assert report["log10_delta0"] < -1e12  # never materialized as 0.0


def test_bounds_hypothesis_violation_exit_code(capsys):
    code = main(["bounds", "--model", "boussinesq", "--c", repr(math.e)])
    assert code == 4


def test_bounds_iie_continuation(capsys):
    code = main(["bounds", "--model", "iie-continuation", "--c", "1",
                 "--delta", "1e-20"])
    out = capsys.readouterr().out
    assert code == 0
    assert "U budget" in out


def test_run_invalid_config_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("model = navier\n")
    code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 2

    cfg2 = tmp_path / "bad2.cfg"
    cfg2.write_text("not_a_key = 3\n")
    assert main(["run", "--config", str(cfg2)]) == 2

    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_run_and_sweep_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "model = boussinesq\nnx = 32\nny = 32\ndelta = 0.1\n"
        "t_end = 0.1\ndt_max = 0.02\nparticle_m = 8\n"
    )
    code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert code == 0
    assert (tmp_path / "out" / "run.csv").exists()
    assert (tmp_path / "out" / "run_meta.json").exists()

    code = main(["sweep", "--config", str(cfg), "--deltas", "0.5,0.1",
                 "--out", str(tmp_path / "sw")])
    assert code == 0
    lines = (tmp_path / "sw" / "sweep.csv").read_text().strip().splitlines()
    assert len(lines) == 3


def test_sweep_duplicate_deltas_exit_2(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model = euler\nnx = 32\nny = 32\nt_end = 0.05\n")
    assert main(["sweep", "--config", str(cfg), "--deltas", "0.1,0.1"]) == 2


def test_verify_unknown_suite_exit_2(capsys):
    assert main(["verify", "--suite", "nope"]) == 2
