import json
import subprocess
import sys

import pytest

from fpmix.cli import EXIT_CHECKS, EXIT_CONFIG, EXIT_OK, build_parser, main


def test_required_flags_exist():
    p = build_parser()
    args = p.parse_args(["--preset", "two_diatomic", "--solver", "grid", "--t-end", "1", "--dt", "0.01",
                         "--out", "x", "--seed", "5", "--mode", "positivity"])
    assert args.solver == "grid" and args.t_end == 1.0 and args.seed == 5 and args.mode == "positivity"
    with pytest.raises(SystemExit):
        p.parse_args(["--solver", "spectral"])
    with pytest.raises(SystemExit):
        p.parse_args(["--preset", "a", "--config", "b.yaml"])


def test_preset_run_writes_outputs(tmp_path, capsys):
    rc = main(["--preset", "two_diatomic", "--solver", "ode", "--t-end", "1", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "PASS  energy_conservation" in out
    assert (tmp_path / "figures" / "temperatures.png").stat().st_size > 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["t_end"] == pytest.approx(1.0)


def test_config_file_and_bad_regime(tmp_path, capsys):
    rc = main(["--preset", "two_diatomic", "--solver", "ode", "--t-end", "0.1", "--out", str(tmp_path / "a"),
               "--no-figures"])
    assert rc == EXIT_OK
    cfg = (tmp_path / "a" / "config.yaml").read_text()
    bad = tmp_path / "bad.yaml"
    bad.write_text(cfg.replace("delta: 0.6", "delta: 2.0"))
    assert main(["--config", str(bad), "--out", str(tmp_path / "b")]) == EXIT_CONFIG
    assert "δ ≤ 1" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_fail_on_check(tmp_path):
    args = ["--preset", "mono_poly", "--solver", "ode", "--out", str(tmp_path), "--no-figures"]
    assert main(args) == EXIT_OK
    assert main(args + ["--fail-on-check"]) == EXIT_CHECKS


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fpmix", "--list-presets"], capture_output=True, text=True, check=True)
    assert "two_diatomic" in proc.stdout.split()
