import subprocess
import sys

import pytest

from rksampling import __version__
from rksampling.cli import main

from test_experiments import CONFIGS, SMALL


def _kv(out):
    block = out.split("\n\n", 1)[1]
    return dict(line.split("=", 1) for line in block.strip().splitlines() if "=" in line)


def test_constants_sigma(capsys):
    assert main(["constants", "--A", "1", "--B", "1", "--delta", "0.5", "--a", "0.1", "--p", "2"]) == 0
    kv = _kv(capsys.readouterr().out)
    assert float(kv["sigma"]) == pytest.approx(0.17075, abs=5e-6)


def test_constants_window(capsys):
    main(["constants", "--A", "2", "--B", "2", "--delta", "0", "--a", "0.1", "--p", "2", "--D", "2", "--mu", "16"])
    kv = _kv(capsys.readouterr().out)
    assert int(kv["j0"]) == -10 and int(kv["J"]) == 22 and int(kv["G_size"]) == 33


def test_constants_r_min(capsys):
    main(["constants", "--sigma", "0.5", "--d-M", "10", "--G-size", "20"])
    assert int(_kv(capsys.readouterr().out)["r_min"]) == 160000


def test_constants_from_config(capsys):
    assert main(["constants", "--config", str(CONFIGS / "soundness.ini"), "--r", "4000000"]) == 0
    kv = _kv(capsys.readouterr().out)
    assert int(kv["d_M"]) == 4
    assert float(kv["failure_bound"]) < 1e-20


def test_check_assumptions(capsys, tmp_path):
    assert main(["check-assumptions", "--config", str(CONFIGS / "canonical.ini")]) == 0
    assert "overall: PASS" in capsys.readouterr().out
    bad = tmp_path / "bad.ini"
    bad.write_text(SMALL.replace("B = 3", "B = 2"))
    assert main(["check-assumptions", "--config", str(bad)]) == 1
    assert "[FAIL] frame constants" in capsys.readouterr().out


def test_trial_and_csv(capsys, tmp_path, monkeypatch):
    cfgp = tmp_path / "small.ini"
    cfgp.write_text(SMALL)
    monkeypatch.setenv("RKSAMPLING_OUTPUT_DIR", str(tmp_path / "out"))
    assert main(["trial", "--config", str(cfgp), "--r", "100", "--seed", "3", "--csv"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("seed=3")
    assert (tmp_path / "out" / "small_trial.csv").exists()


def test_curve(capsys, tmp_path):
    cfgp = tmp_path / "small.ini"
    cfgp.write_text(SMALL)
    rc = main(["curve", "--config", str(cfgp), "--trials", "5", "--r", "30", "--output-dir", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0 and "sound=True" in out and "seed=11" in out
    assert (tmp_path / "small_curve.csv").read_text().startswith("r,successes,trials")


def test_net(capsys):
    assert main(["net", "--d-M", "1", "--eps-fraction", "0.5", "--probes", "20", "--step", "0.0625"]) == 0
    assert "covered=20/20" in capsys.readouterr().out


def test_demo_regularity(capsys, tmp_path):
    out_csv = tmp_path / "reg.csv"
    assert main(["demo-regularity", "--eps", "0.1", "--csv", str(out_csv)]) == 0
    assert out_csv.read_text().splitlines()[0] == "eps,value,step,window"


def test_version_and_module_entry():
    out = subprocess.run([sys.executable, "-m", "rksampling", "--version"], capture_output=True, text=True)
    assert out.stdout.strip() == __version__


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
