from pathlib import Path

import numpy as np
import pytest

from rksampling.config import OUTPUT_ENV, ExperimentConfig
from rksampling.domain import Domain, concentration_ratio
from rksampling.errors import AdmissibilityError, InfeasibleConcentrationError
from rksampling.experiments import (
    CSV_COLUMNS,
    check_assumptions,
    draw_concentrated_function,
    net_experiment,
    prepare,
    regularity_demo,
    run_stability_trial,
    success_curve,
    trial_seed,
    wilson_interval,
)
from rksampling.space import lp_norm

CONFIGS = Path(__file__).resolve().parents[1] / "src" / "rksampling" / "configs"

SMALL = """
[space]
generator = bspline
order = 2
lattice = -4 8
A = 1
B = 3

[domain]
boxes = 0 4

[run]
p = 2
delta = 0.1
tau = 0.01
step = 0.0625
r = 20 80
trials = 15
seed = 11
"""


@pytest.fixture
def small_cfg():
    cfg = ExperimentConfig.from_string(SMALL)
    cfg.name = "small"
    return cfg


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.4038, abs=1e-4) and hi == pytest.approx(0.5962, abs=1e-4)
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == pytest.approx(1.0)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_config_parse_and_defaults(small_cfg):
    assert small_cfg.r_schedule == [20, 80]
    assert small_cfg.trials == 15 and small_cfg.B == 3.0
    assert small_cfg.truncation_eps == small_cfg.tau
    cfg = ExperimentConfig.from_string("[run]\neps = 0.2\nlevel_a = 0.03\n")
    assert cfg.truncation_eps == 0.2 and cfg.a == 0.03


@pytest.mark.parametrize("bad", ["[run]\np = 0.5\n", "[run]\ndelta = 1\n", "[run]\ntau = 0\n",
                                 "[space]\nA = 2\nB = 1\n", "[run]\nr = 0 5\n"])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig.from_string(bad)


def test_config_unknown_generator():
    cfg = ExperimentConfig.from_string("[space]\ngenerator = wavelet\n")
    with pytest.raises(ValueError):
        cfg.build_space()


def test_config_file_name_and_missing(tmp_path):
    p = tmp_path / "mine.ini"
    p.write_text(SMALL)
    assert ExperimentConfig.from_file(p).name == "mine"
    with pytest.raises(FileNotFoundError):
        ExperimentConfig.from_file(tmp_path / "nope.ini")


def test_output_dir_env_override(monkeypatch, small_cfg, tmp_path):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    assert small_cfg.resolved_output_dir() == Path("results")
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "elsewhere"))
    assert small_cfg.resolved_output_dir() == tmp_path / "elsewhere"


def test_shipped_configs_parse():
    for name in ("canonical", "soundness"):
        cfg = ExperimentConfig.from_file(CONFIGS / f"{name}.ini")
        assert cfg.name == name


def test_check_assumptions_canonical():
    rep = check_assumptions(ExperimentConfig.from_file(CONFIGS / "canonical.ini"))
    assert rep.ok, str(rep)


def test_check_assumptions_flags_bad_frame_constants():
    cfg = ExperimentConfig.from_string(SMALL.replace("B = 3", "B = 2"))
    rep = check_assumptions(cfg)
    assert not rep.ok
    assert any(name == "frame constants" and not ok for name, ok, _ in rep.items)


def test_draw_concentrated(small_cfg):
    st = prepare(small_cfg)
    f = draw_concentrated_function(st.space, st.domain, 0.1, 2.0, seed=5, grid=st.grid)
    assert lp_norm(f, 2) == pytest.approx(1.0)
    assert concentration_ratio(f, st.domain, 2) >= 0.9
    g = draw_concentrated_function(st.space, st.domain, 0.1, 2.0, seed=5, grid=st.grid)
    assert np.array_equal(f.values, g.values)


def test_draw_concentrated_infeasible(small_cfg):
    st = prepare(small_cfg)
    with pytest.raises(InfeasibleConcentrationError):
        draw_concentrated_function(st.space, Domain("20 24", check_measure=True), 0.1, 2.0, seed=0, grid=st.grid)


def test_trial_record_consistent(small_cfg):
    st = prepare(small_cfg)
    for t in range(5):
        f = draw_concentrated_function(st.space, st.domain, 0.1, 2.0, seed=trial_seed(11, 200, t, 0), grid=st.grid)
        rec = run_stability_trial(f, st.domain, 200, st.tc, seed=trial_seed(11, 200, t, 1), trial_id=t)
        assert rec.flags_consistent()
        assert rec.success == (rec.pass_lower and rec.pass_upper)
        assert rec.sigma_star == pytest.approx(abs(rec.hS - rec.hL))
        assert rec.concentration >= 0.9
        # with sigma set to the observed deviation the transfer always holds
        assert rec.pass_transfer
        row = rec.as_row()
        assert "timings" not in row and row["trial_id"] == t


def test_success_curve_csv_deterministic(small_cfg, tmp_path):
    t1 = success_curve(small_cfg, output_dir=tmp_path / "a", check=False)
    t2 = success_curve(small_cfg, output_dir=tmp_path / "b", check=False)
    b1, b2 = t1.csv_path.read_bytes(), t2.csv_path.read_bytes()
    assert b1 == b2
    lines = b1.decode().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    assert t1.csv_path.name == "small_curve.csv"
    assert t1.sound


def test_success_curve_env_dir_and_svg(small_cfg, tmp_path, monkeypatch):
    pytest.importorskip("matplotlib")
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    table = success_curve(small_cfg, plot=True, check=False)
    assert table.csv_path == tmp_path / "env" / "small_curve.csv"
    assert table.svg_path.read_text().lstrip().startswith("<?xml")


def test_success_curve_refuses_failed_assumptions(small_cfg):
    small_cfg.B = 2.0
    with pytest.raises(AdmissibilityError):
        success_curve(small_cfg, write=False)


def test_trend_check_detects_drop():
    from rksampling.experiments import CurveRow, ResultTable

    rows = [CurveRow(10, 95, 100, 0.95, 0.89, 0.98, 0.0, 1.0), CurveRow(20, 10, 100, 0.1, 0.05, 0.17, 0.0, 1.0)]
    assert not ResultTable(rows).trend_ok()
    assert ResultTable(rows[:1]).trend_ok()


def test_regularity_demo_value():
    rows = regularity_demo([0.25, 0.1])
    assert all(row.value == pytest.approx(1.0, abs=1e-12) for row in rows)
    with pytest.raises(ValueError):
        regularity_demo([0.5])


def test_net_experiment_small():
    res = net_experiment(2, 0.5, 2.0, probes=100, seed=1, step=1 / 32)
    assert res.ok and res.covered == 100 and res.size <= res.bound
