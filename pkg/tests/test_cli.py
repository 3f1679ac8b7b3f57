import json

import numpy as np
import pytest

from dicke_chaos.cli import (EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, OUT_ENV, ConfigError,
                             RunConfig, Task, main)
from dicke_chaos.presets import FIGURES, figure_configs

SMALL = {"task": "otoc", "model": {"variant": "nqubit_dicke", "lam": 1.2},
         "bath": {"gamma": 0.01, "kappa": 0.01, "temperature": 1.0},
         "geometry": {"n_atoms": 2, "fock_dim": 6}, "grid": {"t_max": 2.0, "n_points": 11}}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_config_roundtrip_and_sweep():
    d = dict(SMALL, sweep={"parameter": "bath.kappa", "values": [0.01, 0.1]})
    cfg = RunConfig.from_dict(d)
    assert RunConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()
    pts = cfg.points()
    assert [p.bath["kappa"] for p in pts] == [0.01, 0.1]
    assert cfg.bath["kappa"] == 0.01 and pts[0].sweep is None


@pytest.mark.parametrize("patch", [
    {"extra": 1},
    {"task": "nope"},
    {"operators": "xy"},
    {"model": {"variant": "nqubit_dicke", "lam": 1.0, "omega_a": -2.0}},
    {"geometry": {"fock_dim": 6}},
    {"grid": {"times": [0.0, 1.0, 0.5]}},
    {"sweep": {"parameter": "lam", "values": [1]}},
])
def test_config_errors(patch):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(dict(SMALL, **patch))


def test_negative_frequency_exits_without_output(tmp_path):
    bad = dict(SMALL, model={"variant": "nqubit_dicke", "lam": 1.0, "omega_a": -2.0})
    out = tmp_path / "out"
    assert main(["otoc", "--config", write_cfg(tmp_path, bad), "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_task_mismatch_and_unknown_figure(tmp_path):
    assert main(["g2", "--config", write_cfg(tmp_path, SMALL)]) == EXIT_CONFIG
    assert main(["reproduce", "--figure", "fig99", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_otoc_run_outputs_are_reproducible(tmp_path):
    path = write_cfg(tmp_path, SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["otoc", "--config", path, "--out", str(a)]) == EXIT_OK
    assert main(["otoc", "--config", path, "--out", str(b)]) == EXIT_OK
    assert {p.name for p in a.iterdir()} == {"C_herm.csv", "metadata.json", "C_herm.svg"}
    assert (a / "C_herm.csv").read_bytes() == (b / "C_herm.csv").read_bytes()
    assert (a / "metadata.json").read_bytes() == (b / "metadata.json").read_bytes()
    data = np.loadtxt(a / "C_herm.csv", delimiter=",", skiprows=1)
    assert data.shape == (11, 3) and data[0, 0] == 0.0
    meta = json.loads((a / "metadata.json").read_text())
    assert meta["config"]["task"] == "otoc"
    assert meta["points"][0]["report"]["max"] == pytest.approx(data[:, 1].max())


def test_sweep_and_env_output_root(tmp_path, monkeypatch):
    d = dict(SMALL, task="lyapunov", sweep={"parameter": "model.lam", "values": [0.5, 1.5]},
             options={"window": [0.5, 2.0]})
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "root"))
    assert main(["lyapunov", "--config", write_cfg(tmp_path, d)]) == EXIT_OK
    out = tmp_path / "root" / "lyapunov"
    assert (out / "C_herm_00.csv").exists() and (out / "C_herm_01.csv").exists()
    meta = json.loads((out / "metadata.json").read_text())
    fits = [p["report"]["fit"] for p in meta["points"]]
    assert all(f["window"] == [0.5, 2.0] and f["mode"] == "raw" for f in fits)


@pytest.mark.parametrize("task,files", [
    ("otoc-suite", {"C_herm.csv", "D.csv", "I.csv", "F.csv"}),
    ("alpha", {"alpha.csv", "sqrt_I_over_D.csv", "sqrt_C_over_I.csv"}),
    ("skew-relations", {"reg_cc.csv", "phys_cc.csv"}),
    ("g2", {"g2.csv", "C_aa.csv", "photon_number.csv"}),
    ("long-time", {"C_herm.csv"}),
])
def test_dynamic_tasks(tmp_path, task, files):
    out = tmp_path / task
    assert main([task, "--config", write_cfg(tmp_path, dict(SMALL, task=task)),
                 "--out", str(out)]) == EXIT_OK
    assert files <= {p.name for p in out.iterdir()}
    report = json.loads((out / "metadata.json").read_text())["points"][0]["report"]
    if task == "g2":
        assert report["bridge_residual"] < 1e-8
        assert report["light"]["statistics"] in ("super-Poissonian", "sub-Poissonian",
                                                 "Poissonian")
    if task == "long-time":
        assert report["long_time"] in ("DecaysToZero", "SaturatesNonzero", "Oscillatory")


def test_ground_scan_and_phase_diagram(tmp_path):
    gs = {"task": "ground-scan", "model": {"variant": "nqubit_dicke"},
          "geometry": {"n_atoms": 4, "fock_dim": "auto", "fock_cap": 40},
          "grid": {"start": 0.0, "stop": 1.5, "num": 16}}
    assert main(["ground-scan", "--config", write_cfg(tmp_path, gs), "--out",
                 str(tmp_path / "gs")]) == EXIT_OK
    meta = json.loads((tmp_path / "gs" / "metadata.json").read_text())
    assert meta["points"][0]["truncation"]["mode"] == "auto"
    pd = {"task": "phase-diagram", "model": {"omega_a": 1.0, "omega_c": 1.0},
          "bath": {"kappa": 1.0}, "grid": {"stop": 2.0, "num": 21, "n_angles": 91}}
    assert main(["phase-diagram", "--config", write_cfg(tmp_path, pd, "pd.json"), "--out",
                 str(tmp_path / "pd")]) == EXIT_OK
    table = np.loadtxt(tmp_path / "pd" / "phase_map.csv", delimiter=",", skiprows=1)
    assert table.shape == (441, 3)
    assert (tmp_path / "pd" / "phase_boundary.svg").exists()


def test_truncation_failure_exit_code(tmp_path):
    d = dict(SMALL, geometry={"n_atoms": 2, "fock_dim": "auto", "fock_cap": 4,
                              "truncation_tol": 1e-10})
    out = tmp_path / "fail"
    assert main(["otoc", "--config", write_cfg(tmp_path, d), "--out", str(out)]) == EXIT_NUMERIC
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["error"]["type"] == "TruncationError"
    assert not list(out.glob("*.csv"))


def test_presets_load():
    assert len(FIGURES) == 15
    for fig in FIGURES:
        assert figure_configs(fig)
    (_, fig2), = figure_configs("fig2")
    assert fig2.geometry["n_atoms"] == 20
    fig9 = dict(figure_configs("fig9"))
    assert fig9[""].sweep["parameter"] == "bath.kappa" and len(fig9[""].points()) == 4
    assert fig9["kappa_0.5_long"].times()[-1] == 60.0
    sub = dict(figure_configs("fig13"))
    assert sub["a"].geometry == dict(sub["a"].geometry, n_atoms=4, spin_mode="full_sectors")
    assert {c.task for _, c in figure_configs("fig12")} == {Task.LONG_TIME}
    with pytest.raises(KeyError):
        figure_configs("fig0")
