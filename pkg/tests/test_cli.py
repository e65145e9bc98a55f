import csv
import hashlib
import json

import matplotlib.pyplot as plt
import numpy as np
import pytest

from aerobat.cli import main
from aerobat.config import default_config_path
from aerobat.logio import read_log
from aerobat.plotting import draw_family


@pytest.fixture(scope="module")
def short_config(tmp_path_factory):
    """The shipped config cut to 1.5 s with the step on (0.2, 1.0]."""
    text = default_config_path().read_text()
    text = text.replace("duration = 2.0", "duration = 1.5")
    text = text.replace("step_window = [1.0, 1.6]", "step_window = [0.2, 1.0]")
    path = tmp_path_factory.mktemp("cfg") / "short.toml"
    path.write_text(text)
    return path


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_simulate_default(cli_default_run):
    m = json.loads((cli_default_run / "metrics.json").read_text())
    assert set(m["r2"]) == {"x", "y", "z"}
    assert all(isinstance(m["r2"][a], float) for a in "xyz")
    assert m["seed"] == 0
    assert m["config"]["observer"]["gain"] == 250.0
    assert "observer.gain" in m["non_canonical"]
    assert m["step_response"]["axis"] == "z"
    assert (cli_default_run / "log.csv").stat().st_size > 0


def test_seed_gives_identical_bytes(cli_seed7_runs):
    a, b = (d / "log.csv" for d in cli_seed7_runs)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("# aerobat-log schema=1 seed=7 ")


def test_missing_mass_key(tmp_path, capsys):
    text = default_config_path().read_text().replace("m_B = 0.04\n", "")
    cfg = tmp_path / "no_mass.toml"
    cfg.write_text(text)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "model.m_B" in capsys.readouterr().err
    assert not (tmp_path / "o" / "log.csv").exists()


def test_metrics_self_comparison(cli_seed7_runs, tmp_path, capsys):
    log = cli_seed7_runs[0] / "log.csv"
    out = tmp_path / "m.json"
    assert main(["metrics", str(log), "--truth", "F", "--estimate", "F", "--out", str(out)]) == 0
    m = json.loads(out.read_text())
    assert m["r2"] == {"x": 1.0, "y": 1.0, "z": 1.0}
    assert json.loads(capsys.readouterr().out) == m


def test_metrics_step_window(cli_seed7_runs, capsys):
    log = cli_seed7_runs[0] / "log.csv"
    assert main(["metrics", str(log), "--window", "1.0,1.6", "--gain", "250"]) == 0
    step = json.loads(capsys.readouterr().out)["step_response"]
    assert step["rise_time"] == pytest.approx(np.log(20) / 250, rel=0.1)
    assert main(["metrics", str(log), "--window", "1.0"]) == 2


def test_metrics_schema_mismatch(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("# aerobat-log schema=1 seed=0 dt=0.0001 columns=2\nt,x\n0,1\n")
    assert main(["metrics", str(bad)]) == 1
    assert "SchemaMismatch" in capsys.readouterr().err


def test_plot_forces(cli_seed7_runs, tmp_path):
    out = tmp_path / "plots"
    assert main(["plot", str(cli_seed7_runs[0] / "log.csv"), "--channels", "forces",
                 "--out", str(out)]) == 0
    assert [p.name for p in out.iterdir()] == ["forces.svg"]
    # one truth and one estimate trace per axis
    svg = (out / "forces.svg").read_text()
    assert svg.count('id="line2d_') >= 6


def test_plot_empty_channels(cli_seed7_runs, tmp_path):
    out = tmp_path / "none"
    assert main(["plot", str(cli_seed7_runs[0] / "log.csv"), "--channels", "",
                 "--out", str(out)]) == 0
    assert not out.exists() or not any(out.iterdir())


def test_plot_unknown_channel(cli_seed7_runs, tmp_path):
    assert main(["plot", str(cli_seed7_runs[0] / "log.csv"), "--channels", "wake",
                 "--out", str(tmp_path)]) == 1


def test_topview_covers_path(cli_seed7_runs, tmp_path):
    log = read_log(cli_seed7_runs[0] / "log.csv")
    out = tmp_path / "top"
    assert main(["plot", str(cli_seed7_runs[0] / "log.csv"), "--channels", "topview,trajectory",
                 "--format", "pdf", "--out", str(out)]) == 0
    assert (out / "topview.pdf").stat().st_size > 0
    fig = plt.figure()
    draw_family(log, "topview", fig)
    ax = fig.axes[0]
    (x0, x1), (y0, y1) = ax.get_xlim(), ax.get_ylim()
    assert x0 <= log["x"].min() and x1 >= log["x"].max()
    assert y0 <= log["y"].min() and y1 >= log["y"].max()
    plt.close(fig)


def _read_sweep(out):
    with open(out / "sweep.csv") as fh:
        return list(csv.DictReader(fh))


def test_sweep_gain_orders_rise_time(short_config, tmp_path):
    before = _digest(short_config)
    out = tmp_path / "gain"
    assert main(["sweep", "--config", str(short_config), "--grid", "observer.gain=5,20,80",
                 "--out", str(out), "--jobs", "1"]) == 0
    rows = _read_sweep(out)
    assert [float(r["observer.gain"]) for r in rows] == [5.0, 20.0, 80.0]
    rise = [float(r["rise_time"]) for r in rows]
    assert rise[0] > rise[1] > rise[2]
    assert all(r["error"] == "" for r in rows)
    assert _digest(short_config) == before


def test_sweep_dt_grid_independence(short_config, tmp_path):
    out = tmp_path / "dt"
    assert main(["sweep", "--config", str(short_config), "--grid", "sim.dt=0.001,0.0001",
                 "--out", str(out), "--jobs", "2"]) == 0
    coarse, fine = _read_sweep(out)
    for ax in "xyz":
        assert abs(float(coarse[f"r2_{ax}"]) - float(fine[f"r2_{ax}"])) <= 0.01


def test_sweep_empty_grid(tmp_path):
    out = tmp_path / "empty"
    assert main(["sweep", "--out", str(out)]) == 0
    text = (out / "sweep.csv").read_text().splitlines()
    assert len(text) == 1 and text[0].startswith("r2_x,")


def test_sweep_records_failures(short_config, tmp_path):
    out = tmp_path / "fail"
    assert main(["sweep", "--config", str(short_config), "--grid", "observer.gain=-1",
                 "--out", str(out), "--jobs", "1"]) == 0
    (row,) = _read_sweep(out)
    assert "observer_gain" in row["error"]


def test_usage_errors(tmp_path):
    assert main([]) == 2
    assert main(["simulate", "--bogus"]) == 2
    assert main(["sweep", "--grid", "observer.gain", "--out", str(tmp_path)]) == 2
    assert main(["sweep", "--grid", "observer.nope=1", "--out", str(tmp_path)]) == 1


def test_output_root_from_environment(cli_seed7_runs, tmp_path, monkeypatch):
    monkeypatch.setenv("AEROBAT_OUT", str(tmp_path / "env"))
    assert main(["plot", str(cli_seed7_runs[0] / "log.csv"), "--channels", "joints"]) == 0
    assert (tmp_path / "env" / "joints.svg").exists()


def test_shipped_config_untouched(cli_default_run):
    text = default_config_path().read_text()
    assert "gain = 250.0" in text and "duration = 2.0" in text


def test_reference_log_metrics(tmp_path):
    from importlib import resources

    ref = resources.files("aerobat") / "data" / "reference_log.csv"
    out = tmp_path / "ref.json"
    assert main(["metrics", str(ref), "--out", str(out)]) == 0
    r2 = json.loads(out.read_text())["r2"]
    assert r2["y"] >= 0.95 and r2["z"] >= 0.95
