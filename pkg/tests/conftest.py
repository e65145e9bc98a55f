import numpy as np
import pytest

from aerobat.model import AerobatParams


@pytest.fixture(scope="session")
def params():
    return AerobatParams()


def random_state(rng, attitude=0.8, joints=1.2, speed=2.0):
    """Random coordinates and rates well away from gimbal lock."""
    q = np.concatenate([
        rng.uniform(-1, 1, 3),
        rng.uniform(-attitude, attitude, 3),
        rng.uniform(-joints, joints, 2),
    ])
    dq = rng.uniform(-speed, speed, 8)
    return q, dq


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def quick_run(params, duration=0.2, dt=1e-4, gait=None, ks=None, aero=None, **scenario):
    """Short simulation on the sinusoidal gait unless a linkage is given."""
    from aerobat.aero import AeroConfig
    from aerobat.disturbance import Scenario
    from aerobat.sim import SimConfig, run_scenario

    scenario.setdefault("gait_source", "ks" if ks is not None else "sinusoid")
    scenario.setdefault("step_window", (0.0, 0.0))
    sc = Scenario(**scenario)
    sim = SimConfig(dt=dt, duration=duration)
    return run_scenario(params, ks, aero or AeroConfig(), sc, sim, gait=gait)


@pytest.fixture(scope="session")
def cli_default_run(tmp_path_factory):
    """``aerobat simulate`` on the shipped config; returns the output directory."""
    from aerobat.cli import main

    out = tmp_path_factory.mktemp("default")
    assert main(["simulate", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="session")
def cli_seed7_runs(tmp_path_factory):
    """Two ``aerobat simulate --seed 7`` runs into separate directories."""
    from aerobat.cli import main

    outs = [tmp_path_factory.mktemp(f"seed7_{i}") for i in range(2)]
    for out in outs:
        assert main(["simulate", "--seed", "7", "--out", str(out)]) == 0
    return outs


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
