"""One test per acceptance criterion; each records a PASS/FAIL line."""

import dataclasses
import json

import numpy as np
import pytest

from aerobat.aero import AeroConfig
from aerobat.config import default_config, with_overrides
from aerobat.disturbance import Scenario, sample_noise
from aerobat.linkage import default_ks_config, ks_initial_state, ks_velocity_accel, simulate_ks
from aerobat.metrics import energy_drift, raw_step_response, step_response
from aerobat.model import coriolis_matrix, forward_dynamics, kinetic_energy, mass_matrix
from aerobat.model import potential_energy
from aerobat.observer import observer_init, observer_step
from aerobat.runner import run_config
from aerobat.sim import SimConfig, rk4_step, run_scenario
from conftest import ACCEPTANCE_LINES, random_state


def report(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


# 1 ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def gain20_runs():
    cfg = with_overrides(default_config(), {"observer.gain": 20.0})
    no_step = with_overrides(cfg, {"scenario.step_magnitude": 0.0})
    return run_config(cfg), run_config(no_step)


def test_1_observer_step_recovery(gain20_runs):
    on, off = gain20_runs
    target = 3.0 / 20.0
    details, ok = [], True
    for ax in ("z", "y"):
        i = "xyz".index(ax)
        sr = step_response(on.t, on.force_truth[:, i], on.force_estimate[:, i], (1.0, 1.6), 20.0,
                           baseline_truth=off.force_truth[:, i],
                           baseline_estimate=off.force_estimate[:, i])
        raw = raw_step_response(on.t, on.force_truth[:, i], on.force_estimate[:, i], (1.0, 1.6),
                                baseline_truth=off.force_truth[:, i],
                                baseline_estimate=off.force_estimate[:, i])
        ok &= abs(sr.rise_time - target) <= 0.2 * target
        ok &= abs(sr.decay_time - target) <= 0.2 * target
        details.append(f"F{ax} rise {sr.rise_time:.4f} s decay {sr.decay_time:.4f} s "
                       f"(raw {raw.rise_time:.4f}/{raw.decay_time:.4f})")
    report(1, "step recovery at K=20", ok,
           f"{'; '.join(details)}; target {target:.3f} s +/-20%")


# 2 ---------------------------------------------------------------------------

#: R^2 of the shipped default run (seed 0), pinned after the first computation.
PINNED_R2 = {"x": 0.97621, "y": 0.97324, "z": 0.97123}


def test_2_r_squared_default_config(cli_default_run):
    m = json.loads((cli_default_run / "metrics.json").read_text())
    r2 = m["r2"]
    first, second, third = m["axes_by_variance"]
    ok = r2[first] >= 0.95 and r2[second] >= 0.95 and r2[third] >= 0.70
    report(2, "R^2 on the default config", ok,
           "  ".join(f"F{a}={r2[a]:.4f}" for a in "xyz")
           + f" (by variance {first},{second} >= 0.95; {third} >= 0.70)")


def test_2_r_squared_pinned(cli_default_run):
    r2 = json.loads((cli_default_run / "metrics.json").read_text())["r2"]
    drift = max(abs(r2[a] - PINNED_R2[a]) for a in "xyz")
    report(2, "R^2 regression reference", drift <= 1e-4,
           f"max deviation from pinned values {drift:.1e}")


# 3 ---------------------------------------------------------------------------


def test_3_null_disturbance():
    cfg = with_overrides(default_config(), {"scenario.noise_sigma": 0.0,
                                            "scenario.step_magnitude": 0.0,
                                            "scenario.base_gain": 0.0})
    log = run_config(cfg)
    peak = float(np.abs(log.force_estimate).max())
    report(3, "zero-disturbance null test", peak <= 1e-6,
           f"max |Fhat| = {peak:.2e} N over 2 s (limit 1e-6)")


# 4 ---------------------------------------------------------------------------


def test_4_analytic_filter_response():
    K, dt, u = 20.0, 1e-4, 0.15
    p0 = np.linspace(-0.2, 0.3, 8)
    obs = observer_init(p0, K)
    for n in range(1, 2501):
        p = p0.copy()
        p[2] += u * n * dt  # momentum driven by the unknown force alone
        obs = observer_step(obs, p, None, None, None, dt)
    expected = u * (1 - np.exp(-5.0))
    err = abs(obs.r[2] - expected) / expected
    report(4, "analytic filter response", err <= 0.01,
           f"r(0.25 s) = {obs.r[2]:.6f}, expected {expected:.6f} (rel err {err:.1e})")


# 5 ---------------------------------------------------------------------------


def test_5_energy_conservation(params):
    rng = np.random.default_rng(55)
    dq = rng.uniform(-1, 1, 8)
    sim = SimConfig(duration=2.0, velocity=tuple(dq[:3]), euler_rates=tuple(dq[3:6]),
                    joints=(0.3, -0.2, dq[6], dq[7]))
    sc = Scenario(noise_sigma=0.0, base_gain=0.0, step_magnitude=0.0, step_window=(0.0, 0.0),
                  aero=False, actuated=False)
    log = run_scenario(params, None, AeroConfig(), sc, sim)
    drift = energy_drift(log["T"], log["U"])
    report(5, "energy conservation", drift <= 1e-6, f"relative drift {drift:.2e} over 2 s")


# 6 ---------------------------------------------------------------------------


def test_6_lagrangian_identities(params):
    rng = np.random.default_rng(66)
    worst = dict(sym=0.0, skew=0.0, split=0.0, eig=np.inf)
    h = 1e-6
    for _ in range(1000):
        q, dq = random_state(rng)
        M = mass_matrix(q, params)
        C = coriolis_matrix(q, dq, params)
        Md = (mass_matrix(q + h * dq, params) - mass_matrix(q - h * dq, params)) / (2 * h)
        v = rng.normal(size=8)
        worst["sym"] = max(worst["sym"], np.abs(M - M.T).max())
        worst["eig"] = min(worst["eig"], np.linalg.eigvalsh(M).min())
        worst["skew"] = max(worst["skew"], abs(v @ (Md - 2 * C) @ v) / (v @ v))
        worst["split"] = max(worst["split"], np.abs(Md - C - C.T).max())
    ok = (worst["sym"] <= 1e-12 and worst["eig"] > 0 and worst["skew"] <= 1e-6
          and worst["split"] <= 1e-6)
    report(6, "Lagrangian identities", ok,
           f"asym {worst['sym']:.1e}, min eig {worst['eig']:.2e}, "
           f"skew {worst['skew']:.1e}, |Mdot-C-C^T| {worst['split']:.1e}")


# 7 ---------------------------------------------------------------------------


def _lagrangian(q, dq, p):
    return kinetic_energy(q, dq, p) - potential_energy(q, p)


def _momentum_fd(q, dq, p, h=1e-5):
    return np.array([(_lagrangian(q, dq + h * e, p) - _lagrangian(q, dq - h * e, p)) / (2 * h)
                     for e in np.eye(8)])


def test_7_euler_lagrange_equivalence(params):
    rng = np.random.default_rng(77)
    worst = 0.0
    h = 1e-5
    for _ in range(20):
        q, dq = random_state(rng, speed=1.0)
        u = rng.normal(scale=0.05, size=8)
        a = forward_dynamics(q, dq, u, np.zeros(8), np.zeros(8), params)
        ddt = (_momentum_fd(q + h * dq, dq + h * a, params)
               - _momentum_fd(q - h * dq, dq - h * a, params)) / (2 * h)
        dLdq = np.array([(_lagrangian(q + h * e, dq, params) - _lagrangian(q - h * e, dq, params))
                         / (2 * h) for e in np.eye(8)])
        worst = max(worst, np.abs(ddt - dLdq - u).max())
    report(7, "Euler-Lagrange brute force", worst <= 1e-4, f"max residual {worst:.1e} (20 states)")


# 8 ---------------------------------------------------------------------------


def test_8_linkage_closure_and_affinity():
    ks = default_ks_config()
    tr = simulate_ks(ks, 2 * np.pi / ks.crank_rate, 1e-4)
    pos, vel = tr.position_residual.max(), tr.velocity_residual.max()
    affine = 0.0
    for angle in np.linspace(0, 2 * np.pi, 12, endpoint=False):
        s = ks_initial_state(ks, crank_angle=angle)
        y0, y1, y2 = (ks_velocity_accel(s, u, ks)[1] for u in (0.0, 1.0, 2.0))
        affine = max(affine, np.abs(y2 - 2 * y1 + y0).max())
    ok = pos <= 1e-8 and vel <= 1e-8 and affine <= 1e-10
    report(8, "linkage closure", ok,
           f"position {pos:.1e} m, velocity {vel:.1e} m/s, affinity {affine:.1e} "
           f"({tr.projections} projections)")


# 9 ---------------------------------------------------------------------------


def test_9_rk4_order():
    A = np.array([[0.0, 1.0], [-9.0, -0.4]])
    w, V = np.linalg.eig(A)
    exact = (V @ np.diag(np.exp(w)) @ np.linalg.inv(V)).real @ [1.0, 0.0]

    def error(dt):
        x = np.array([1.0, 0.0])
        for i in range(int(round(1.0 / dt))):
            x = rk4_step(x, i * dt, dt, lambda t, y: A @ y)
        return np.linalg.norm(x - exact)

    ratio = error(0.02) / error(0.01)
    report(9, "RK4 convergence order", 12 <= ratio <= 20, f"error ratio {ratio:.2f}")


# 10 --------------------------------------------------------------------------


def test_10_determinism(cli_seed7_runs):
    a, b = (d / "log.csv" for d in cli_seed7_runs)
    same = a.read_bytes() == b.read_bytes()
    report(10, "byte-identical logs", same, f"{a.stat().st_size} bytes, seed 7, two runs")


# 11 --------------------------------------------------------------------------


def test_11_noise_statistics():
    rng = np.random.default_rng(1111)
    x = np.array([sample_noise(rng, 0.01) for _ in range(10**6)])
    std = float(x.std())
    report(11, "noise statistics", 0.0099 <= std <= 0.0101,
           f"std {std:.6f}, mean {x.mean():.1e} over 1e6 draws")
