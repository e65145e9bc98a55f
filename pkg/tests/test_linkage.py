import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aerobat.errors import ConfigError, NoConvergence, SingularConfiguration
from aerobat.linkage import (
    Chain,
    Derived,
    KSConfig,
    KSGait,
    KSState,
    Loop,
    Segment,
    SinusoidalGait,
    closure_jacobian,
    closure_residual,
    computed_torque,
    default_ks_config,
    ks_initial_state,
    ks_solve_position,
    ks_velocity,
    ks_velocity_accel,
    simulate_ks,
    sinusoidal_gait,
)
from aerobat.model import dynamics_terms, forward_dynamics
from conftest import random_state


def parallelogram(crank=0.5, length=0.02, coupler=0.05):
    """Crank and rocker of equal length joined by a coupler as long as the ground link."""
    loop = Loop(Chain((0.0, 0.0), (Segment(0, length), Segment(1, coupler))),
                Chain((coupler, 0.0), (Segment(2, length),)))
    derived = (Derived(5, ((2, 1.0),)), Derived(6, ((1, 1.0),)),
               *(Derived(i, ()) for i in (3, 4, 7, 8)))
    guess = (crank, 0.0, crank, 0, 0, crank, 0, 0, 0)
    return KSConfig((loop,), derived, crank, guess)


@pytest.fixture(scope="module")
def ks():
    return default_ks_config()


@pytest.mark.parametrize("angle", [0.3, 1.0, 1.7, 2.5, -0.8])
def test_parallelogram_transmits_angle(angle):
    cfg = parallelogram()
    q = ks_solve_position(angle, cfg, (angle + 0.05, 0.05, angle - 0.05, 0, 0, 0, 0, 0, 0))
    assert q[5] == pytest.approx(angle, abs=1e-10)
    assert q[6] == pytest.approx(0.0, abs=1e-10)


def test_parallelogram_unity_acceleration():
    cfg = parallelogram()
    q = ks_solve_position(0.9, cfg, cfg.reference_guess)
    dq = ks_velocity(q, 1.3, cfg)
    ddq, y = ks_velocity_accel(KSState(q, dq), 0.7, cfg)
    assert y[0] == pytest.approx(0.7, abs=1e-10)
    assert ddq[2] == pytest.approx(0.7, abs=1e-10)


def test_dead_point_is_singular():
    cfg = parallelogram()
    collinear = np.zeros(9)
    with pytest.raises(SingularConfiguration):
        ks_velocity(collinear, 1.0, cfg)


def test_no_convergence(ks):
    far = np.array(ks.reference_guess) + 0.5
    with pytest.raises(NoConvergence):
        ks_solve_position(0.0, ks, far, max_iter=1)


def test_closure_over_revolution(ks):
    q = ks_solve_position(0.0, ks, ks.reference_guess)
    worst = 0.0
    for angle in np.linspace(0, 2 * np.pi, 361)[1:]:
        q = ks_solve_position(angle, ks, q)
        worst = max(worst, np.linalg.norm(closure_residual(q, ks)))
    assert worst <= 1e-9


def test_branch_stability(ks, rng):
    q = ks_solve_position(0.0, ks, ks.reference_guess)
    for angle in (0.7, 2.0, 4.1):
        q = ks_solve_position(angle, ks, q)
        for _ in range(3):
            guess = q + rng.uniform(-1e-2, 1e-2, 9)
            again = ks_solve_position(angle, ks, guess)
            assert np.max(np.abs(again - q)) <= 1e-10


def test_stationary_mechanism(ks):
    s = ks_initial_state(ks, crank_rate=0.0)
    ddq, y = ks_velocity_accel(s, 0.0, ks)
    assert np.all(ddq == 0.0)


def test_velocity_closure(ks):
    s = ks_initial_state(ks)
    assert np.linalg.norm(closure_jacobian(s.q, ks) @ s.dq) <= 1e-9


def test_output_accelerations_match_second_difference(ks):
    h = 1e-5
    u_k = 3.0
    s = ks_initial_state(ks, crank_angle=1.1)
    tr = simulate_ks(ks, 2 * h, h, state=s, u_k=u_k)
    sd = (tr.q[2] - 2 * tr.q[1] + tr.q[0]) / h**2
    _, y = ks_velocity_accel(KSState(tr.q[1], tr.dq[1]), u_k, ks)
    assert np.max(np.abs(sd[list(ks.outputs)] - y)) <= 1e-4


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(-30, 30))
def test_outputs_affine_in_crank_accel(angle, rate):
    ks = default_ks_config()
    s = ks_initial_state(ks, crank_angle=angle, crank_rate=rate)
    y0, y1, y2 = (ks_velocity_accel(s, u, ks)[1] for u in (0.0, 1.0, 2.0))
    assert np.max(np.abs((y2 - y1) - (y1 - y0))) <= 1e-10


def test_revolution_has_no_closure_drift(ks):
    tr = simulate_ks(ks, 2 * np.pi / ks.crank_rate, 1e-4)
    assert tr.position_residual.max() <= 1e-8
    assert tr.velocity_residual.max() <= 1e-8


def test_default_gait_shape(ks):
    gait = KSGait(ks, 1e-4, 0.25)
    qs, dqs, _, qe, _, _ = gait.table.T
    assert 0.4 < (qs.max() - qs.min()) / 2 < 0.7
    down = dqs < 0
    assert qe[down].mean() > 0 > qe[~down].mean()


def test_gait_table_matches_integration(ks):
    dt = 1e-4
    gait = KSGait(ks, dt, 0.05)
    tr = simulate_ks(ks, 0.05, dt / 2)
    s, e = ks.outputs
    for i in (0, 1, 17, 400, 1000):
        ref = (tr.q[i, s], tr.dq[i, s], tr.ddq[i, s], tr.q[i, e], tr.dq[i, e], tr.ddq[i, e])
        got = gait.targets(i * dt / 2)
        assert np.allclose(got[::3], ref[::3], atol=1e-8)
        assert np.allclose(got, ref, rtol=1e-6, atol=1e-6)


def test_gait_table_is_periodic(ks):
    gait = KSGait(ks, 1e-4, 2.0)
    period = 2 * np.pi / ks.crank_rate
    assert np.allclose(gait.targets(0.0123), gait.targets(0.0123 + 3 * period))
    with pytest.raises(ValueError):
        gait.targets(1.234567e-5)


def test_config_equation_count():
    loop = Loop(Chain((0.0, 0.0), (Segment(0, 0.01), Segment(1, 0.04), Segment(3, 0.02))),
                Chain((0.04, 0.0), (Segment(2, 0.02),)))
    with pytest.raises(ConfigError, match="ks.loops"):
        KSConfig((loop,), (), 0.0, (0,) * 9)


def test_sinusoid_zero_amplitude():
    g = SinusoidalGait(amplitude_s=0, amplitude_e=0, offset_s=0.2, offset_e=-0.1)
    for t in (0.0, 0.13, 1.7):
        assert sinusoidal_gait(t, g) == (0.2, 0.0, 0.0, -0.1, 0.0, 0.0)


@given(st.floats(0, 5))
def test_sinusoid_harmonic_identity(t):
    g = SinusoidalGait(offset_s=0.1, offset_e=-0.2)
    qs, _, aqs, qe, _, aqe = sinusoidal_gait(t, g)
    w2 = (2 * np.pi * g.frequency) ** 2
    assert aqs == pytest.approx(-w2 * (qs - 0.1), abs=1e-9)
    assert aqe == pytest.approx(-w2 * (qe + 0.2), abs=1e-9)


def test_sinusoid_derivative_chain():
    g = SinusoidalGait()
    h = 1e-6
    for t in np.linspace(0, 0.25, 7):
        lo, hi, mid = (np.array(sinusoidal_gait(x, g)) for x in (t - h, t + h, t))
        fd = (hi - lo) / (2 * h)
        # relative to the size of each derivative
        assert np.allclose(fd[[0, 1, 3, 4]], mid[[1, 2, 4, 5]], rtol=1e-7, atol=1e-7 * 630)


def test_sinusoid_elbow_extends_on_downstroke():
    g = SinusoidalGait()
    t = np.linspace(0, 1 / g.frequency, 400, endpoint=False)
    _, dqs, _, qe, _, _ = sinusoidal_gait(t, g)
    assert np.all(qe[dqs < -1e-9] > 0)
    assert np.all(qe[dqs > 1e-9] < 0)


def test_sinusoid_rejects_zero_frequency():
    with pytest.raises(ConfigError, match="gait.frequency"):
        SinusoidalGait(frequency=0.0)


def test_computed_torque_zero_for_free_motion(params, rng):
    q, dq = random_state(rng)
    u_a = rng.normal(scale=0.1, size=8)
    a = forward_dynamics(q, dq, u_a, np.zeros(8), np.zeros(8), params)
    u_m = computed_torque(q, dq, a[6], a[7], u_a, params)
    assert np.max(np.abs(u_m)) <= 1e-10


def test_computed_torque_round_trip(params, rng):
    for _ in range(10):
        q, dq = random_state(rng)
        u_a = rng.normal(scale=0.1, size=8)
        want = rng.normal(scale=500, size=2)
        u_m = computed_torque(q, dq, want[0], want[1], u_a, params,
                              terms=dynamics_terms(q, dq, params))
        assert np.all(u_m[:6] == 0.0)
        a = forward_dynamics(q, dq, u_a, u_m, np.zeros(8), params)
        assert np.max(np.abs(a[6:] - want)) <= 1e-8
