"""Fixed-step simulation of the flapping robot with the momentum observer.

The integrated state is ``x = (q, dq, xi)``: coordinates, rates and the
aerodynamic lag states. Every step draws one noise sample, advances ``x``
with classical RK4 while the noise and the step term are held, and then
updates the observer from quantities it could measure: momentum,
aerodynamic and actuator forces and the model term ``gamma_hat``. The true disturbance reaches the
log but never the observer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import aero as aero_mod
from .disturbance import Scenario, ground_truth_generalized, point_force_magnitude, sample_noise
from . import _kernels as _k
from .errors import ConfigError, NonFiniteDerivative, NumericalSingularity
from .linkage import KSConfig, KSGait, SinusoidalGait, computed_torque
from .model import (
    COORDINATE_NAMES,
    NQ,
    AerobatParams,
    body_angular_velocity,
    dynamics_terms,
    forward_kinematics,
    solve_spd,
)
from .spatial import check_pitch
from .observer import extract_point_force_estimate, observer_init, observer_step

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    """Integration and initial-condition settings.

    Attributes:
        dt: Integration step (s).
        duration: Simulated time (s); a multiple of ``dt * decimation``.
        decimation: Log every this many steps.
        integrator: Only ``"rk4"`` is available.
        energy_audit: Add the power-balance residual of ``T + U`` to the metrics.
        position: Initial base position.
        attitude: Initial roll, pitch, yaw.
        velocity: Initial base velocity (forward trim).
        euler_rates: Initial Euler-angle rates.
        joints: Initial ``(q_s, q_e, dq_s, dq_e)``; ``None`` starts on the gait.
        kp: Proportional gain of the gait-tracking feedback (1/s^2).
        kd: Derivative gain of the gait-tracking feedback (1/s).
    """

    dt: float = 1e-4
    duration: float = 2.0
    decimation: int = 1
    integrator: str = "rk4"
    energy_audit: bool = False
    position: tuple = (0.0, 0.0, 0.0)
    attitude: tuple = (0.0, 0.0, 0.0)
    velocity: tuple = (1.0, 0.0, 0.0)
    euler_rates: tuple = (0.0, 0.0, 0.0)
    joints: tuple | None = None
    kp: float = 1e4
    kd: float = 200.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("sim.dt", "must be > 0")
        if not self.duration >= self.dt:
            raise ConfigError("sim.duration", "must be >= dt")
        if int(self.decimation) != self.decimation or self.decimation < 1:
            raise ConfigError("sim.decimation", "must be an integer >= 1")
        if self.integrator != "rk4":
            raise ConfigError("sim.integrator", "only 'rk4' is supported")
        if self.kp < 0 or self.kd < 0:
            raise ConfigError("sim.kp", "tracking gains must be >= 0")
        _ = self.n_steps

    @property
    def n_steps(self) -> int:
        n = int(round(self.duration / self.dt))
        if abs(n * self.dt - self.duration) > 1e-9 * self.duration or n % self.decimation:
            raise ConfigError("sim.duration", "must be a whole multiple of dt * decimation")
        return n


def rk4_step(x, t: float, dt: float, f, k1=None):
    """One classical fourth-order Runge-Kutta step of ``dx/dt = f(t, x)``.

    Args:
        x: State at ``t``.
        t: Current time.
        dt: Step size.
        f: Derivative function ``f(t, x)``.
        k1: Optional precomputed ``f(t, x)``.

    Raises:
        NonFiniteDerivative: if any stage derivative has a NaN or inf. The
            exception records the stage number, its time and its state.
    """
    x = np.asarray(x, dtype=float)
    ks = []
    for i, c in enumerate((0.0, 0.5 * dt, 0.5 * dt, dt)):
        xi = x if i == 0 else x + c * ks[-1]
        k = np.asarray(k1 if (i == 0 and k1 is not None) else f(t + c, xi), dtype=float)
        if not np.all(np.isfinite(k)):
            raise NonFiniteDerivative(f"non-finite derivative at RK4 stage {i + 1}",
                                      stage=i + 1, t=t + c, state=np.array(xi))
        ks.append(k)
    return x + dt / 6.0 * (ks[0] + 2.0 * ks[1] + 2.0 * ks[2] + ks[3])


# -- logging layout ---------------------------------------------------------

_GEN = COORDINATE_NAMES


def _names(prefix, items):
    return [f"{prefix}_{s}" for s in items]


COLUMNS = (
    ["t", "x", "y", "z", "roll", "pitch", "yaw", "q_s", "q_e"]
    + _names("dq", _GEN)
    + _names("omega", "xyz")
    + _names("ua", _GEN)
    + _names("um", _GEN)
    + _names("uf", _GEN)
    + _names("fL", "xyz")
    + _names("fR", "xyz")
    + _names("F", "xyz")
    + _names("r", _GEN)
    + _names("Fhat", "xyz")
    + ["T", "U"]
)
COLUMN_INDEX = {c: i for i, c in enumerate(COLUMNS)}


def columns_with_prefix(prefix: str) -> list[int]:
    return [i for i, c in enumerate(COLUMNS) if c.startswith(prefix + "_")]


@dataclass
class SimLog:
    """Logged channels, one row per recorded step, columns as in :data:`COLUMNS`."""

    data: np.ndarray
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, COLUMN_INDEX[name]]

    def block(self, prefix: str) -> np.ndarray:
        """All columns named ``prefix_*``, in log order."""
        return self.data[:, columns_with_prefix(prefix)]

    @property
    def t(self):
        return self["t"]

    @property
    def force_truth(self) -> np.ndarray:
        """Summed inertial force on both wings, ``(n, 3)``."""
        return self.block("F")

    @property
    def force_estimate(self) -> np.ndarray:
        return self.block("Fhat")


def _log_truth(u_f, f_left, f_right):
    """Values written to the truth columns; the observer never sees them."""
    return u_f, f_left, f_right


# -- runner -----------------------------------------------------------------


def _make_gait(ks, sc: Scenario, sim: SimConfig, gait):
    if sc.gait_source == "sinusoid":
        return gait if gait is not None else SinusoidalGait()
    if not isinstance(ks, KSConfig):
        raise ConfigError("scenario.gait_source", "'ks' needs a linkage configuration")
    return KSGait(ks, sim.dt, sim.duration)


def initial_state(params: AerobatParams, sim: SimConfig, gait=None) -> tuple[np.ndarray, np.ndarray]:
    """Initial ``(q, dq)``: configured base state, joints on the gait at ``t = 0``."""
    q = np.zeros(NQ)
    dq = np.zeros(NQ)
    q[0:3] = sim.position
    q[3:6] = sim.attitude
    dq[0:3] = sim.velocity
    dq[3:6] = sim.euler_rates
    if sim.joints is not None:
        q[6], q[7], dq[6], dq[7] = sim.joints
    elif gait is not None:
        qs, dqs, _, qe, dqe, _ = gait.targets(0.0)
        q[6], q[7], dq[6], dq[7] = qs, qe, dqs, dqe
    return q, dq


class Plant:
    """Right-hand side of the coupled system for one parameter set.

    :meth:`derivative` runs a compiled kernel; :meth:`derivative_reference`
    composes the public model, aero, linkage and disturbance functions and
    serves as its check.
    """

    def __init__(self, params: AerobatParams, aero_cfg: aero_mod.AeroConfig, sc: Scenario,
                 sim: SimConfig, actuated: bool = True):
        self.params = params
        self.aero_cfg = aero_cfg
        self.sc = sc
        self.sim = sim
        self.actuated = actuated
        self.geom = aero_mod.strip_geometry(params, aero_cfg)
        g = self.geom
        a = aero_cfg
        self._aero = (
            np.ascontiguousarray(g.coeffs), np.ascontiguousarray(g.side.astype(np.int64)),
            np.ascontiguousarray(g.body.astype(np.int64)), g.chord.astype(float),
            g.span.astype(float),
            np.array([a.rho, a.lift_slope, a.a1, a.a2, a.b1, a.b2, a.drag_coefficient,
                      a.profile_drag, a.min_airspeed]),
            bool(a.enabled),
        )
        self._dir = np.array(sc.direction, dtype=float)
        self._dir_mode = 1 if sc.direction_mode == "inertial" else 0

    @property
    def n_states(self) -> int:
        return 2 * NQ + self.geom.n_states

    def split(self, x):
        return x[:NQ], x[NQ:2 * NQ], x[2 * NQ:]

    def force_scalar(self, t: float, noise: float) -> float:
        """Magnitude terms that do not depend on the state: noise and the step."""
        return point_force_magnitude(t, 0.0, self.sc, noise)

    def derivative(self, x, targets, force_scalar: float):
        """State derivative and the forces behind it.

        Returns:
            ``(xdot, aux)`` with ``aux`` a dict of ``u_a, u_m, u_f, f_left,
            f_right, M, G, CTdq, positions``.
        """
        q, dq, xi = self.split(x)
        check_pitch(q[4])
        p = self.params
        out = _k.derivative(
            np.ascontiguousarray(q), np.ascontiguousarray(dq), np.ascontiguousarray(xi),
            p.masses, p.inertia_diag, p.lengths, p.g, 1e-6, *self._aero,
            np.asarray(targets, dtype=float), self.sim.kp, self.sim.kd, self.actuated,
            float(force_scalar), self.sc.base_gain, self._dir, self._dir_mode,
            bool(self.sc.per_wing), p.wing_point)
        ddq, dxi, u_a, u_m, u_f, fl, fr, M, G, CTdq, pos, ok = out
        if not ok:
            raise NumericalSingularity("mass matrix is not positive definite")
        aux = dict(u_a=u_a, u_m=u_m, u_f=u_f, f_left=fl, f_right=fr, M=M, G=G, CTdq=CTdq,
                   positions=pos)
        return np.concatenate([dq, ddq, dxi]), aux

    def derivative_reference(self, x, targets, force_scalar: float):
        """Same as :meth:`derivative`, assembled from the public functions."""
        q, dq, xi = self.split(x)
        p = self.params
        terms = dynamics_terms(q, dq, p)
        dxi, u_a = aero_mod.aero_evaluate(xi, q, dq, p, self.aero_cfg, self.geom)
        if self.actuated:
            qs, dqs, ddqs, qe, dqe, ddqe = targets
            kp, kd = self.sim.kp, self.sim.kd
            u_m = computed_torque(q, dq, ddqs + kd * (dqs - dq[6]) + kp * (qs - q[6]),
                                  ddqe + kd * (dqe - dq[7]) + kp * (qe - q[7]), u_a, p, terms)
        else:
            u_m = np.zeros(NQ)
        mag = self.sc.base_gain * np.sin(q[7]) + force_scalar
        u_f, fl, fr = ground_truth_generalized(q, mag, self.sc, p)
        ddq = solve_spd(terms.M, -terms.Cdq - terms.G + u_a + u_m + u_f)
        aux = dict(u_a=u_a, u_m=u_m, u_f=u_f, f_left=fl, f_right=fr, M=terms.M, G=terms.G,
                   CTdq=terms.CTdq, positions=forward_kinematics(q, p).positions)
        return np.concatenate([dq, ddq, dxi]), aux


def _target_fn(gait_src):
    if gait_src is None:
        zero = np.zeros(6)
        return lambda t: zero
    return lambda t: np.array(gait_src.targets(t), dtype=float)


def run_scenario(params: AerobatParams, ks: KSConfig | None, aero_cfg: aero_mod.AeroConfig,
                 sc: Scenario, sim: SimConfig, gait=None) -> SimLog:
    """Simulate one scenario and return the full log.

    Per step: gait targets with PD feedback give the joint accelerations,
    :func:`computed_torque` turns them into ``u_m``, the strip model gives
    ``u_a`` and the lag-state rates, the disturbance gives ``u_f`` and the
    equations of motion close the loop. The observer is then advanced with
    the measured quantities at the new time.

    Random draws happen once per step in a fixed order: the force noise,
    then (only if enabled) eight momentum-noise samples.

    Args:
        params: Plant parameters.
        ks: Linkage used when ``sc.gait_source == "ks"``.
        aero_cfg: Aerodynamic model; switched off when ``sc.aero`` is false.
        sc: Disturbance and observer settings.
        sim: Step size, duration and initial state.
        gait: Sinusoidal gait used when ``sc.gait_source == "sinusoid"``.

    Raises:
        NonFiniteDerivative: with the time and the last finite state.
    """
    dt = sim.dt
    n_steps = sim.n_steps
    if sc.step_window[1] > sim.duration + 1e-12:
        raise ConfigError("scenario.step_window", "must lie inside [0, duration]")
    if not sc.aero:
        aero_cfg = replace(aero_cfg, enabled=False)
    plant = Plant(params, aero_cfg, sc, sim, actuated=sc.actuated)
    obs_params = params if sc.mass_error == 0 else params.scaled(1.0 + sc.mass_error)
    exact = obs_params is params
    gait_src = _make_gait(ks, sc, sim, gait) if sc.actuated else None
    targets = _target_fn(gait_src)
    rng = np.random.default_rng(sc.rng_seed)
    limits = params.joint_limits
    warned = False

    q0, dq0 = initial_state(params, sim, gait_src)
    for name, v, (lo, hi) in zip(("q_s", "q_e"), q0[6:8], limits):
        if not lo <= v <= hi:
            raise ConfigError("sim.joints", f"initial {name}={v:.4g} outside joint limits")
    x = np.concatenate([q0, dq0, np.zeros(plant.geom.n_states)])
    out = np.empty((n_steps // sim.decimation + 1, len(COLUMNS)))
    obs = None
    obs_dt = dt * sc.observer_decimation
    rec = 0
    for n in range(n_steps + 1):
        t = n * dt
        noise = sample_noise(rng, sc.noise_sigma)
        noise_p = (sc.measurement_noise * rng.standard_normal(NQ)
                   if sc.measurement_noise > 0 else 0.0)
        fs = plant.force_scalar(t, noise)
        k1, aux = plant.derivative(x, targets(t), fs)
        q, dq, _ = plant.split(x)
        if not warned and any(not lo <= v <= hi for v, (lo, hi) in zip(q[6:8], limits)):
            log.warning("joint angle outside soft limits at t=%.4f", t)
            warned = True

        # observer: measured momentum and known forces only
        if exact:
            M, gamma_hat = aux["M"], aux["G"] - aux["CTdq"]
        else:
            t2 = dynamics_terms(q, dq, obs_params)
            M, gamma_hat = t2.M, t2.G - t2.CTdq
        p_meas = M @ dq + noise_p
        if obs is None:
            obs = observer_init(p_meas, sc.observer_gain, aux["u_a"], aux["u_m"], gamma_hat)
        elif n % sc.observer_decimation == 0:
            obs = observer_step(obs, p_meas, aux["u_a"], aux["u_m"], gamma_hat, obs_dt)

        if n % sim.decimation == 0:
            u_f, fl, fr = _log_truth(aux["u_f"], aux["f_left"], aux["f_right"])
            T = 0.5 * dq @ aux["M"] @ dq
            U = params.g * params.masses @ aux["positions"][:, 2]
            out[rec] = np.concatenate([
                [t], q, dq, body_angular_velocity(q, dq), aux["u_a"], aux["u_m"], u_f, fl, fr,
                np.asarray(fl) + np.asarray(fr), obs.r, extract_point_force_estimate(obs.r),
                [T, U],
            ])
            rec += 1
        if n == n_steps:
            break

        # over the step the window is read at the midpoint, so window edges on
        # the grid are integrated exactly; the log keeps the sampled value
        fs_step = plant.force_scalar(t + 0.5 * dt, noise)
        if fs_step != fs:
            k1 = plant.derivative(x, targets(t), fs_step)[0]

        def f(tt, xx, fs=fs_step):
            return plant.derivative(xx, targets(tt), fs)[0]

        try:
            x_new = rk4_step(x, t, dt, f, k1=k1)
        except NonFiniteDerivative as exc:
            raise NonFiniteDerivative(f"{exc} (step starting at t={t:.6g})", stage=exc.stage,
                                      t=exc.t, state=np.array(x)) from exc
        if not np.all(np.isfinite(x_new)):
            raise NonFiniteDerivative(f"non-finite state after step at t={t:.6g}", t=t,
                                      state=np.array(x))
        x = x_new
    if not np.all(np.isfinite(out)):
        raise NonFiniteDerivative("non-finite value reached the log")
    return SimLog(out, seed=int(sc.rng_seed), meta={"dt": dt, "duration": sim.duration})
