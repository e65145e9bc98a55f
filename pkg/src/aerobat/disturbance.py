"""Ground-truth external force: a noisy point force on each distal wing.

The scalar magnitude is ``base_gain sin(q_e) + noise``, plus
``step_magnitude`` while ``t`` lies in the half-open window
``(t_on, t_off]``. The force points along a direction that by default
follows the left distal-wing surface normal, so one scalar produces
time-varying components on all three inertial axes. The same inertial
force acts on both wings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import AerobatParams, forward_kinematics, point_force_jacobian

DIRECTION_MODES = ("wing_normal", "inertial")


@dataclass(frozen=True)
class Scenario:
    """Disturbance, observer and scenario switches for one run.

    Attributes:
        rng_seed: Seed of the single random stream of the run.
        noise_sigma: Standard deviation of the magnitude noise (N).
        base_gain: Coefficient of ``sin(q_e)`` in the magnitude (N).
        step_magnitude: Height of the timed step (N).
        step_window: ``(t_on, t_off)``; the step is active for
            ``t_on < t <= t_off``.
        direction_mode: ``"wing_normal"`` to carry ``direction`` with the
            left distal wing, ``"inertial"`` to keep it fixed in space.
        direction: Unit vector, in the distal-wing frame or the inertial
            frame depending on ``direction_mode``.
        per_wing: If true each wing uses its own (mirrored) distal normal
            instead of sharing the left-wing force.
        observer_gain: Observer gain, scalar or 8 values (1/s).
        observer_decimation: Observer update every this many steps.
        measurement_noise: Std of Gaussian noise added to the momentum fed
            to the observer (off by default).
        mass_error: Relative mass error of the observer model (0 = exact).
        aero: Aerodynamic forces on/off.
        actuated: Joint actuation on/off; off means ``u_m = 0``.
        gait_source: ``"ks"`` for the linkage or ``"sinusoid"``.
    """

    rng_seed: int = 0
    noise_sigma: float = 0.01
    base_gain: float = 0.2
    step_magnitude: float = 0.15
    step_window: tuple = (1.0, 1.6)
    direction_mode: str = "wing_normal"
    direction: tuple = (0.0, 0.0, 1.0)
    per_wing: bool = False
    observer_gain: object = 250.0
    observer_decimation: int = 1
    measurement_noise: float = 0.0
    mass_error: float = 0.0
    aero: bool = True
    actuated: bool = True
    gait_source: str = "ks"
    _dir: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise ConfigError("scenario.noise_sigma", "must be >= 0")
        if not self.measurement_noise >= 0:
            raise ConfigError("scenario.measurement_noise", "must be >= 0")
        t_on, t_off = self.step_window
        if not 0 <= t_on <= t_off:
            raise ConfigError("scenario.step_window", "need 0 <= t_on <= t_off")
        if self.direction_mode not in DIRECTION_MODES:
            raise ConfigError("scenario.direction_mode", f"must be one of {DIRECTION_MODES}")
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (3,) or abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ConfigError("scenario.direction", "must be a unit 3-vector")
        if self.gait_source not in ("ks", "sinusoid"):
            raise ConfigError("scenario.gait_source", "must be 'ks' or 'sinusoid'")
        if int(self.observer_decimation) < 1:
            raise ConfigError("scenario.observer_decimation", "must be >= 1")
        K = np.asarray(self.observer_gain, dtype=float)
        if not np.all(K > 0) or K.size not in (1, 8):
            raise ConfigError("scenario.observer_gain", "need one or 8 gains, all > 0")
        object.__setattr__(self, "_dir", d)

    def in_step_window(self, t: float) -> bool:
        # grid times n * dt carry rounding; treat them as landing on the edges
        t_on, t_off = self.step_window
        eps = 1e-12 * max(1.0, abs(t))
        return t_on + eps < t <= t_off + eps


def sample_noise(rng: np.random.Generator, sigma: float) -> float:
    """One Gaussian draw with standard deviation ``sigma``.

    A value is drawn even for ``sigma = 0`` so that the stream position does
    not depend on the noise level.
    """
    z = rng.standard_normal()
    return float(sigma * z) if sigma > 0 else 0.0


def point_force_magnitude(t: float, q_e: float, sc: Scenario, noise: float = 0.0) -> float:
    """Scalar force magnitude at time ``t`` for elbow angle ``q_e``."""
    f = sc.base_gain * np.sin(q_e) + noise
    if sc.in_step_window(t):
        f += sc.step_magnitude
    return float(f)


def force_directions(q, sc: Scenario, p: AerobatParams):
    """Inertial unit directions ``(left, right)`` of the wing forces."""
    d = sc._dir
    if sc.direction_mode == "inertial":
        return d, d
    R = forward_kinematics(q, p).rotations
    left = R[2] @ d
    if not sc.per_wing:
        return left, left
    return left, R[4] @ (np.array([1.0, -1.0, 1.0]) * d)


def ground_truth_generalized(q, magnitude: float, sc: Scenario, p: AerobatParams):
    """Generalized force of the two wing point forces.

    Returns:
        ``(u_f, f_left, f_right)`` with ``u_f = J_L^T f_L + J_R^T f_R``.
    """
    dl, dr = force_directions(q, sc, p)
    fl = magnitude * dl
    fr = magnitude * dr
    JL, JR = point_force_jacobian(q, p)
    return JL.T @ fl + JR.T @ fr, fl, fr
