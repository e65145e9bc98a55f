"""Single-actuator planar linkage that generates the flapping gait.

The mechanism is described by a topology table rather than hard-coded
geometry. There are nine angle coordinates ``q[0..8]`` (absolute link
angles in the mechanism plane):

* ``q[0]`` is the crank, driven by the motor;
* angles that appear in a closure loop are solved by Newton iteration;
* the rest are *derived*: affine combinations of other angles, used for the
  shoulder and elbow outputs (``q[5]`` and ``q[6]`` by default).

Each loop equates the end points of two open chains that start at ground
pivots, so it contributes two scalar equations. Three loops give the six
closure equations for six unknown angles.

The shipped geometry is a plausible stand-in, not the real mechanism.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NoConvergence, SingularConfiguration
from .model import JOINTS, AerobatParams, DynamicsTerms, dynamics_terms, solve_spd

N_ANGLES = 9


@dataclass(frozen=True)
class Segment:
    """One straight link piece: ``length * (cos, sin)(q[angle] + offset)``."""

    angle: int
    length: float
    offset: float = 0.0


@dataclass(frozen=True)
class Chain:
    ground: tuple
    segments: tuple


@dataclass(frozen=True)
class Loop:
    a: Chain
    b: Chain


@dataclass(frozen=True)
class Derived:
    """``q[index] = offset + sum(coef * q[j] for j, coef in terms)``."""

    index: int
    terms: tuple
    offset: float = 0.0


@dataclass
class KSConfig:
    """Linkage geometry, topology and crank drive.

    ``reference_guess`` is an approximate assembly at ``reference_crank`` and
    selects the assembly branch. ``crank_rate`` is the constant motor speed
    used for gait generation [rad/s]; ``crank_accel`` an optional constant
    motor acceleration ``u_k`` [rad/s^2].
    """

    loops: tuple
    derived: tuple
    reference_crank: float
    reference_guess: tuple
    crank: int = 0
    outputs: tuple = (5, 6)
    crank_rate: float = 2 * np.pi * 4.0
    crank_accel: float = 0.0
    unknowns: tuple = field(init=False)

    def __post_init__(self):
        used = set()
        for loop in self.loops:
            for chain in (loop.a, loop.b):
                for seg in chain.segments:
                    if not 0 <= seg.angle < N_ANGLES:
                        raise ConfigError("ks.loops", f"angle index {seg.angle + 1} out of range")
                    if not seg.length > 0:
                        raise ConfigError("ks.loops", "link lengths must be > 0")
                    used.add(seg.angle)
        unknowns = tuple(sorted(used - {self.crank}))
        if len(unknowns) != 2 * len(self.loops):
            raise ConfigError(
                "ks.loops",
                f"{len(self.loops)} loops give {2 * len(self.loops)} equations "
                f"but {len(unknowns)} unknown angles",
            )
        derived_idx = {d.index for d in self.derived}
        if derived_idx & used:
            raise ConfigError("ks.derived", "derived angles may not appear in loops")
        if used | derived_idx | {self.crank} != set(range(N_ANGLES)):
            raise ConfigError("ks", "every one of the nine angles must be crank, solved or derived")
        for d in self.derived:
            if any(j in derived_idx for j, _ in d.terms):
                raise ConfigError("ks.derived", "derived angles must depend on solved angles only")
        if len(self.reference_guess) != N_ANGLES:
            raise ConfigError("ks.reference_guess", "needs nine angles")
        self.unknowns = unknowns


@dataclass
class KSState:
    q: np.ndarray
    dq: np.ndarray


def _e(theta):
    return np.array([np.cos(theta), np.sin(theta)])


def closure_residual(q, cfg: KSConfig) -> np.ndarray:
    """Stacked loop-closure residuals, shape ``(2 * n_loops,)`` [m]."""
    out = np.empty(2 * len(cfg.loops))
    for i, loop in enumerate(cfg.loops):
        ends = []
        for chain in (loop.a, loop.b):
            pt = np.array(chain.ground, dtype=float)
            for seg in chain.segments:
                pt = pt + seg.length * _e(q[seg.angle] + seg.offset)
            ends.append(pt)
        out[2 * i : 2 * i + 2] = ends[0] - ends[1]
    return out


def closure_jacobian(q, cfg: KSConfig) -> np.ndarray:
    """Partial derivatives of :func:`closure_residual`, shape ``(2 n, 9)``."""
    J = np.zeros((2 * len(cfg.loops), N_ANGLES))
    for i, loop in enumerate(cfg.loops):
        for sign, chain in ((1.0, loop.a), (-1.0, loop.b)):
            for seg in chain.segments:
                th = q[seg.angle] + seg.offset
                J[2 * i : 2 * i + 2, seg.angle] += sign * seg.length * np.array(
                    [-np.sin(th), np.cos(th)]
                )
    return J


def _closure_curvature(q, dq, cfg: KSConfig) -> np.ndarray:
    # d/dt(Phi_q) dq for the planar chains: -sum(+-L e(theta) dtheta^2)
    out = np.zeros(2 * len(cfg.loops))
    for i, loop in enumerate(cfg.loops):
        for sign, chain in ((1.0, loop.a), (-1.0, loop.b)):
            for seg in chain.segments:
                out[2 * i : 2 * i + 2] -= (
                    sign * seg.length * _e(q[seg.angle] + seg.offset) * dq[seg.angle] ** 2
                )
    return out


def _fill_derived(vec, cfg: KSConfig, with_offset: bool):
    for d in cfg.derived:
        vec[d.index] = (d.offset if with_offset else 0.0) + sum(c * vec[j] for j, c in d.terms)
    return vec


def _unknown_block(J, cfg: KSConfig):
    Ju = J[:, list(cfg.unknowns)]
    sv = np.linalg.svd(Ju, compute_uv=False)
    if sv[-1] <= 1e-10 * max(sv[0], 1e-300):
        raise SingularConfiguration(f"closure Jacobian rank deficient (sigma_min={sv[-1]:.3e})")
    return Ju


def ks_solve_position(crank_angle, cfg: KSConfig, guess, tol=1e-12, max_iter=50) -> np.ndarray:
    """Assemble the mechanism at a crank angle.

    Damped Newton iteration with step halving on the closure residual,
    started from ``guess`` (a 9-vector or :class:`KSState`), so the result
    stays on the guess's assembly branch.

    Returns:
        All nine angles, with ``q[crank] = crank_angle`` and derived angles
        filled in.

    Raises:
        SingularConfiguration: at a dead point of the mechanism.
        NoConvergence: if ``max_iter`` iterations do not reach ``tol``.
    """
    q = np.array(guess.q if isinstance(guess, KSState) else guess, dtype=float)
    q[cfg.crank] = crank_angle
    idx = list(cfg.unknowns)
    res = closure_residual(q, cfg)
    norm = np.linalg.norm(res)
    for _ in range(max_iter):
        if norm <= tol:
            return _fill_derived(q, cfg, True)
        Ju = _unknown_block(closure_jacobian(q, cfg), cfg)
        step = np.linalg.solve(Ju, -res)
        alpha = 1.0
        while True:
            trial = q.copy()
            trial[idx] += alpha * step
            t_res = closure_residual(trial, cfg)
            t_norm = np.linalg.norm(t_res)
            if t_norm < norm or alpha < 1e-6:
                break
            alpha *= 0.5
        q, res, norm = trial, t_res, t_norm
    if norm <= tol:
        return _fill_derived(q, cfg, True)
    raise NoConvergence(f"closure residual {norm:.3e} after {max_iter} iterations")


def ks_velocity(q, crank_rate, cfg: KSConfig) -> np.ndarray:
    """Angle rates consistent with the closure for a given crank rate."""
    J = closure_jacobian(q, cfg)
    Ju = _unknown_block(J, cfg)
    dq = np.zeros(N_ANGLES)
    dq[cfg.crank] = crank_rate
    dq[list(cfg.unknowns)] = np.linalg.solve(Ju, -J[:, cfg.crank] * crank_rate)
    return _fill_derived(dq, cfg, False)


def ks_velocity_accel(x_k: KSState, u_k: float, cfg: KSConfig):
    """Angle accelerations for a crank acceleration ``u_k``.

    Solves ``Phi_q ddq = -(d/dt Phi_q) dq`` with ``ddq[crank] = u_k``.

    Returns:
        ``(ddq, y_k)`` where ``y_k`` holds the accelerations of the two
        output angles (shoulder, elbow).
    """
    q, dq = np.asarray(x_k.q, dtype=float), np.asarray(x_k.dq, dtype=float)
    J = closure_jacobian(q, cfg)
    Ju = _unknown_block(J, cfg)
    rhs = -_closure_curvature(q, dq, cfg) - J[:, cfg.crank] * u_k
    ddq = np.zeros(N_ANGLES)
    ddq[cfg.crank] = u_k
    ddq[list(cfg.unknowns)] = np.linalg.solve(Ju, rhs)
    _fill_derived(ddq, cfg, False)
    return ddq, ddq[list(cfg.outputs)]


def ks_initial_state(cfg: KSConfig, crank_angle=None, crank_rate=None) -> KSState:
    """Closure-consistent state starting from the reference assembly."""
    crank_angle = cfg.reference_crank if crank_angle is None else crank_angle
    crank_rate = cfg.crank_rate if crank_rate is None else crank_rate
    q0 = ks_solve_position(cfg.reference_crank, cfg, cfg.reference_guess)
    if crank_angle != cfg.reference_crank:
        q0 = _continue_to(crank_angle, cfg, q0)
    return KSState(q0, ks_velocity(q0, crank_rate, cfg))


def _continue_to(target, cfg: KSConfig, q, max_step=0.05):
    start = q[cfg.crank]
    n = max(1, int(np.ceil(abs(target - start) / max_step)))
    for angle in np.linspace(start, target, n + 1)[1:]:
        q = ks_solve_position(angle, cfg, q)
    return q


@dataclass
class KSTrajectory:
    t: np.ndarray
    q: np.ndarray  # (n, 9)
    dq: np.ndarray
    ddq: np.ndarray
    position_residual: np.ndarray
    velocity_residual: np.ndarray
    projections: int


def simulate_ks(cfg: KSConfig, duration, dt, state: KSState | None = None, u_k=None,
                projection_tol=1e-9) -> KSTrajectory:
    """Integrate the linkage with RK4 using closure-consistent accelerations.

    After every step the position and velocity residuals are checked; if
    either exceeds ``projection_tol`` the state is projected back onto the
    constraint manifold (Newton on positions, linear solve on rates) and the
    projection is counted.
    """
    u_k = cfg.crank_accel if u_k is None else float(u_k)
    state = ks_initial_state(cfg) if state is None else state
    n = int(round(duration / dt))
    q = np.array(state.q, dtype=float)
    dq = np.array(state.dq, dtype=float)

    def f(qq, vv):
        acc, _ = ks_velocity_accel(KSState(qq, vv), u_k, cfg)
        return vv, acc

    t = np.arange(n + 1) * dt
    Q = np.empty((n + 1, N_ANGLES))
    DQ = np.empty_like(Q)
    DDQ = np.empty_like(Q)
    pres = np.empty(n + 1)
    vres = np.empty(n + 1)
    projections = 0
    for i in range(n + 1):
        Q[i], DQ[i] = q, dq
        DDQ[i] = f(q, dq)[1]
        pres[i] = np.linalg.norm(closure_residual(q, cfg))
        vres[i] = np.linalg.norm(closure_jacobian(q, cfg) @ dq)
        if i == n:
            break
        k1q, k1v = f(q, dq)
        k2q, k2v = f(q + 0.5 * dt * k1q, dq + 0.5 * dt * k1v)
        k3q, k3v = f(q + 0.5 * dt * k2q, dq + 0.5 * dt * k2v)
        k4q, k4v = f(q + dt * k3q, dq + dt * k3v)
        q = q + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
        dq = dq + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if (np.linalg.norm(closure_residual(q, cfg)) > projection_tol
                or np.linalg.norm(closure_jacobian(q, cfg) @ dq) > projection_tol):
            q = ks_solve_position(q[cfg.crank], cfg, q)
            dq = ks_velocity(q, dq[cfg.crank], cfg)
            projections += 1
    return KSTrajectory(t, Q, DQ, DDQ, pres, vres, projections)


# -- gaits -----------------------------------------------------------------


@dataclass
class SinusoidalGait:
    """``q(t) = offset + amplitude * sin(2 pi f t + phase)`` per joint.

    The default has the elbow lag the shoulder by a quarter period, so the
    elbow angle is positive (extended) throughout the downstroke
    (``dq_s < 0``) and negative during the upstroke.
    """

    frequency: float = 4.0
    amplitude_s: float = 0.5
    amplitude_e: float = 0.3
    phase_s: float = 0.0
    phase_e: float = -np.pi / 2
    offset_s: float = 0.0
    offset_e: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ConfigError("gait.frequency", "must be > 0")

    def targets(self, t):
        return sinusoidal_gait(t, self)


def sinusoidal_gait(t, gait: SinusoidalGait):
    """Shoulder and elbow references with analytic derivatives.

    Returns:
        ``(q_s, dq_s, ddq_s, q_e, dq_e, ddq_e)``.
    """
    w = 2.0 * np.pi * gait.frequency
    out = []
    for amp, ph, off in ((gait.amplitude_s, gait.phase_s, gait.offset_s),
                         (gait.amplitude_e, gait.phase_e, gait.offset_e)):
        s, c = np.sin(w * t + ph), np.cos(w * t + ph)
        out += [off + amp * s, amp * w * c, -amp * w * w * s]
    return tuple(out)


_REVOLUTION_CACHE: dict = {}


class KSGait:
    """Shoulder/elbow references read off the linkage motion on a time grid.

    The grid spacing is ``dt / 2`` so that every RK4 stage time of a
    simulation with step ``dt`` is a grid point. With a constant crank speed
    the motion is periodic; when a period is a whole number of grid steps
    only one revolution is assembled (exact closure at every point) and
    looked up modulo the period. Otherwise the linkage is integrated with
    :func:`simulate_ks` over the whole run.
    """

    def __init__(self, cfg: KSConfig, dt, duration):
        self.cfg = cfg
        self.h = dt / 2.0
        self.period_steps = None
        if cfg.crank_accel == 0 and cfg.crank_rate != 0:
            steps = 2 * np.pi / abs(cfg.crank_rate) / self.h
            if abs(steps - round(steps)) < 1e-6:
                self.period_steps = int(round(steps))
        if self.period_steps is not None:
            key = (repr(cfg), self.h)
            if key not in _REVOLUTION_CACHE:
                _REVOLUTION_CACHE[key] = self._one_revolution()
            self.table = _REVOLUTION_CACHE[key]
        else:
            tr = simulate_ks(cfg, duration + dt, self.h)
            self.table = self._pack(tr.q, tr.dq, tr.ddq)

    def _pack(self, Q, DQ, DDQ):
        s, e = self.cfg.outputs
        return np.column_stack([Q[:, s], DQ[:, s], DDQ[:, s], Q[:, e], DQ[:, e], DDQ[:, e]])

    def _one_revolution(self):
        cfg = self.cfg
        n = self.period_steps
        start = ks_initial_state(cfg)
        Q = np.empty((n, N_ANGLES))
        DQ = np.empty_like(Q)
        DDQ = np.empty_like(Q)
        q = start.q
        for i in range(n):
            angle = start.q[cfg.crank] + cfg.crank_rate * i * self.h
            q = ks_solve_position(angle, cfg, q)
            dq = ks_velocity(q, cfg.crank_rate, cfg)
            Q[i], DQ[i] = q, dq
            DDQ[i] = ks_velocity_accel(KSState(q, dq), 0.0, cfg)[0]
        return self._pack(Q, DQ, DDQ)

    def targets(self, t):
        """``(q_s, dq_s, ddq_s, q_e, dq_e, ddq_e)`` at grid time ``t``."""
        i = int(round(t / self.h))
        if abs(i * self.h - t) > 1e-9 * max(1.0, t):
            raise ValueError(f"t={t} is not on the linkage time grid")
        if self.period_steps is not None:
            i %= self.period_steps
        return tuple(self.table[i])


# -- actuation -------------------------------------------------------------


def computed_torque(q, dq, ddq_s, ddq_e, u_a, p: AerobatParams,
                    terms: DynamicsTerms | None = None) -> np.ndarray:
    """Joint torques that realise the requested joint accelerations.

    The base and attitude coordinates are unactuated, so the joint block is
    solved through the Schur complement of the mass matrix::

        u_j = (M_jj - M_jb M_bb^-1 M_bj) a_j - (h_j - M_jb M_bb^-1 h_b)

    with ``h = -C dq - G + u_a``. Unknown external forces are not included.

    Returns:
        Generalized vector with nonzero entries only at ``q_s`` and ``q_e``.
    """
    t = terms if terms is not None else dynamics_terms(q, dq, p)
    h = -t.Cdq - t.G + np.asarray(u_a, dtype=float)
    M = t.M
    b, j = slice(0, 6), JOINTS
    X = solve_spd(M[b, b], np.column_stack([M[b, j], h[b]]))
    schur = M[j, j] - M[j, b] @ X[:, :2]
    a_j = np.array([ddq_s, ddq_e], dtype=float)
    u = np.zeros(8)
    u[j] = schur @ a_j - (h[j] - M[j, b] @ X[:, 2])
    return u


# -- shipped geometry ------------------------------------------------------

#: Ground pivots and link lengths (m) of the default mechanism.
DEFAULT_GEOMETRY = {
    "loops": [
        {"a": {"ground": (0.0, 0.0), "segments": [(0, 0.01, 0.0), (1, 0.045, 0.0)]},
         "b": {"ground": (0.045, 0.015), "segments": [(2, 0.02, 0.0)]}},
        {"a": {"ground": (0.0, 0.0), "segments": [(0, 0.01, -1.7870019517817433),
                                                  (3, 0.045, 0.0)]},
         "b": {"ground": (0.045, -0.015), "segments": [(4, 0.02, 0.0)]}},
        {"a": {"ground": (0.045, -0.015), "segments": [(4, 0.017399839258826565,
                                                        -0.8602074799492458),
                                                       (7, 0.0792275009481367, 0.0)]},
         "b": {"ground": (0.045, 0.015), "segments": [(2, 0.05, 0.0),
                                                      (8, 0.02760577599316929, 0.0)]}},
    ],
    # shoulder follows the first rocker, elbow is the relative angle of the
    # output link; offsets centre both on zero over a crank revolution
    "derived": [
        {"index": 5, "terms": [(2, 1.0)], "offset": -2.25186342732553},
        {"index": 6, "terms": [(8, 1.0), (2, -1.0)], "offset": 1.469342638930173},
    ],
    "reference_crank": 0.0,
    "reference_guess": (0.0, 0.862162943062027, 1.8605406977641032, 0.3225027868762861,
                        1.795954941601343, 0.0, 0.0, 1.5913826046652424, 0.5875477510580083),
}


def ks_config_from_dict(d: dict, **overrides) -> KSConfig:
    """Build a :class:`KSConfig` from plain nested data (as read from a config file)."""

    def chain(c):
        return Chain(tuple(float(v) for v in c["ground"]),
                     tuple(Segment(int(s[0]), float(s[1]), float(s[2]) if len(s) > 2 else 0.0)
                           for s in c["segments"]))

    try:
        loops = tuple(Loop(chain(lp["a"]), chain(lp["b"])) for lp in d["loops"])
        derived = tuple(Derived(int(x["index"]), tuple((int(j), float(c)) for j, c in x["terms"]),
                                float(x.get("offset", 0.0))) for x in d["derived"])
        kw = dict(loops=loops, derived=derived,
                  reference_crank=float(d["reference_crank"]),
                  reference_guess=tuple(float(v) for v in d["reference_guess"]))
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ConfigError("ks", f"malformed linkage description ({exc!r})") from exc
    kw.update(overrides)
    return KSConfig(**kw)


def default_ks_config(**overrides) -> KSConfig:
    """The shipped three-loop linkage: a shoulder amplitude of about 0.52 rad and an
    elbow swing of 0.30 rad lagging the shoulder by a quarter cycle."""
    return ks_config_from_dict(DEFAULT_GEOMETRY, **overrides)
