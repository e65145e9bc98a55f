"""Five-body floating-base model of the flapping flyer.

Bodies, in the order used by every array in this module::

    0 B   main body
    1 PL  left proximal wing (shoulder driven)
    2 DL  left distal wing (elbow driven)
    3 PR  right proximal wing
    4 DR  right distal wing

Generalized coordinates ``q = (x, y, z, roll, pitch, yaw, q_s, q_e)``. The
left wing rotates by ``rot_x(q_s)`` / ``rot_x(q_e)``; the right wing is the
mirror image across the body x-z plane, so it rotates by ``rot_x(-q_s)`` /
``rot_x(-q_e)`` and uses reflected length vectors.

Equations of motion::

    M(q) a = -C(q, dq) dq - G(q) + u_a + u_m + u_f
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import ConfigError, NumericalSingularity
from . import _kernels as _k
from .spatial import check_pitch, euler_rate_map, euler_to_rotation, rot_x

NQ = 8
BASE = slice(0, 3)
ATTITUDE = slice(3, 6)
JOINTS = slice(6, 8)
BODIES = ("B", "PL", "DL", "PR", "DR")
COORDINATE_NAMES = ("x", "y", "z", "roll", "pitch", "yaw", "q_s", "q_e")

#: Reflection across the body x-z plane.
MIRROR = np.diag([1.0, -1.0, 1.0])
#: (side sign, index of proximal body, index of distal body)
SIDES = ((1.0, 1, 2), (-1.0, 3, 4))


def _rod_inertia(mass, length, radius, axis):
    """Diagonal inertia of a solid cylinder about its centre."""
    axial = 0.5 * mass * radius**2
    transverse = mass * (3.0 * radius**2 + length**2) / 12.0
    out = [transverse] * 3
    out[axis] = axial
    return tuple(out)


@dataclass
class AerobatParams:
    """Mass, inertia and morphology of the flyer (SI units).

    Length vectors ``l1, l2, l3`` are given for the left side in the local
    frames of body, proximal and distal wing; the right side uses their
    mirror images. ``wing_point`` places the external-force application point
    at ``s`` of the way along the distal length vector.

    The defaults describe a ~60 g platform and are not published values.
    """

    m_B: float = 0.04
    m_P: float = 0.006
    m_D: float = 0.004
    I_B: tuple = _rod_inertia(0.04, 0.12, 0.015, axis=0)
    I_P: tuple = _rod_inertia(0.006, 0.15, 0.005, axis=1)
    I_D: tuple = _rod_inertia(0.004, 0.15, 0.004, axis=1)
    l1: tuple = (0.0, 0.03, 0.0)
    l2: tuple = (0.0, 0.15, 0.0)
    l3: tuple = (0.0, 0.15, 0.0)
    g: float = 9.81
    wing_point: float = 0.5
    joint_limits: tuple = ((-np.pi / 2, np.pi / 2), (-np.pi / 2, np.pi / 2))
    # derived, filled in __post_init__
    masses: np.ndarray = field(init=False, repr=False)
    inertias: np.ndarray = field(init=False, repr=False)
    inertia_diag: np.ndarray = field(init=False, repr=False)
    lengths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("m_B", "m_P", "m_D"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"model.{name}", "mass must be > 0")
        for name in ("I_B", "I_P", "I_D"):
            vals = np.asarray(getattr(self, name), dtype=float)
            if vals.shape != (3,) or not np.all(vals > 0):
                raise ConfigError(f"model.{name}", "inertia must be three positive entries")
        for name in ("l1", "l2", "l3"):
            vals = np.asarray(getattr(self, name), dtype=float)
            if vals.shape != (3,) or not np.all(np.isfinite(vals)):
                raise ConfigError(f"model.{name}", "length vector must be three finite entries")
        if not 0.0 <= self.wing_point <= 1.0:
            raise ConfigError("model.wing_point", "must lie in [0, 1]")
        if not self.g >= 0:
            raise ConfigError("model.g", "gravity must be >= 0")
        lim = np.asarray(self.joint_limits, dtype=float)
        if lim.shape != (2, 2) or not np.all(lim[:, 0] < lim[:, 1]):
            raise ConfigError("model.joint_limits", "need [[lo, hi], [lo, hi]] with lo < hi")
        self.masses = np.array([self.m_B, self.m_P, self.m_D, self.m_P, self.m_D])
        inertia = [self.I_B, self.I_P, self.I_D, self.I_P, self.I_D]
        self.inertia_diag = np.array(inertia, dtype=float)
        self.inertias = np.array([np.diag(i) for i in inertia], dtype=float)
        left = np.array([self.l1, self.l2, self.l3], dtype=float)
        # lengths[side, k] with side 0 = left, 1 = right
        self.lengths = np.stack([left, left @ MIRROR])

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def scaled(self, mass_factor: float) -> "AerobatParams":
        """Copy with every mass and inertia multiplied by ``mass_factor``."""
        f = mass_factor
        return AerobatParams(
            m_B=self.m_B * f,
            m_P=self.m_P * f,
            m_D=self.m_D * f,
            I_B=tuple(np.multiply(self.I_B, f)),
            I_P=tuple(np.multiply(self.I_P, f)),
            I_D=tuple(np.multiply(self.I_D, f)),
            l1=self.l1,
            l2=self.l2,
            l3=self.l3,
            g=self.g,
            wing_point=self.wing_point,
            joint_limits=self.joint_limits,
        )


class Pose(NamedTuple):
    """Forward kinematics result; arrays are indexed by :data:`BODIES`."""

    positions: np.ndarray  # (5, 3) centre-of-mass positions, inertial
    rotations: np.ndarray  # (5, 3, 3) body-to-inertial rotations


class Frames(NamedTuple):
    R_B: np.ndarray
    E: np.ndarray
    R_P: tuple  # (left, right) relative to body
    R_D: tuple  # (left, right) relative to proximal


def _frames(q) -> Frames:
    e = q[ATTITUDE]
    R_B = euler_to_rotation(e)
    E = euler_rate_map(e)
    R_P = (rot_x(q[6]), rot_x(-q[6]))
    R_D = (rot_x(q[7]), rot_x(-q[7]))
    return Frames(R_B, E, R_P, R_D)


def wing_points(q, p: AerobatParams, side: int, coeffs):
    """Positions and Jacobians of points rigidly attached to one wing.

    Each row of ``coeffs`` is ``(c1, c2, c3)`` and places a point at body-frame
    offset ``c1*l1 + c2*R_P l2 + c3*R_P R_D l3`` from the body centre of mass.

    Args:
        q: generalized coordinates, shape ``(8,)``.
        p: model parameters.
        side: 0 for the left wing, 1 for the right wing.
        coeffs: array of shape ``(n, 3)``.

    Returns:
        ``(positions, jacobians)`` of shapes ``(n, 3)`` and ``(n, 3, 8)``,
        inertial frame.
    """
    q = _checked(q)
    c = np.ascontiguousarray(np.atleast_2d(np.asarray(coeffs, dtype=float)))
    return _k.wing_points(q, p.lengths, side, c)


def _checked(q) -> np.ndarray:
    q = np.ascontiguousarray(q, dtype=float)
    check_pitch(q[4])
    return q


def _body_jacobians(q, p: AerobatParams):
    """COM positions (5,3), linear Jacobians (5,3,8), angular Jacobians (5,3,8)."""
    return _k.bodies(_checked(q), p.lengths)


def forward_kinematics(q, p: AerobatParams) -> Pose:
    """Centre-of-mass positions and orientations of all five bodies."""
    q = _checked(q)
    fr = _frames(q)
    pos, _, _ = _body_jacobians(q, p)
    rots = np.empty((5, 3, 3))
    rots[0] = fr.R_B
    for side, (_, ip, id_) in enumerate(SIDES):
        rots[ip] = fr.R_B @ fr.R_P[side]
        rots[id_] = rots[ip] @ fr.R_D[side]
    return Pose(pos, rots)


def com_jacobians(q, p: AerobatParams):
    """Per-body linear-velocity and local angular-velocity Jacobians.

    Returns:
        ``(J_lin, J_ang)``, each of shape ``(5, 3, 8)``, such that
        ``dp_F/dt = J_lin[F] @ dq`` (inertial) and
        ``omega_F^F = J_ang[F] @ dq`` (expressed in the body's own frame).
    """
    _, Jl, Ja = _body_jacobians(q, p)
    return Jl, Ja


def mass_matrix(q, p: AerobatParams) -> np.ndarray:
    """Symmetric positive-definite 8x8 mass matrix."""
    _, Jl, Ja = _body_jacobians(q, p)
    return _k.mass_matrix(p.masses, p.inertia_diag, Jl, Ja)


def gravity_vector(q, p: AerobatParams) -> np.ndarray:
    """Gradient of the potential energy, ``G = dU/dq``."""
    _, Jl, _ = _body_jacobians(q, p)
    return p.g * (p.masses @ Jl[:, 2, :])


def kinetic_energy(q, dq, p: AerobatParams) -> float:
    _, Jl, Ja = _body_jacobians(q, p)
    v = Jl @ dq
    w = Ja @ dq
    return 0.5 * float(
        np.einsum("f,fi,fi->", p.masses, v, v) + np.einsum("fi,fij,fj->", w, p.inertias, w)
    )


def potential_energy(q, p: AerobatParams) -> float:
    pos = forward_kinematics(q, p).positions
    return float(p.g * p.masses @ pos[:, 2])


def mass_matrix_derivatives(q, p: AerobatParams, h: float = 1e-6) -> np.ndarray:
    """Central-difference partials ``dM[k] = dM/dq_k``, shape ``(8, 8, 8)``."""
    q = np.asarray(q, dtype=float)
    dM = np.empty((NQ, NQ, NQ))
    for k in range(NQ):
        dqk = np.zeros(NQ)
        dqk[k] = h
        dM[k] = (mass_matrix(q + dqk, p) - mass_matrix(q - dqk, p)) / (2.0 * h)
    return dM


def coriolis_matrix(q, dq, p: AerobatParams, h: float = 1e-6) -> np.ndarray:
    """Coriolis/centrifugal matrix from Christoffel symbols of ``M``.

    ``C[i, j] = sum_k c_ijk dq_k`` with
    ``c_ijk = (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i) / 2``; this choice makes
    ``dM/dt - 2C`` skew-symmetric.
    """
    dq = np.asarray(dq, dtype=float)
    dM = mass_matrix_derivatives(q, p, h)  # dM[k, i, j]
    t1 = np.einsum("kij,k->ij", dM, dq)  # dM_ij/dq_k
    t2 = np.einsum("jik,k->ij", dM, dq)  # dM_ik/dq_j
    t3 = np.einsum("ijk,k->ij", dM, dq)  # dM_jk/dq_i
    return 0.5 * (t1 + t2 - t3)


class DynamicsTerms(NamedTuple):
    M: np.ndarray  # mass matrix
    Cdq: np.ndarray  # C(q, dq) @ dq
    CTdq: np.ndarray  # C(q, dq).T @ dq
    G: np.ndarray  # gravity vector


def dynamics_terms(q, dq, p: AerobatParams, rel_step: float = 1e-6) -> DynamicsTerms:
    """Mass matrix and velocity terms in one pass.

    ``C dq`` is evaluated body by body as
    ``sum m J_l^T (dJ_l dq) + J_a^T (I dJ_a dq + w x I w)``, which equals the
    Christoffel contraction; ``dJ`` comes from a central difference along
    ``dq``. ``C^T dq`` then follows from ``dM/dt = C + C^T``.
    """
    q = _checked(q)
    dq = np.ascontiguousarray(dq, dtype=float)
    return DynamicsTerms(*_k.terms(q, dq, p.masses, p.inertia_diag, p.lengths, p.g, rel_step))


def gamma(q, dq, p: AerobatParams) -> np.ndarray:
    """``G(q) - C(q, dq)^T dq``, the known-dynamics term of the momentum balance."""
    t = dynamics_terms(q, dq, p)
    return t.G - t.CTdq


def point_force_jacobian(q, p: AerobatParams, s: float | None = None):
    """Jacobians of the external-force application points.

    The point sits at fraction ``s`` (default ``p.wing_point``) along the
    distal length vector, measured from the distal-wing root.

    Returns:
        ``(J_left, J_right)``, each ``(3, 8)``.
    """
    s = p.wing_point if s is None else s
    coeff = [(1.0, 1.0, s)]
    _, JL = wing_points(q, p, 0, coeff)
    _, JR = wing_points(q, p, 1, coeff)
    return JL[0], JR[0]


def point_force_position(q, p: AerobatParams, s: float | None = None):
    """Inertial positions ``(left, right)`` of the force application points."""
    s = p.wing_point if s is None else s
    coeff = [(1.0, 1.0, s)]
    pl, _ = wing_points(q, p, 0, coeff)
    pr, _ = wing_points(q, p, 1, coeff)
    return pl[0], pr[0]


def solve_spd(M, rhs):
    try:
        factor = cho_factor(M, check_finite=False)
    except LinAlgError as exc:
        raise NumericalSingularity(f"mass matrix is not positive definite: {exc}") from exc
    if not np.all(np.isfinite(factor[0])):
        raise NumericalSingularity("mass matrix factorization produced non-finite values")
    return cho_solve(factor, rhs, check_finite=False)


def forward_dynamics(q, dq, u_a, u_m, u_f, p: AerobatParams, terms: DynamicsTerms | None = None):
    """Generalized accelerations ``M^-1 (-C dq - G + u_a + u_m + u_f)``."""
    t = terms if terms is not None else dynamics_terms(q, dq, p)
    rhs = -t.Cdq - t.G + np.asarray(u_a) + np.asarray(u_m) + np.asarray(u_f)
    return solve_spd(t.M, rhs)


def body_angular_velocity(q, dq) -> np.ndarray:
    """Body angular velocity in the body frame from Euler rates."""
    return euler_rate_map(np.asarray(q)[ATTITUDE]) @ np.asarray(dq)[ATTITUDE]


def mirror_state(q) -> np.ndarray:
    """Reflect a state across the inertial x-z plane (y, roll, yaw flip sign)."""
    q = np.array(q, dtype=float)
    q[[1, 3, 5]] *= -1.0
    return q
