"""Strip-theory unsteady aerodynamics in linear time-varying state-space form.

Each wing segment is cut into spanwise strips. Strip ``j`` sees the local
inputs ``y1[j] = (w_n, omega_span, u_c)``: the normal velocity of its
reference point, the segment angular rate about the span axis and the
chordwise velocity. The kinematic downwash at three-quarter chord
``w_k = w_n + (c/2) omega_span`` drives two lag states per strip that
reproduce the two-pole Wagner indicial response::

    dxi_i/dt   = -lam_i xi_i + w_k,      lam_i = b_i V / (c/2)
    w_eff      = (1 - a_1 - a_2) w_k + a_1 lam_1 xi_1 + a_2 lam_2 xi_2

Forces per strip, with ``k = rho c ds / 2`` and ``V = |u_c|``::

    F_n = -k (C_La V w_eff + C_D |w_n| w_n)      along the surface normal
    F_c = -k C_D0 |u_c| u_c                      along the chord

The schedule ``(V, |w_n|)`` is frozen over an evaluation, which makes the
model exactly ``dxi = A xi + B y1``, ``u_a = C xi + D y1``. Generalized forces
follow from the strip-point Jacobians, ``u_a = sum J_j^T F_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError
from .model import AerobatParams, com_jacobians, forward_kinematics, wing_points


@dataclass
class AeroConfig:
    strips_proximal: int = 2
    strips_distal: int = 2
    chord_proximal: float = 0.10
    chord_distal: float = 0.08
    rho: float = 1.225
    lift_slope: float = 2 * np.pi
    a1: float = 0.165
    a2: float = 0.335
    b1: float = 0.0455
    b2: float = 0.3
    drag_coefficient: float = 1.2
    profile_drag: float = 0.02
    min_airspeed: float = 0.5
    enabled: bool = True

    def __post_init__(self):
        if self.strips_proximal < 1 or self.strips_distal < 1:
            raise ConfigError("aero.strips", "need at least one strip per segment")
        if not self.rho > 0:
            raise ConfigError("aero.rho", "must be > 0")
        if not (self.chord_proximal > 0 and self.chord_distal > 0):
            raise ConfigError("aero.chord", "chords must be > 0")
        if not (self.b1 > 0 and self.b2 > 0):
            raise ConfigError("aero.b1", "lag poles must be > 0")
        if not self.min_airspeed > 0:
            raise ConfigError("aero.min_airspeed", "must be > 0")


@dataclass
class StripGeometry:
    """Static strip layout; strips ordered left-proximal, left-distal, right..."""

    coeffs: np.ndarray  # (n, 3) point coefficients for wing_points
    side: np.ndarray  # (n,) 0 left, 1 right
    body: np.ndarray  # (n,) index of the carrying body in model.BODIES
    chord: np.ndarray  # (n,)
    span: np.ndarray  # (n,) strip width

    @property
    def n(self) -> int:
        return len(self.side)

    @property
    def n_states(self) -> int:
        return 2 * self.n


def strip_geometry(p: AerobatParams, cfg: AeroConfig) -> StripGeometry:
    coeffs, side, body, chord, span = [], [], [], [], []
    l2 = np.linalg.norm(p.l2)
    l3 = np.linalg.norm(p.l3)
    for s in (0, 1):
        for k in range(cfg.strips_proximal):
            coeffs.append((1.0, (k + 0.5) / cfg.strips_proximal, 0.0))
            body.append(1 + 2 * s)
            chord.append(cfg.chord_proximal)
            span.append(l2 / cfg.strips_proximal)
            side.append(s)
        for k in range(cfg.strips_distal):
            coeffs.append((1.0, 1.0, (k + 0.5) / cfg.strips_distal))
            body.append(2 + 2 * s)
            chord.append(cfg.chord_distal)
            span.append(l3 / cfg.strips_distal)
            side.append(s)
    return StripGeometry(
        np.array(coeffs), np.array(side), np.array(body), np.array(chord), np.array(span)
    )


class StripKinematics(NamedTuple):
    J: np.ndarray  # (n, 3, 8) strip point Jacobians
    frame: np.ndarray  # (n, 3, 2) inertial [normal, chord] directions
    y1: np.ndarray  # (n, 3) inputs (w_n, omega_span, u_c)


def strip_kinematics(q, dq, p: AerobatParams, geom: StripGeometry) -> StripKinematics:
    q = np.asarray(q, dtype=float)
    dq = np.asarray(dq, dtype=float)
    J = np.empty((geom.n, 3, 8))
    for s in (0, 1):
        mask = geom.side == s
        _, J[mask] = wing_points(q, p, s, geom.coeffs[mask])
    rots = forward_kinematics(q, p).rotations[geom.body]
    frame = np.stack([rots[:, :, 2], rots[:, :, 0]], axis=2)
    v = J @ dq
    _, Ja = com_jacobians(q, p)
    omega_local = (Ja @ dq)[geom.body]
    y1 = np.column_stack(
        [
            np.einsum("ni,ni->n", frame[:, :, 0], v),
            omega_local[:, 1],
            np.einsum("ni,ni->n", frame[:, :, 1], v),
        ]
    )
    return StripKinematics(J, frame, y1)


def schedule(y1) -> np.ndarray:
    """Frozen scheduling variables ``(|u_c|, |w_n|)`` per strip."""
    y1 = np.asarray(y1)
    return np.column_stack([np.abs(y1[:, 2]), np.abs(y1[:, 0])])


def _poles(sched, cfg: AeroConfig, geom: StripGeometry):
    V = np.maximum(sched[:, 0], cfg.min_airspeed)
    semichord = 0.5 * geom.chord
    return np.column_stack([cfg.b1 * V / semichord, cfg.b2 * V / semichord])


def _downwash(y1, geom):
    return y1[:, 0] + 0.5 * geom.chord * y1[:, 1]


def aero_derivative(xi, y1, sched, cfg: AeroConfig, geom: StripGeometry) -> np.ndarray:
    """Lag-state rates ``A xi + B y1`` (flattened, two states per strip)."""
    if not cfg.enabled:
        return np.zeros(geom.n_states)
    xi = np.asarray(xi, dtype=float).reshape(geom.n, 2)
    lam = _poles(np.asarray(sched), cfg, geom)
    wk = _downwash(np.asarray(y1), geom)
    return (-lam * xi + wk[:, None]).ravel()


def effective_downwash(xi, y1, sched, cfg: AeroConfig, geom: StripGeometry) -> np.ndarray:
    xi = np.asarray(xi, dtype=float).reshape(geom.n, 2)
    lam = _poles(np.asarray(sched), cfg, geom)
    wk = _downwash(np.asarray(y1), geom)
    return (1.0 - cfg.a1 - cfg.a2) * wk + cfg.a1 * lam[:, 0] * xi[:, 0] + cfg.a2 * lam[:, 1] * xi[:, 1]


def strip_forces(xi, y1, sched, cfg: AeroConfig, geom: StripGeometry) -> np.ndarray:
    """Local ``(F_n, F_c)`` per strip, shape ``(n, 2)``."""
    y1 = np.asarray(y1)
    sched = np.asarray(sched)
    k = 0.5 * cfg.rho * geom.chord * geom.span
    w_eff = effective_downwash(xi, y1, sched, cfg, geom)
    Fn = -k * (cfg.lift_slope * sched[:, 0] * w_eff + cfg.drag_coefficient * sched[:, 1] * y1[:, 0])
    Fc = -k * cfg.profile_drag * sched[:, 0] * y1[:, 2]
    return np.column_stack([Fn, Fc])


def aero_output(xi, kin: StripKinematics, sched, cfg: AeroConfig, geom: StripGeometry) -> np.ndarray:
    """Generalized aerodynamic force ``u_a`` (8,)."""
    if not cfg.enabled:
        return np.zeros(8)
    F = strip_forces(xi, kin.y1, sched, cfg, geom)
    f_inertial = np.einsum("nij,nj->ni", kin.frame, F)
    return np.einsum("nij,ni->j", kin.J, f_inertial)


def aero_evaluate(xi, q, dq, p: AerobatParams, cfg: AeroConfig, geom: StripGeometry):
    """Lag-state rates and ``u_a`` at the current rigid-body state."""
    if not cfg.enabled:
        return np.zeros(geom.n_states), np.zeros(8)
    kin = strip_kinematics(q, dq, p, geom)
    sched = schedule(kin.y1)
    return aero_derivative(xi, kin.y1, sched, cfg, geom), aero_output(xi, kin, sched, cfg, geom)


class AeroMatrices(NamedTuple):
    A: np.ndarray  # (n_a, n_a)
    B: np.ndarray  # (n_a, 3 n)
    C: np.ndarray  # (8, n_a)
    D: np.ndarray  # (8, 3 n)


def aero_matrices(kin: StripKinematics, sched, cfg: AeroConfig, geom: StripGeometry) -> AeroMatrices:
    """Assemble the frozen-schedule matrices with ``y1`` flattened strip-major."""
    n = geom.n
    sched = np.asarray(sched)
    lam = _poles(sched, cfg, geom)
    half_c = 0.5 * geom.chord
    k = 0.5 * cfg.rho * geom.chord * geom.span
    A = np.zeros((2 * n, 2 * n))
    B = np.zeros((2 * n, 3 * n))
    Cl = np.zeros((2 * n, 2 * n))  # local forces from states
    Dl = np.zeros((2 * n, 3 * n))  # local forces from inputs
    direct = 1.0 - cfg.a1 - cfg.a2
    for j in range(n):
        s, i = slice(2 * j, 2 * j + 2), slice(3 * j, 3 * j + 3)
        A[s, s] = np.diag(-lam[j])
        B[s, i] = [[1.0, half_c[j], 0.0], [1.0, half_c[j], 0.0]]
        circ = -k[j] * cfg.lift_slope * sched[j, 0]
        Cl[2 * j, s] = circ * np.array([cfg.a1 * lam[j, 0], cfg.a2 * lam[j, 1]])
        Dl[2 * j, i] = [circ * direct - k[j] * cfg.drag_coefficient * sched[j, 1],
                        circ * direct * half_c[j], 0.0]
        Dl[2 * j + 1, 3 * j + 2] = -k[j] * cfg.profile_drag * sched[j, 0]
    # generalized force map: u_a = T @ local forces
    T = np.einsum("nik,nij->knj", kin.J, kin.frame).reshape(8, 2 * n)
    if not cfg.enabled:
        return AeroMatrices(A, B, np.zeros((8, 2 * n)), np.zeros((8, 3 * n)))
    return AeroMatrices(A, B, T @ Cl, T @ Dl)
