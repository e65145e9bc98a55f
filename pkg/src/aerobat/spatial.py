"""Small 3-D rotation toolkit.

Conventions: right-handed frames, active rotations, radians. Body attitude
uses ZYX (yaw-pitch-roll) Euler angles ``e = (roll, pitch, yaw)`` with
``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)`` mapping body-frame vectors to the
inertial frame.
"""

from __future__ import annotations

import numpy as np

from .errors import GimbalLock

#: Minimum distance of the pitch angle from +/- pi/2 [rad].
GIMBAL_MARGIN = 1e-3

EX = np.array([1.0, 0.0, 0.0])
EY = np.array([0.0, 1.0, 0.0])
EZ = np.array([0.0, 0.0, 1.0])


def rot_x(angle: float) -> np.ndarray:
    """Rotation matrix about the x-axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    """Rotation matrix about the y-axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    """Rotation matrix about the z-axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def skew(v) -> np.ndarray:
    """Cross-product matrix: ``skew(v) @ w == np.cross(v, w)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of :func:`skew`, using the antisymmetric part of ``m``."""
    return 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def euler_to_rotation(e) -> np.ndarray:
    """Body-to-inertial rotation for ZYX Euler angles ``(roll, pitch, yaw)``."""
    roll, pitch, yaw = e
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def rotation_to_euler(R: np.ndarray) -> np.ndarray:
    """Recover ``(roll, pitch, yaw)`` from a rotation matrix.

    The pitch is returned in ``[-pi/2, pi/2]``; at exactly +/- pi/2 the split
    between roll and yaw is arbitrary and roll is set to zero.
    """
    s_pitch = -R[2, 0]
    pitch = np.arcsin(np.clip(s_pitch, -1.0, 1.0))
    if abs(abs(s_pitch) - 1.0) < 1e-12:
        return np.array([0.0, pitch, np.arctan2(-R[0, 1], R[1, 1])])
    roll = np.arctan2(R[2, 1], R[2, 2])
    yaw = np.arctan2(R[1, 0], R[0, 0])
    return np.array([roll, pitch, yaw])


def check_pitch(pitch: float) -> None:
    if not abs(pitch) < np.pi / 2 - GIMBAL_MARGIN:
        raise GimbalLock(f"pitch {pitch:.6f} rad is within {GIMBAL_MARGIN} rad of +/-pi/2")


def euler_rate_map(e) -> np.ndarray:
    """Matrix ``E`` with ``omega_body = E @ (roll_dot, pitch_dot, yaw_dot)``.

    The body angular velocity satisfies ``dR/dt = R @ skew(omega_body)``.

    Raises:
        GimbalLock: if ``|pitch| >= pi/2 - GIMBAL_MARGIN``.
    """
    roll, pitch, _ = e
    check_pitch(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    return np.array(
        [
            [1.0, 0.0, -sp],
            [0.0, cr, sr * cp],
            [0.0, -sr, cr * cp],
        ]
    )


def is_rotation(R: np.ndarray, tol: float = 1e-9) -> bool:
    """True if ``R`` is orthonormal with determinant +1 within ``tol``."""
    R = np.asarray(R)
    return bool(
        np.linalg.norm(R.T @ R - np.eye(3)) <= tol and abs(np.linalg.det(R) - 1.0) <= tol
    )
