import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aerobat.errors import GimbalLock
from aerobat.spatial import (
    euler_rate_map,
    euler_to_rotation,
    is_rotation,
    rot_x,
    rot_y,
    rot_z,
    rotation_to_euler,
    skew,
    vee,
)

angles = st.floats(-10, 10, allow_nan=False)


def test_rot_x_identity_and_quarter_turn():
    assert np.array_equal(rot_x(0.0), np.eye(3))
    assert np.allclose(rot_x(np.pi / 2) @ [0, 1, 0], [0, 0, 1], atol=1e-15)


def test_rot_x_composes():
    assert np.max(np.abs(rot_x(0.3) @ rot_x(0.7) - rot_x(1.0))) <= 1e-12


def test_rot_x_inverse_is_transpose(rng):
    for a in rng.uniform(-np.pi, np.pi, 100):
        assert np.max(np.abs(rot_x(-a) - rot_x(a).T)) <= 1e-12


@given(angles)
def test_elementary_rotations_are_proper(a):
    for R in (rot_x(a), rot_y(a), rot_z(a)):
        assert is_rotation(R)


def test_skew_examples():
    assert np.array_equal(skew((0, 0, 0)), np.zeros((3, 3)))
    assert np.allclose(skew((1, 0, 0)) @ [0, 1, 0], [0, 0, 1])
    v = np.array([0.2, -1.3, 0.5])
    assert abs(v @ skew(v) @ v) < 1e-15


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_skew_is_cross_product(v, w):
    S = skew(v)
    assert np.allclose(S @ w, np.cross(v, w), atol=1e-12)
    assert np.array_equal(S.T, -S)
    assert np.allclose(vee(S), v)


def test_euler_to_rotation_reductions():
    assert np.allclose(euler_to_rotation((0, 0, 0)), np.eye(3))
    assert np.max(np.abs(euler_to_rotation((0.4, 0, 0)) - rot_x(0.4))) <= 1e-12


def test_euler_round_trip():
    e = np.array([0.1, 0.2, 0.3])
    assert np.max(np.abs(rotation_to_euler(euler_to_rotation(e)) - e)) <= 1e-10


@settings(max_examples=50)
@given(st.floats(-3, 3), st.floats(-1.5, 1.5), st.floats(-3, 3))
def test_euler_round_trip_random(r, p, y):
    R = euler_to_rotation((r, p, y))
    assert is_rotation(R)
    assert np.allclose(euler_to_rotation(rotation_to_euler(R)), R, atol=1e-9)


def _omega_from_rotation_rate(e, de, h=1e-6):
    R = euler_to_rotation(e)
    Rdot = (euler_to_rotation(e + h * de) - euler_to_rotation(e - h * de)) / (2 * h)
    return vee(R.T @ Rdot)


def test_euler_rate_map_level():
    assert np.array_equal(euler_rate_map((0, 0, 0)), np.eye(3))


def test_euler_rate_map_matches_rotation_derivative():
    e = np.array([0.1, 0.3, -0.2])
    de = np.array([0.5, -0.1, 0.2])
    assert np.max(np.abs(euler_rate_map(e) @ de - _omega_from_rotation_rate(e, de))) <= 1e-5


def test_euler_rate_map_random(rng):
    for _ in range(100):
        e = np.array([rng.uniform(-3, 3), rng.uniform(-1.3, 1.3), rng.uniform(-3, 3)])
        de = rng.normal(size=3)
        E = euler_rate_map(e)
        assert abs(np.linalg.det(E)) > 1e-3
        assert np.max(np.abs(E @ de - _omega_from_rotation_rate(e, de))) <= 1e-5


@pytest.mark.parametrize("pitch", [np.pi / 2, -np.pi / 2, np.pi / 2 - 5e-4])
def test_gimbal_lock(pitch):
    with pytest.raises(GimbalLock):
        euler_rate_map((0.0, pitch, 0.0))
