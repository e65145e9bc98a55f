"""Generalized-momentum disturbance observer.

The residual ``r`` is built from the conjugate momentum ``p = M(q) dq`` and
the known generalized forces only::

    r(t) = K (p(t) - integral_0^t (u_a + u_m - gamma_hat + r) ds - p(0))

with ``gamma_hat = G - C^T dq``. Differentiating and using the momentum
balance ``dp/dt = u_a + u_m + u_f - gamma`` gives ``dr/dt = K (u_f - r)``:
each channel is a first-order low-pass copy of the unknown force ``u_f``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, NonPositiveDt
from .model import NQ, AerobatParams, mass_matrix


def conjugate_momentum(q, dq, p: AerobatParams) -> np.ndarray:
    """Generalized momentum ``M(q) dq``."""
    return mass_matrix(q, p) @ np.asarray(dq, dtype=float)


def _gains(K) -> np.ndarray:
    K = np.broadcast_to(np.asarray(K, dtype=float), (NQ,)).copy()
    if not np.all(K > 0) or not np.all(np.isfinite(K)):
        raise ConfigError("observer.gain", "all gains must be finite and > 0")
    return K


@dataclass(frozen=True)
class ObserverState:
    """Residual, running integral and the bookkeeping for the trapezoid rule.

    Attributes:
        K: Diagonal gains (1/s), shape ``(8,)``.
        r: Residual, the estimate of the unknown generalized force.
        integral: Running integral of ``u_a + u_m - gamma_hat + r``.
        p0: Momentum at the start of the run.
        integrand: Integrand value at the last update, reused by the next
            trapezoid step.
        t: Time of the last update.
    """

    K: np.ndarray
    r: np.ndarray
    integral: np.ndarray
    p0: np.ndarray
    integrand: np.ndarray
    t: float = 0.0


def observer_init(p0, K, u_a=None, u_m=None, gamma_hat=None, t0: float = 0.0) -> ObserverState:
    """Start an observer at momentum ``p0`` with ``r = 0`` and an empty integral.

    The known forces at ``t0`` seed the first trapezoid step; they default
    to zero.
    """
    zero = np.zeros(NQ)
    w0 = _known(u_a, u_m, gamma_hat)
    return ObserverState(_gains(K), zero.copy(), zero.copy(),
                         np.array(p0, dtype=float), w0, float(t0))


def _known(u_a, u_m, gamma_hat) -> np.ndarray:
    w = np.zeros(NQ)
    if u_a is not None:
        w += u_a
    if u_m is not None:
        w += u_m
    if gamma_hat is not None:
        w -= gamma_hat
    return w


def observer_step(obs: ObserverState, p_now, u_a, u_m, gamma_hat, dt: float) -> ObserverState:
    """Advance the observer by ``dt`` with the inputs sampled at the new time.

    The integral uses the trapezoid rule. Because the integrand contains
    ``r`` itself, the update is solved implicitly for the new residual::

        r_n (1 + K dt / 2) = K (p_n - p0 - I_{n-1} - dt/2 (g_{n-1} + w_n))

    where ``w_n = u_a + u_m - gamma_hat`` and ``g`` is the full integrand.
    Afterwards ``r = K (p_now - I - p0)`` holds exactly.

    Raises:
        NonPositiveDt: if ``dt <= 0``.
    """
    if not dt > 0:
        raise NonPositiveDt(f"observer step dt={dt} must be > 0")
    w = _known(u_a, u_m, gamma_hat)
    half = 0.5 * dt
    partial = obs.integral + half * (obs.integrand + w)
    K = obs.K
    r = K * (np.asarray(p_now, dtype=float) - obs.p0 - partial) / (1.0 + K * half)
    integral = partial + half * r
    return replace(obs, r=r, integral=integral, integrand=w + r, t=obs.t + dt)


def extract_point_force_estimate(r) -> np.ndarray:
    """Total external force in the inertial frame: the base-translation block of ``r``.

    Every point-force Jacobian has an identity base block, so this block is
    the sum of all applied forces regardless of where they act.
    """
    return np.array(np.asarray(r)[:3], dtype=float)


def filter_response(K: float, omega: float) -> complex:
    """Frequency response ``K / (j omega + K)`` of one observer channel."""
    return K / (1j * omega + K)
