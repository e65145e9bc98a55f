"""Accuracy metrics for force estimates and observer step responses."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.signal import lfilter

from .errors import DegenerateSeries

AXES = ("x", "y", "z")


def r_squared(actual, estimated) -> float:
    """Coefficient of determination ``1 - SS_res / SS_tot``.

    Raises:
        DegenerateSeries: if ``actual`` is constant or too short.
    """
    a = np.asarray(actual, dtype=float)
    e = np.asarray(estimated, dtype=float)
    if a.shape != e.shape or a.size < 2:
        raise DegenerateSeries("need two equal-length series with at least two samples")
    ss_tot = np.sum((a - a.mean()) ** 2)
    if ss_tot == 0.0:
        raise DegenerateSeries("actual series is constant")
    return float(1.0 - np.sum((a - e) ** 2) / ss_tot)


def rmse(actual, estimated) -> float:
    a = np.asarray(actual, dtype=float)
    e = np.asarray(estimated, dtype=float)
    return float(np.sqrt(np.mean((a - e) ** 2)))


def first_order_filter(u, gain: float, dt: float, y0: float = 0.0) -> np.ndarray:
    """Trapezoidal discretization of ``dy/dt = gain (u - y)`` on a uniform grid."""
    u = np.asarray(u, dtype=float)
    c = 0.5 * gain * dt
    b = np.array([c, c]) / (1.0 + c)
    a = np.array([1.0, -(1.0 - c) / (1.0 + c)])
    zi = np.array([y0 * (1.0 - c) / (1.0 + c) + c / (1.0 + c) * u[0]]) if u.size else None
    if u.size == 0:
        return u.copy()
    y, _ = lfilter(b, a, u[1:], zi=zi)
    return np.concatenate([[y0], y])


class StepResponse(NamedTuple):
    rise_time: float  # s from onset until the response first reaches 95 %
    decay_time: float  # s from release until it first falls to 5 %
    increment: float  # mean step increment used for normalization
    fraction: np.ndarray  # normalized response over the whole record


def _after(t, edge):
    # same edge tolerance as Scenario.in_step_window for grid times n * dt
    return t > edge + 1e-12 * np.maximum(1.0, np.abs(t))


def _crossing(t, mask, values, above: bool, level: float) -> float:
    hit = mask & ((values >= level) if above else (values <= level))
    if not hit.any():
        return float("nan")
    return float(t[np.argmax(hit)])


def step_response(t, truth, estimate, window, gain: float, baseline_truth=None,
                  baseline_estimate=None) -> StepResponse:
    """Rise and decay times of a force estimate across a step window.

    The step increment is the truth minus a baseline (a run without the step,
    or zero). Because the disturbance direction moves with the wing, that
    increment carries flapping ripple; the response of an ideal channel with
    ``gain`` to the ripple alone (the increment minus a flat step of its
    mean height) is subtracted before normalizing, so the fraction is the
    observer's response to the flat step.

    Args:
        t: Uniform time grid.
        truth, estimate: One force component (or any scalar channel).
        window: ``(t_on, t_off)`` of the step.
        gain: Observer gain of this channel (1/s).
        baseline_truth, baseline_estimate: Same channels from a step-free run
            with the same seed.
    """
    t = np.asarray(t, dtype=float)
    d_true = np.asarray(truth, dtype=float) - (0.0 if baseline_truth is None else baseline_truth)
    d_est = np.asarray(estimate, dtype=float) - (
        0.0 if baseline_estimate is None else baseline_estimate)
    t_on, t_off = window
    inside = _after(t, t_on) & ~_after(t, t_off)
    if not inside.any():
        raise DegenerateSeries("step window contains no samples")
    height = float(d_true[inside].mean())
    if height == 0.0:
        raise DegenerateSeries("step increment is zero")
    template = np.where(inside, height, 0.0)
    dt = float(t[1] - t[0])
    ripple_response = first_order_filter(d_true - template, gain, dt)
    fraction = (d_est - ripple_response) / height
    rise = _crossing(t, _after(t, t_on), fraction, True, 0.95) - t_on
    decay = _crossing(t, _after(t, t_off), fraction, False, 0.05) - t_off
    return StepResponse(rise, decay, height, fraction)


def raw_step_response(t, truth, estimate, window, baseline_truth=None,
                      baseline_estimate=None) -> StepResponse:
    """Rise and decay times with the estimate normalized by the mean increment only."""
    t = np.asarray(t, dtype=float)
    d_true = np.asarray(truth) - (0.0 if baseline_truth is None else baseline_truth)
    d_est = np.asarray(estimate) - (0.0 if baseline_estimate is None else baseline_estimate)
    t_on, t_off = window
    inside = _after(t, t_on) & ~_after(t, t_off)
    if not inside.any():
        raise DegenerateSeries("step window contains no samples")
    height = float(d_true[inside].mean())
    if height == 0.0:
        raise DegenerateSeries("step increment is zero")
    fraction = d_est / height
    rise = _crossing(t, _after(t, t_on), fraction, True, 0.95) - t_on
    decay = _crossing(t, _after(t, t_off), np.abs(fraction), False, 0.05) - t_off
    return StepResponse(rise, decay, height, fraction)


def force_fit(truth, estimate) -> dict:
    """Per-axis R^2 and RMSE between two ``(n, 3)`` force series.

    Axes with constant truth get ``None`` for R^2.
    """
    truth = np.asarray(truth)
    estimate = np.asarray(estimate)
    out = {}
    for i, ax in enumerate(AXES):
        try:
            r2 = r_squared(truth[:, i], estimate[:, i])
        except DegenerateSeries:
            r2 = None
        out[ax] = {"r2": r2, "rmse": rmse(truth[:, i], estimate[:, i]),
                   "variance": float(np.var(truth[:, i]))}
    return out


def axes_by_variance(truth) -> list[str]:
    """Axis names sorted by decreasing variance of ``truth``."""
    v = np.var(np.asarray(truth), axis=0)
    return [AXES[i] for i in np.argsort(-v, kind="stable")]


def energy_drift(T, U) -> float:
    """Largest relative deviation of ``T + U`` from its initial value."""
    E = np.asarray(T) + np.asarray(U)
    scale = max(abs(E[0]), np.finfo(float).tiny)
    return float(np.max(np.abs(E - E[0])) / scale)


def energy_balance(t, T, U, power) -> float:
    """RMS mismatch between per-record energy changes and the input work, relative to RMS work.

    ``power`` is ``dq . (u_a + u_m + u_f)`` per record; the work over each
    interval uses the trapezoid rule. Forces held over a step (the noise
    sample, the edges of the step window) differ from their logged samples,
    so noisy runs show a residual of a few percent while smooth runs close to
    about 1e-6.
    """
    t = np.asarray(t, dtype=float)
    power = np.asarray(power, dtype=float)
    dE = np.diff(np.asarray(T) + np.asarray(U))
    work = 0.5 * np.diff(t) * (power[1:] + power[:-1])
    scale = max(float(np.sqrt(np.mean(work**2))), np.finfo(float).tiny)
    return float(np.sqrt(np.mean((dE - work) ** 2)) / scale)
