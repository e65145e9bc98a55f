"""Running configured scenarios, summarizing logs and parameter sweeps."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import NON_CANONICAL, RunConfig, from_dict, set_key, to_jsonable
from .errors import AerobatError, DegenerateSeries
from .metrics import (axes_by_variance, energy_balance, energy_drift, force_fit,
                      raw_step_response, step_response)
from .sim import SimLog, run_scenario

METRICS_SCHEMA = 1


def run_config(cfg: RunConfig) -> SimLog:
    return run_scenario(cfg.params, cfg.ks, cfg.aero, cfg.scenario, cfg.sim, gait=cfg.gait)


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


def log_metrics(log: SimLog, window=None, gain=None, truth="F", estimate="Fhat") -> dict:
    """R^2 and RMSE per axis, energy drift and the step response of the estimate.

    The step response is measured on the axis with the largest truth
    variance, using ``gain`` (the observer gain of that channel) to remove
    the flapping ripple; without a gain only the raw response is reported.
    """
    F = log.block(truth)
    Fh = log.block(estimate)
    if F.shape[1] != 3 or Fh.shape[1] != 3:
        raise AerobatError(f"'{truth}' and '{estimate}' must each name a 3-axis block")
    fit = force_fit(F, Fh)
    order = axes_by_variance(F)
    out = {
        "schema": METRICS_SCHEMA,
        "seed": log.seed,
        "r2": {ax: fit[ax]["r2"] for ax in fit},
        "rmse": {ax: fit[ax]["rmse"] for ax in fit},
        "variance": {ax: fit[ax]["variance"] for ax in fit},
        "axes_by_variance": order,
        "energy_drift": energy_drift(log["T"], log["U"]),
    }
    if window is not None:
        i = "xyz".index(order[0])
        step = {"axis": order[0], "window": list(window)}
        try:
            raw = raw_step_response(log.t, F[:, i], Fh[:, i], window)
            step["raw_rise_time"] = _finite_or_none(raw.rise_time)
            if gain is not None:
                sr = step_response(log.t, F[:, i], Fh[:, i], window, gain)
                step["rise_time"] = _finite_or_none(sr.rise_time)
                step["decay_time"] = _finite_or_none(sr.decay_time)
                step["time_constants"] = 3.0 / gain
        except DegenerateSeries as exc:
            step["error"] = str(exc)
        out["step_response"] = step
    return out


def config_metrics(log: SimLog, cfg: RunConfig) -> dict:
    """:func:`log_metrics` for a run, with the config echo attached."""
    K = np.broadcast_to(np.asarray(cfg.scenario.observer_gain, dtype=float), (8,))
    order = axes_by_variance(log.force_truth)
    gain = float(K["xyz".index(order[0])])
    m = log_metrics(log, cfg.scenario.step_window, gain)
    if cfg.sim.energy_audit:
        dq = log.block("dq")
        power = np.sum(dq * (log.block("ua") + log.block("um") + log.block("uf")), axis=1)
        m["energy_balance"] = energy_balance(log.t, log["T"], log["U"], power)
    m["config"] = to_jsonable(cfg.raw)
    m["non_canonical"] = list(NON_CANONICAL)
    return m


# -- sweeps -----------------------------------------------------------------


def parse_grid(entries) -> dict:
    """``["observer.gain=5,20,80", ...]`` to ``{"observer.gain": [5, 20, 80]}``."""
    grid = {}
    for entry in entries or ():
        key, sep, values = entry.partition("=")
        if not sep or not key or not values:
            raise ValueError(f"grid entry {entry!r} is not of the form key=v1,v2,...")
        grid[key.strip()] = [_parse_value(v) for v in values.split(",")]
    return grid


def _parse_value(text):
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def grid_points(grid: dict) -> list[dict]:
    if not grid:
        return []
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _sweep_point(args):
    raw, point = args
    row = dict(point)
    try:
        for k, v in point.items():
            raw = set_key(raw, k, v)
        cfg = from_dict(raw)
        m = config_metrics(run_config(cfg), cfg)
        for ax in "xyz":
            row[f"r2_{ax}"] = m["r2"][ax]
            row[f"rmse_{ax}"] = m["rmse"][ax]
        row["rise_time"] = m["step_response"].get("rise_time")
        row["decay_time"] = m["step_response"].get("decay_time")
        row["energy_drift"] = m["energy_drift"]
        row["error"] = ""
    except AerobatError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


SWEEP_COLUMNS = ("r2_x", "r2_y", "r2_z", "rmse_x", "rmse_y", "rmse_z", "rise_time",
                 "decay_time", "energy_drift", "error")


def sweep(raw: dict, grid: dict, jobs: int = 1) -> list[dict]:
    """Run every grid point; failures are recorded in the ``error`` column.

    Points run in separate processes when ``jobs > 1``; results keep grid
    order either way.
    """
    points = grid_points(grid)
    # validate keys before any compute
    for key in grid:
        set_key(raw, key, None)
    tasks = [(raw, p) for p in points]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_point, tasks))
    return [_sweep_point(t) for t in tasks]
