"""Run configuration: one TOML file with a section per component.

Sections are ``model`` (every key required), ``ks``, ``gait``, ``aero``,
``scenario``, ``observer`` and ``sim``; a top-level ``version`` selects the
schema. Keys outside the schema are rejected so typos fail loudly, and every
error names the offending key path.
"""

from __future__ import annotations

import copy
import dataclasses
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .aero import AeroConfig
from .disturbance import Scenario
from .errors import ConfigError
from .linkage import DEFAULT_GEOMETRY, KSConfig, SinusoidalGait, ks_config_from_dict
from .model import AerobatParams
from .sim import SimConfig

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SCHEMA_VERSION = 1

MODEL_KEYS = ("m_B", "m_P", "m_D", "I_B", "I_P", "I_D", "l1", "l2", "l3", "g", "wing_point",
              "joint_limits")
KS_KEYS = ("crank_rate", "crank_accel", "geometry")
GAIT_KEYS = ("frequency", "amplitude_s", "amplitude_e", "phase_s", "phase_e", "offset_s",
             "offset_e", "kp", "kd")
OBSERVER_KEYS = {"gain": "observer_gain", "decimation": "observer_decimation",
                 "measurement_noise": "measurement_noise", "mass_error": "mass_error"}
SCENARIO_KEYS = ("seed", "noise_sigma", "base_gain", "step_magnitude", "step_window",
                 "direction_mode", "direction", "per_wing", "aero", "actuated", "gait_source")
AERO_KEYS = tuple(f.name for f in dataclasses.fields(AeroConfig))
SIM_KEYS = ("dt", "duration", "decimation", "integrator", "energy_audit", "position",
            "attitude", "velocity", "euler_rates", "joints")
SECTIONS = {"model": MODEL_KEYS, "ks": KS_KEYS, "gait": GAIT_KEYS, "aero": AERO_KEYS,
            "scenario": SCENARIO_KEYS, "observer": tuple(OBSERVER_KEYS), "sim": SIM_KEYS}

#: Settings whose values are stand-ins rather than known properties of a real
#: vehicle; echoed in every metrics file.
NON_CANONICAL = ("model", "ks.geometry", "aero", "sim.velocity", "gait.kp", "gait.kd",
                 "observer.gain")


@dataclass
class RunConfig:
    """Everything :func:`aerobat.sim.run_scenario` needs, plus the raw echo."""

    params: AerobatParams
    ks: KSConfig
    gait: SinusoidalGait
    aero: AeroConfig
    scenario: Scenario
    sim: SimConfig
    raw: dict

    @property
    def seed(self) -> int:
        return self.scenario.rng_seed


def _tuple(v):
    if isinstance(v, list):
        return tuple(_tuple(x) for x in v)
    return v


def _check_keys(section, table, allowed):
    if not isinstance(table, dict):
        raise ConfigError(section, "must be a table")
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{section}.{key}", "unknown key")


def _build(cls, section, kwargs):
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(section, str(exc)) from exc


def from_dict(raw: dict) -> RunConfig:
    """Validate a parsed config and build the component objects.

    Raises:
        ConfigError: naming the key path of the first problem found.
    """
    raw = copy.deepcopy(raw)
    version = raw.get("version")
    if version is None:
        raise ConfigError("version", "missing key")
    if version != SCHEMA_VERSION:
        raise ConfigError("version", f"unsupported schema version {version!r}")
    for key in raw:
        if key != "version" and key not in SECTIONS:
            raise ConfigError(key, "unknown section")
    if "model" not in raw:
        raise ConfigError("model", "missing section")
    for name, allowed in SECTIONS.items():
        _check_keys(name, raw.get(name, {}), allowed)

    model = raw["model"]
    for key in MODEL_KEYS:
        if key not in model:
            raise ConfigError(f"model.{key}", "missing key")
    params = _build(AerobatParams, "model", {k: _tuple(model[k]) for k in MODEL_KEYS})

    ks_raw = raw.get("ks", {})
    ks_kw = {k: float(ks_raw[k]) for k in ("crank_rate", "crank_accel") if k in ks_raw}
    ks = ks_config_from_dict(ks_raw.get("geometry", DEFAULT_GEOMETRY), **ks_kw)

    gait_raw = dict(raw.get("gait", {}))
    kp = gait_raw.pop("kp", SimConfig.kp)
    kd = gait_raw.pop("kd", SimConfig.kd)
    gait = _build(SinusoidalGait, "gait", gait_raw)

    aero = _build(AeroConfig, "aero", dict(raw.get("aero", {})))

    sc_kw = {("rng_seed" if k == "seed" else k): _tuple(v)
             for k, v in raw.get("scenario", {}).items()}
    for k, v in raw.get("observer", {}).items():
        sc_kw[OBSERVER_KEYS[k]] = _tuple(v)
    scenario = _build(Scenario, "scenario", sc_kw)

    sim_kw = {k: _tuple(v) for k, v in raw.get("sim", {}).items()}
    sim = _build(SimConfig, "sim", {**sim_kw, "kp": kp, "kd": kd})
    return RunConfig(params, ks, gait, aero, scenario, sim, raw)


def load_config(path) -> RunConfig:
    """Read and validate a TOML config file (never modified)."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read file ({exc.strerror})") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML ({exc})") from exc
    return from_dict(raw)


def default_config_path():
    return resources.files("aerobat") / "data" / "default.toml"


def default_raw() -> dict:
    with default_config_path().open("rb") as fh:
        return tomllib.load(fh)


def default_config() -> RunConfig:
    """The shipped default configuration."""
    return from_dict(default_raw())


def set_key(raw: dict, path: str, value) -> dict:
    """Copy of ``raw`` with the dotted ``path`` (e.g. ``"observer.gain"``) set."""
    parts = path.split(".")
    if len(parts) != 2 or parts[0] not in SECTIONS or parts[1] not in SECTIONS[parts[0]]:
        raise ConfigError(path, "not a configurable key")
    out = copy.deepcopy(raw)
    out.setdefault(parts[0], {})[parts[1]] = value
    return out


def with_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    raw = cfg.raw
    for k, v in overrides.items():
        raw = set_key(raw, k, v)
    return from_dict(raw)


def to_jsonable(obj):
    """Plain-JSON version of nested config data (tuples and arrays become lists)."""
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
