"""CSV log and JSON metrics files.

The CSV format is a stable interface:

* line 1: ``# aerobat-log schema=1 seed=<seed> dt=<dt> columns=<n>``;
* line 2: comma-separated column names, exactly :data:`aerobat.sim.COLUMNS`;
* then one row per recorded step, every value written with ``%.17g`` so it
  reads back bit-identically.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .errors import SchemaMismatch
from .sim import COLUMNS, SimLog

LOG_SCHEMA = 1
_HEADER = re.compile(r"^# aerobat-log schema=(\d+) seed=(-?\d+) dt=(\S+) columns=(\d+)$")


def write_log(log: SimLog, path) -> Path:
    path = Path(path)
    dt = log.meta.get("dt", float(log.t[1] - log.t[0]) if len(log.t) > 1 else 0.0)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# aerobat-log schema={LOG_SCHEMA} seed={log.seed} dt={dt!r} "
                 f"columns={len(COLUMNS)}\n")
        fh.write(",".join(COLUMNS) + "\n")
        np.savetxt(fh, log.data, fmt="%.17g", delimiter=",")
    return path


def read_log(path) -> SimLog:
    """Load a CSV log written by :func:`write_log`.

    Raises:
        SchemaMismatch: if the header, the column names or the row widths do
            not match the current schema.
    """
    path = Path(path)
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
        names = fh.readline().rstrip("\n").split(",")
        m = _HEADER.match(first)
        if not m:
            raise SchemaMismatch(f"{path}: missing or malformed log header")
        if int(m.group(1)) != LOG_SCHEMA:
            raise SchemaMismatch(f"{path}: log schema {m.group(1)}, expected {LOG_SCHEMA}")
        if names != list(COLUMNS):
            raise SchemaMismatch(f"{path}: expected {len(COLUMNS)} known columns, "
                                 f"found {len(names)}")
        lines = fh.read().splitlines()
    rows = []
    for i, line in enumerate(lines, start=3):
        if not line:
            continue
        vals = line.split(",")
        if len(vals) != len(COLUMNS):
            raise SchemaMismatch(f"{path}:{i}: {len(vals)} values, expected {len(COLUMNS)}")
        rows.append([float(v) for v in vals])
    data = np.array(rows, dtype=float).reshape(-1, len(COLUMNS))
    return SimLog(data, seed=int(m.group(2)), meta={"dt": float(m.group(3))})


def write_json(obj, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return path
