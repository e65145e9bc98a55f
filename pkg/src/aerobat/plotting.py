"""Static figures from a finished log (no interactive use)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import UnknownChannel  # noqa: E402
from .sim import SimLog  # noqa: E402

FAMILIES = ("forces", "trajectory", "topview", "joints", "euler", "velocity")


def _forces(log: SimLog, fig):
    axes = fig.subplots(3, 1, sharex=True)
    for ax, c in zip(axes, "xyz"):
        ax.plot(log.t, log[f"F_{c}"], lw=0.8, label="applied")
        ax.plot(log.t, log[f"Fhat_{c}"], lw=1.2, label="estimated")
        ax.set_ylabel(f"F{c} [N]")
    axes[0].legend(loc="upper right")
    axes[-1].set_xlabel("t [s]")


def _trajectory(log: SimLog, fig):
    ax = fig.add_subplot(projection="3d")
    ax.plot(log["x"], log["y"], log["z"])
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_zlabel("z [m]")


def _topview(log: SimLog, fig):
    ax = fig.subplots()
    ax.plot(log["x"], log["y"])
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")


def _series(names, labels):
    def draw(log: SimLog, fig):
        axes = fig.subplots(len(names), 1, sharex=True, squeeze=False)[:, 0]
        for ax, n, lab in zip(axes, names, labels):
            ax.plot(log.t, log[n], lw=0.8)
            ax.set_ylabel(lab)
        axes[-1].set_xlabel("t [s]")
    return draw


_DRAW = {
    "forces": _forces,
    "trajectory": _trajectory,
    "topview": _topview,
    "joints": _series(["q_s", "q_e"], ["shoulder [rad]", "elbow [rad]"]),
    "euler": _series(["roll", "pitch", "yaw"], ["roll [rad]", "pitch [rad]", "yaw [rad]"]),
    "velocity": _series(["dq_x", "dq_y", "dq_z"], ["vx [m/s]", "vy [m/s]", "vz [m/s]"]),
}


def _check(family):
    if family not in _DRAW:
        raise UnknownChannel(f"unknown plot channel {family!r}; choose from {', '.join(FAMILIES)}")


def draw_family(log: SimLog, family: str, fig) -> None:
    """Draw one figure family into an existing matplotlib figure."""
    _check(family)
    _DRAW[family](log, fig)


def plot_log(log: SimLog, channels, out_dir, fmt: str = "svg") -> list[Path]:
    """Write one figure per requested family and return the file paths.

    Raises:
        UnknownChannel: for a family not in :data:`FAMILIES`.
    """
    channels = [c for c in channels if c]
    for c in channels:
        _check(c)
    out_dir = Path(out_dir)
    paths = []
    for c in channels:
        fig = plt.figure(figsize=(7, 5))
        draw_family(log, c, fig)
        fig.tight_layout()
        path = out_dir / f"{c}.{fmt}"
        # fixed metadata keeps repeated renders identical
        fig.savefig(path, format=fmt, metadata={"Date": None} if fmt == "svg" else None)
        plt.close(fig)
        paths.append(path)
    return paths
