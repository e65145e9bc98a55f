"""Regenerate the shipped reference log from the default configuration.

The log is recorded every 20 steps (500 Hz) to keep the file small.
"""

from importlib import resources

from aerobat.config import default_config, with_overrides
from aerobat.logio import write_log
from aerobat.runner import run_config


def main():
    cfg = with_overrides(default_config(), {"sim.decimation": 20})
    path = resources.files("aerobat") / "data" / "reference_log.csv"
    write_log(run_config(cfg), path)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
