"""Command-line entry point.

Exit codes: 0 success, 1 domain or configuration error, 2 usage error.
The output root defaults to ``$AEROBAT_OUT`` (or ``./aerobat-out``) when
``--out`` is not given.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import default_config_path, load_config, with_overrides
from .errors import AerobatError
from .logio import read_log, write_json, write_log
from .plotting import FAMILIES, plot_log
from .runner import SWEEP_COLUMNS, config_metrics, log_metrics, parse_grid, run_config, sweep

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class _Usage(Exception):
    pass


def _out_dir(arg) -> Path:
    out = Path(arg or os.environ.get("AEROBAT_OUT", "aerobat-out"))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _Usage(f"cannot create output directory {out}: {exc.strerror}") from exc
    if not os.access(out, os.W_OK):
        raise _Usage(f"output directory {out} is not writable")
    return out


def _load(args):
    cfg = load_config(args.config or default_config_path())
    if getattr(args, "seed", None) is not None:
        cfg = with_overrides(cfg, {"scenario.seed": args.seed})
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args.out)
    log = run_config(cfg)
    log_path = write_log(log, out / "log.csv")
    metrics = config_metrics(log, cfg)
    write_json(metrics, out / "metrics.json")
    r2 = metrics["r2"]
    print(f"wrote {log_path} and {out / 'metrics.json'}")
    print("R^2  " + "  ".join(f"F{ax}={r2[ax]:.4f}" if r2[ax] is not None else f"F{ax}=n/a"
                            for ax in "xyz"))
    return EXIT_OK


def _window(text):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise _Usage(f"--window expects t_on,t_off, got {text!r}") from exc
    return a, b


def cmd_metrics(args) -> int:
    log = read_log(args.log)
    window = _window(args.window) if args.window else None
    m = log_metrics(log, window, args.gain, truth=args.truth, estimate=args.estimate)
    text = json.dumps(m, indent=2, sort_keys=True)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_json(m, out)
    print(text)
    return EXIT_OK


def cmd_plot(args) -> int:
    channels = [c.strip() for c in (args.channels or "").split(",") if c.strip()]
    if not channels:
        return EXIT_OK
    log = read_log(args.log)
    out = _out_dir(args.out)
    for p in plot_log(log, channels, out, fmt=args.format):
        print(p)
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        grid = parse_grid(args.grid)
    except ValueError as exc:
        raise _Usage(str(exc)) from exc
    cfg = _load(args)
    out = _out_dir(args.out)
    rows = sweep(cfg.raw, grid, jobs=args.jobs)
    keys = list(grid)
    path = out / "sweep.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys + list(SWEEP_COLUMNS))
        for row in rows:
            w.writerow([row.get(k) for k in keys]
                       + ["" if row.get(c) is None else row.get(c) for c in SWEEP_COLUMNS])
    failed = sum(1 for r in rows if r.get("error"))
    print(f"wrote {path} ({len(rows)} points, {failed} failed)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aerobat", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one scenario and write log.csv + metrics.json")
    s.add_argument("--config", help="TOML config (default: shipped config)")
    s.add_argument("--out", help="output directory")
    s.add_argument("--seed", type=int, help="override scenario.seed")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("metrics", help="R^2, RMSE and step response of a log")
    m.add_argument("log")
    m.add_argument("--truth", default="F", help="truth column block (default F)")
    m.add_argument("--estimate", default="Fhat", help="estimate column block (default Fhat)")
    m.add_argument("--window", help="step window t_on,t_off")
    m.add_argument("--gain", type=float, help="observer gain for the ripple-corrected rise time")
    m.add_argument("--out", help="also write the report to this JSON file")
    m.set_defaults(func=cmd_metrics)

    p = sub.add_parser("plot", help="static figures from a log")
    p.add_argument("log")
    p.add_argument("--channels", default="forces",
                   help=f"comma-separated families: {', '.join(FAMILIES)}")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", default="svg", choices=("svg", "pdf"))
    p.set_defaults(func=cmd_plot)

    w = sub.add_parser("sweep", help="metrics table over a parameter grid")
    w.add_argument("--config", help="TOML config (default: shipped config)")
    w.add_argument("--grid", action="append", default=[],
                   help="key=v1,v2,... (repeatable), e.g. observer.gain=5,20,80")
    w.add_argument("--out", help="output directory")
    w.add_argument("--seed", type=int, help="override scenario.seed")
    w.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    w.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except _Usage as exc:
        print(f"aerobat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AerobatError as exc:
        print(f"aerobat: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
