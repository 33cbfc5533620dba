"""Command line entry point: ``pinpat <subcommand> [options]``.

Exit codes: 0 when every check passes (warnings included), 1 when any check
fails, 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from pinpat.config import load_config
from pinpat.errors import ConfigError, PinpatError
from pinpat.experiments import COMMANDS


def _json_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pinpat", description="Pinned point pattern laboratory.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--seed", type=int)
        s.add_argument("--threads", type=int, help="worker threads (fallback: PINPAT_THREADS)")
        s.add_argument("--out", help="output directory")
        s.add_argument("--k", type=int)
        s.add_argument("--d", type=int)
        s.add_argument("--epsilon0", type=float)
        s.add_argument("--C-d", dest="C_d", type=float)
        s.add_argument("--eta", type=float)
        s.add_argument("--prime", type=int, help="override n+1")
        s.add_argument("--h", type=float, help="grid pitch")
        s.add_argument("--tol", type=float)
        s.add_argument("--pins", type=int)
        s.add_argument("--source")
        s.add_argument("--point-file", dest="point_file")
        s.add_argument("--radius", type=float)
        s.add_argument("--r-start", type=float)
        s.add_argument("--r-stop", type=float)
        s.add_argument("--r-count", type=int)
        s.add_argument("--r-scale", choices=("absolute", "cone_R"))
        s.add_argument("--patterns", type=int, nargs="+")
        s.add_argument("--N-max", dest="N_max", type=int)
        s.add_argument("--mc-samples", dest="mc_samples", type=int)
        s.add_argument(
            "--set", action="append", default=[], metavar="FIELD=VALUE",
            help="override any config field (VALUE parsed as JSON when possible)",
        )
    return p


_DIRECT = ("seed", "threads", "out", "k", "d", "epsilon0", "C_d", "eta", "prime", "h", "tol", "pins",
           "source", "point_file", "radius", "patterns", "N_max", "mc_samples")


def overrides_from_args(args: argparse.Namespace) -> dict:
    ov = {name: getattr(args, name) for name in _DIRECT}
    grid = {}
    for flag, key in (("r_start", "start"), ("r_stop", "stop"), ("r_count", "count"), ("r_scale", "scale")):
        val = getattr(args, flag)
        if val is not None:
            grid[key] = val
    if grid:
        ov["r_grid"] = grid
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects FIELD=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        ov[key.strip()] = _json_value(val)
    return ov


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, overrides_from_args(args))
        report = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PinpatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for v in report.verdicts:
        if v.status != "PASS":
            print(f"{v.status} {v.check}: {v.detail}")
    print(f"{report.experiment}: {report.status} ({sum(v.status == 'PASS' for v in report.verdicts)}"
          f"/{len(report.verdicts)} checks passed); outputs in {cfg.out}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
