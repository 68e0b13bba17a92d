"""Command line entry point: ``fkperc <experiment> [--config PATH] [--set key=value ...]``."""

from __future__ import annotations

import argparse
import json
import sys

from .config import EXPERIMENTS, ConfigError, build_config, load_config
from .runner import run


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fkperc", description="Random-cluster experiments on square-lattice boxes.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", metavar="PATH", help="flat key = value configuration file")
    ap.add_argument("--seed", type=int, help="64-bit seed, overrides the config")
    ap.add_argument("--out", metavar="DIR", help="output directory, overrides the config")
    ap.add_argument("--threads", type=int, default=1, metavar="K")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="extra configuration entry; may be repeated")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        raw = load_config(args.config) if args.config else {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = (s.strip() for s in item.split("=", 1))
            raw[k] = v
        if "experiment" in raw and raw["experiment"] != args.experiment:
            raise ConfigError(f"config names experiment {raw['experiment']!r}, command is {args.experiment!r}",
                              "experiment")
        raw["experiment"] = args.experiment
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.out is not None:
            raw["out"] = args.out
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1", "threads")
        cfg = build_config(raw)
        run(cfg, args.threads, given=raw.keys())
    except ConfigError as exc:
        json.dump(exc.record(), sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 2
    except OSError as exc:
        json.dump({"error": "io", "key": None, "message": str(exc)}, sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
