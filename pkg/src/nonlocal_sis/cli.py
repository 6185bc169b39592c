"""Command-line entry point: run a config-driven scenario and write reports.

Exit status is 0 only when every scenario assertion passed; module errors
are embedded in report.json and flip the status.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError
from .experiments import load_config, make_config, run_scenario, write_report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nonlocal-sis",
        description="Run a scenario from a key=value config file.")
    parser.add_argument("--config", required=True, help="path to the config file")
    parser.add_argument("--out-dir", default=None,
                        help="output directory (overrides output.dir)")
    parser.add_argument("--scenario", default=None,
                        help="override the scenario named in the config")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the seed named in the config")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if args.scenario is not None or args.seed is not None:
            entries = dict(config.entries)
            if args.scenario is not None:
                entries["scenario"] = args.scenario
            if args.seed is not None:
                entries["seed"] = args.seed
            config = make_config(entries, config.base_dir)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out_dir or config.output_dir or "."
    report = run_scenario(config)
    try:
        paths = write_report(report, out_dir)
    except OSError as exc:
        print(f"failed to write report under {out_dir}: {exc}", file=sys.stderr)
        return 2

    for path in paths:
        print(path)
    if not report.ok:
        for err in report.errors:
            print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
