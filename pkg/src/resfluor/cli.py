"""Command line entry point: ``sim <scenario> --config FILE [--set k=v]... --out DIR``.

Exit codes: 0 on success, 2 on a configuration error, 3 on a numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, NumericalError
from .scenarios.config import SCENARIOS, load_config
from .scenarios.runner import run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sim", description="Resonance-fluorescence scenarios of a cavity-coupled atom.")
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--config", metavar="FILE", help="key = value configuration file")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides",
                   help="override one configuration key (repeatable)")
    p.add_argument("--out", metavar="DIR", required=True, help="output directory")
    p.add_argument("--port-drive", action="store_true", help="treat Omega_c as the drive axis")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.port_drive:
        overrides.append("port_drive = true")
    try:
        cfg = load_config(args.config, overrides, scenario=args.scenario, out=args.out)
        result = run_scenario(cfg)
    except ConfigError as exc:
        print(f"sim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"sim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in result.files:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
