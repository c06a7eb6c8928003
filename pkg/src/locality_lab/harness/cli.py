"""Command line: ``locality-lab run|suite|list-protocols``."""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import EXIT_USAGE, LocalityLabError
from .config import PROTOCOLS, load_config
from .runner import run, suite


def build_parser():
    p = argparse.ArgumentParser(prog="locality-lab",
                                description="Run locality and gap experiments from INI configs.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("config")
    r.add_argument("--output-dir", help="override the config's output directory")
    s = sub.add_parser("suite", help="run every config listed in a manifest")
    s.add_argument("manifest")
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    sub.add_parser("list-protocols", help="print the protocol names")
    return p


def _print_record(rec):
    for a in rec.assertions:
        tol = a["tolerance"]
        print(f"{'PASS' if a['passed'] else 'FAIL'} {a['name']}: {a['measured']!r} {a['op']} {tol!r}")
    if rec.error:
        print(f"ERROR {rec.error['type']}: {rec.error['message']}")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "list-protocols":
            print("\n".join(PROTOCOLS))
            return 0
        if args.command == "run":
            cfg = load_config(args.config)
            if args.output_dir:
                cfg.output_dir = args.output_dir
            rec = run(cfg)
            _print_record(rec)
            return rec.exit_code
        summary = suite(args.manifest, jobs=max(1, args.jobs))
        print(summary.table())
        return summary.exit_code
    except LocalityLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
