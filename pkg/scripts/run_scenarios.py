"""Run every scenario under ``scenarios/`` and print a pass/fail summary.

Usage::

    python3 scripts/run_scenarios.py [--out DIR] [--workers N] [--include-unattainable]
"""

import argparse
import sys
from pathlib import Path

from igac.cli import main

ROOT = Path(__file__).resolve().parent.parent / "scenarios"


def cli(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="igac_out")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--include-unattainable", action="store_true", help="also run scenarios expected to fail")
    args = ap.parse_args(argv)
    status = main(["run", str(ROOT), "--out", args.out, "--workers", str(args.workers)])
    if args.include_unattainable:
        print("\nscenarios expected to fail:")
        main(["run", str(ROOT / "unattainable"), "--out", args.out])
    return status


if __name__ == "__main__":
    sys.exit(cli())
