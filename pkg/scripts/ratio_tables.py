"""Tabulate every closed-form correlation ratio on a common grid.

Writes one CSV with a column per family; points outside a family's domain
are left empty.

Usage::

    python3 scripts/ratio_tables.py [--grid=-0.99:0.99:0.01] [--out ratios.csv]
"""

import argparse

from igac.catalog import RATIO_FAMILIES
from igac.errors import ParamOutOfRange
from igac.scenario import fmt_number, parse_grid


def table(grid):
    rows = []
    for r in grid:
        row = [fmt_number(r)]
        for fn in RATIO_FAMILIES.values():
            try:
                row.append(fmt_number(fn(float(r))))
            except ParamOutOfRange:
                row.append("")
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description="closed-form ratio table")
    ap.add_argument("--grid", default="-0.99:0.99:0.01")
    ap.add_argument("--out", default="ratios.csv")
    args = ap.parse_args(argv)
    rows = table(parse_grid(args.grid))
    with open(args.out, "w", newline="\n") as fh:
        fh.write(",".join(["rho", *RATIO_FAMILIES]) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
