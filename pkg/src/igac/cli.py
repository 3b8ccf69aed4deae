"""Command-line entry point ``igac``.

Commands::

    igac run <scenario.toml | dir> [--out DIR] [--workers N]
    igac catalog list
    igac metric --model NAME [--params k=v,...] --theta v1,v2,... [--numeric]
    igac ratios --family NAME --rho-grid a:b:step [--out FILE]

``run`` exits with status 1 when any assertion fails and 2 when a scenario
cannot be parsed or executed.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .catalog import CATALOG, RATIO_FAMILIES, build, list_models
from .errors import IgacError, ParamOutOfRange
from .manifold import metric_analytic, metric_numeric
from .scenario import fmt_number, load_scenario, parse_grid, run, write_csv


def _run_one(path: str, out: str | None):
    """Worker body; returns plain data so it pickles across processes."""
    try:
        sc = load_scenario(path)
        rep = run(sc, out)
    except IgacError as exc:
        return path, None, str(exc)
    return path, rep.to_dict(), None


def _scenario_files(target: Path) -> list[Path]:
    if target.is_dir():
        files = sorted(target.glob("*.toml"))
        if not files:
            raise FileNotFoundError(f"no *.toml scenarios in {target}")
        return files
    if not target.exists():
        raise FileNotFoundError(f"{target} does not exist")
    return [target]


def cmd_run(args) -> int:
    try:
        files = _scenario_files(Path(args.target))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    jobs = [(str(f), args.out) for f in files]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_one, *zip(*jobs)))
    else:
        results = [_run_one(*j) for j in jobs]

    status = 0
    for path, rep, err in results:
        if err is not None:
            print(f"ERROR {path}: {err}")
            status = max(status, 2)
            continue
        tag = "PASS" if rep["passed"] else "FAIL"
        print(f"{tag} {rep['scenario']} ({rep['kind']}, {len(rep['assertions'])} assertions, {rep['duration_s']:.2f} s)")
        if rep["fit"]:
            f = rep["fit"]
            coef = " ".join(f"{k}={v:.6g}" for k, v in f["coefficients"].items())
            print(f"  regime={f['regime']} {coef} r2={f['r2']:.6f}")
        for a in rep["assertions"]:
            print(f"  {'ok  ' if a['passed'] else 'FAIL'} {a['name']}: measured={a['measured']} bound={a['bound']}")
        if not rep["passed"]:
            status = max(status, 1)
    return status


def cmd_catalog(args) -> int:
    rows = list_models()
    print(f"{'name':<24} {'dim':>3}  {'parameters':<44} source")
    for r in rows:
        params = ", ".join(f"{n} in {b}" for n, b in r["parameters"]) or "-"
        print(f"{r['name']:<24} {r['dimension']:>3}  {params:<44} {r['source']}")
    return 0


def parse_params(text: str | None) -> dict:
    """``"rho=0.5,Sigma=2"`` to a dict; list values use ``;`` (``omega=1;2``)."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ValueError(f"parameter {item!r} is not key=value")
        k, v = (s.strip() for s in item.split("=", 1))
        out[k] = [float(x) for x in v.split(";")] if ";" in v else float(v)
    return out


def cmd_metric(args) -> int:
    try:
        params = parse_params(args.params)
        entry = CATALOG.get(args.model)
        if entry is not None:
            for p in entry.params:
                if p.kind == "int" and p.name in params:
                    params[p.name] = int(params[p.name])
        model = build(args.model, **params)
        theta = np.array([float(x) for x in args.theta.split(",")])
        g = metric_analytic(model, theta).components
    except (KeyError, ValueError, IgacError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"metric of {model.name} at theta=({', '.join(repr(float(x)) for x in theta)}):")
    for row in g:
        print("  " + "  ".join(f"{x: .17g}" for x in row))
    if args.numeric:
        if model.density is None:
            print("no density family; numeric metric unavailable", file=sys.stderr)
            return 2
        gn = metric_numeric(model.density, theta, domain=model.domain).components
        err = float(np.max(np.abs(gn - g)) / np.max(np.abs(g)))
        print(f"numeric quadrature relative error: {err:.3e}")
    return 0


def cmd_ratios(args) -> int:
    fn = RATIO_FAMILIES.get(args.family)
    if fn is None:
        print(f"error: unknown family {args.family!r}; known: {', '.join(RATIO_FAMILIES)}", file=sys.stderr)
        return 2
    try:
        grid = parse_grid(args.rho_grid)
        vals = [fn(float(r)) for r in grid]
    except (ValueError, TypeError, ParamOutOfRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        write_csv(("rho", "value"), zip(grid, vals), args.out)
    else:
        sys.stdout.write("rho,value\n")
        for r, v in zip(grid, vals):
            sys.stdout.write(f"{fmt_number(r)},{fmt_number(v)}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="igac", description="Information-geometric complexity experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file or every *.toml in a directory")
    p.add_argument("target")
    p.add_argument("--out", default=None, help="output directory (default: scenario 'output', then $IGAC_OUT, then ./igac_out)")
    p.add_argument("--workers", type=int, default=1, help="parallel scenarios in batch mode")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("catalog", help="inspect the model catalog")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("metric", help="print the metric of a catalog model at a point")
    p.add_argument("--model", required=True)
    p.add_argument("--params", default="", help="k=v,... (lists as omega=1;2)")
    p.add_argument("--theta", required=True, help="comma-separated coordinates")
    p.add_argument("--numeric", action="store_true", help="also compare against quadrature")
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("ratios", help="tabulate a closed-form ratio family")
    p.add_argument("--family", required=True, choices=sorted(RATIO_FAMILIES))
    p.add_argument("--rho-grid", required=True, help="a:b:step")
    p.add_argument("--out", default=None, help="CSV file (default: stdout)")
    p.set_defaults(func=cmd_ratios)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
