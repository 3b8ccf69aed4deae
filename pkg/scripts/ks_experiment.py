"""Compare the entropy growth rate with the geodesic contraction rate.

For one Gaussian replica launched from the top of a geodesic semicircle the
width decays like ``exp(-rate * tau)``. The tail slope of the entropy
``S = log C`` should approach that rate. The start width is huge so the
exponential decay stays clear of the domain margin; the Gaussian metric is
invariant under ``(mu, sigma) -> (c mu, c sigma)``, so this changes nothing
else.

Usage::

    python3 scripts/ks_experiment.py [--rates 0.5,1,2] [--horizon 190]
"""

import argparse
import math

import numpy as np

from igac.catalog import build
from igac.complexity import igc, ks_analogue
from igac.geodesic import integrate_ivp


def experiment(rate: float, horizon: float, sigma0: float = 1e80, samples: int = 600):
    model = build("uncorrelated_gaussian", l=1)
    t_end = horizon / rate
    path = integrate_ivp(model, [0.0, sigma0], [math.sqrt(2) * rate * sigma0, 0.0], t_end)
    trace = igc(model, path, np.linspace(0.5 / rate, t_end, samples))
    ks = ks_analogue(trace, 0.5)
    tail = trace.tau[trace.tau >= trace.tau[len(trace) // 2]]
    contraction = -np.polyfit(tail, np.log(path.theta_at(tail)[:, 1]), 1)[0]
    return ks, contraction, path.truncated


def main(argv=None):
    ap = argparse.ArgumentParser(description="entropy growth rate vs contraction rate")
    ap.add_argument("--rates", default="0.5,1,2")
    ap.add_argument("--horizon", type=float, default=190.0, help="rate * final tau")
    args = ap.parse_args(argv)
    print(f"{'rate':>6} {'ks':>12} {'contraction':>12} {'rel_err':>10}")
    for rate in (float(x) for x in args.rates.split(",")):
        ks, lam, trunc = experiment(rate, args.horizon)
        flag = " (truncated)" if trunc else ""
        print(f"{rate:>6g} {ks:>12.6f} {lam:>12.6f} {abs(ks / lam - 1):>10.2e}{flag}")


if __name__ == "__main__":
    main()
