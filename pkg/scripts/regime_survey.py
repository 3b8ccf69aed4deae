"""Classify entropy growth along one geodesic of several catalog models.

Usage::

    python3 scripts/regime_survey.py [--tau-max 20]
"""

import argparse
import math

import numpy as np

from igac.catalog import build
from igac.complexity import classify_growth, igc
from igac.errors import IgacError
from igac.geodesic import integrate_ivp

R2 = math.sqrt(2.0)

CASES = [
    ("uncorrelated_gaussian", {"l": 1}, [0.0, 1.0], [R2, 0.0]),
    ("uncorrelated_gaussian", {"l": 2}, [0.0, 1.0, 0.0, 1.0], [R2, 0.0, R2, 0.0]),
    ("bivariate_corr", {"rho": 0.5}, [0.0, 1.0], [1.0, 0.0]),
    ("spin_integrable", {}, [1.0, 1.0], [1.0, 2.0]),
    ("spin_chaotic", {}, [1.0, 0.0, 1.0], [1.0, R2, 0.0]),
    ("iho", {"omega": [1.0]}, [0.0], [1.0]),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description="entropy growth regimes across models")
    ap.add_argument("--tau-max", type=float, default=20.0)
    args = ap.parse_args(argv)
    tau = np.linspace(0.5, args.tau_max, 400)
    print(f"{'model':<34} {'regime':<12} {'r2':>9}  coefficients")
    for name, params, th0, v0 in CASES:
        label = name + "".join(f" {k}={v}" for k, v in params.items())
        try:
            model = build(name, **params)
            path = integrate_ivp(model, th0, v0, args.tau_max)
            fit = classify_growth(igc(model, path, tau))
        except IgacError as exc:
            print(f"{label:<34} error: {exc}")
            continue
        coef = " ".join(f"{k}={v:.4g}" for k, v in fit.coefficients.items())
        print(f"{label:<34} {fit.regime:<12} {fit.r2:>9.6f}  {coef}")


if __name__ == "__main__":
    main()
