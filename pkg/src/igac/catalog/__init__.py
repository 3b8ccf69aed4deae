"""Catalog of statistical manifolds and closed-form complexity formulas."""

from .formulas import (
    RATIO_FAMILIES,
    ScatteringParams,
    embedded_delta,
    embedded_ige_closed,
    f_micro,
    purity,
    purity_from_complexity,
    ratio_3v2,
    ratio_bivariate_strong,
    ratio_trivariate_mildly_weak,
    ratio_trivariate_strong,
    ratio_trivariate_weak,
    rho_from_complexity,
    rho_qm,
    scattering_igc_closed,
    scattering_igc_ratio,
    scattering_ige_closed,
    scattering_ige_shift,
)
from .models import CATALOG, CoordinateFactor, ParamSpec, build, linear_constraint, list_models, macro_correlation

__all__ = [
    "CATALOG",
    "CoordinateFactor",
    "ParamSpec",
    "RATIO_FAMILIES",
    "ScatteringParams",
    "build",
    "embedded_delta",
    "embedded_ige_closed",
    "f_micro",
    "linear_constraint",
    "list_models",
    "macro_correlation",
    "purity",
    "purity_from_complexity",
    "ratio_3v2",
    "ratio_bivariate_strong",
    "ratio_trivariate_mildly_weak",
    "ratio_trivariate_strong",
    "ratio_trivariate_weak",
    "rho_from_complexity",
    "rho_qm",
    "scattering_igc_closed",
    "scattering_igc_ratio",
    "scattering_ige_closed",
    "scattering_ige_shift",
]
