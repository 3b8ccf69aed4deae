"""Closed-form complexity ratios, asymptotics, and scattering relations.

All functions validate their arguments and raise
:class:`~igac.errors.ParamOutOfRange` naming the violated bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from ..errors import ParamOutOfRange, RegimeWarning

SQRT2_2 = math.sqrt(2.0) / 2.0
REGIME_LIMIT = 0.1


def _open(name, v, lo, hi, label=None):
    v = float(v)
    if not (lo < v < hi):
        raise ParamOutOfRange(name, v, label or f"({lo:g}, {hi:g})")
    return v


def _half_open(name, v, lo, hi, label=None):
    v = float(v)
    if not (lo <= v < hi):
        raise ParamOutOfRange(name, v, label or f"[{lo:g}, {hi:g})")
    return v


def _positive(name, v):
    v = float(v)
    if not (v > 0.0 and math.isfinite(v)):
        raise ParamOutOfRange(name, v, "(0, inf)")
    return v


# ---------------------------------------------------------------------------
# correlated Gaussian ratios (correlated IGC over uncorrelated IGC)


def ratio_bivariate_strong(rho: float) -> float:
    """``sqrt(1 + rho)`` on ``(-1, 1)``."""
    rho = _open("rho", rho, -1.0, 1.0)
    return math.sqrt(1.0 + rho)


def ratio_trivariate_weak(rho: float) -> float:
    """``sqrt(3) * sqrt((1 + rho) / (3 + rho))`` on ``(-1, 1)``."""
    rho = _open("rho", rho, -1.0, 1.0)
    return math.sqrt(3.0 * (1.0 + rho) / (3.0 + rho))


def ratio_trivariate_mildly_weak(rho: float) -> float:
    """``sqrt(3) * sqrt((1 - 2 rho^2) / (3 - 4 rho))`` on ``(-sqrt(2)/2, sqrt(2)/2)``.

    Peaks at ``rho = 1/2`` and vanishes at the upper end of the domain.
    """
    rho = _open("rho", rho, -SQRT2_2, SQRT2_2, "(-sqrt(2)/2, sqrt(2)/2)")
    return math.sqrt(3.0) * math.sqrt((1.0 - 2.0 * rho * rho) / (3.0 - 4.0 * rho))


def ratio_trivariate_strong(rho: float) -> float:
    """``sqrt(1 + 2 rho)`` on ``(-1/2, 1)``."""
    rho = _open("rho", rho, -0.5, 1.0, "(-1/2, 1)")
    return math.sqrt(1.0 + 2.0 * rho)


def ratio_3v2(rho: float) -> float:
    """Fully correlated trivariate ratio over the bivariate one, ``sqrt((1 + 2 rho)/(1 + rho))``."""
    rho = _open("rho", rho, -0.5, 1.0, "(-1/2, 1)")
    return math.sqrt((1.0 + 2.0 * rho) / (1.0 + rho))


def f_micro(rho: float) -> float:
    """Asymptotic IGC compression factor from microscopic correlations.

    Equals 1 at ``rho = 0`` and decreases on ``[0, 1)``.
    """
    rho = _half_open("rho", rho, 0.0, 1.0)
    one_m = 1.0 - rho * rho
    amp = math.sqrt(4.0 * (4.0 - rho * rho) / (2.0 * one_m) ** 2)
    return 2.0**-2.5 * amp * ((2.0 + rho) / (4.0 * one_m)) ** -1.5


RATIO_FAMILIES = {
    "bivariate_strong": ratio_bivariate_strong,
    "trivariate_weak": ratio_trivariate_weak,
    "trivariate_mildly_weak": ratio_trivariate_mildly_weak,
    "trivariate_strong": ratio_trivariate_strong,
    "ratio_3v2": ratio_3v2,
    "f_micro": f_micro,
}


# ---------------------------------------------------------------------------
# embedded (macrocorrelated) model


def embedded_delta(rho: float) -> float:
    """``1 + 4 rho^2``."""
    return 1.0 + 4.0 * float(rho) ** 2


def embedded_alpha(rho: float) -> tuple[float, float]:
    """``(alpha_minus, alpha_plus) = (3 -/+ sqrt(Delta)) / 2``."""
    sd = math.sqrt(embedded_delta(rho))
    return 0.5 * (3.0 - sd), 0.5 * (3.0 + sd)


def embedded_sigma(rho: float, lam: float, xi: float) -> float:
    """Positive amplitude entering the log of the second IGE coefficient."""
    rho = _open("rho", rho, 0.0, 1.0)
    lam = _positive("lambda", lam)
    xi = _positive("xi", xi)
    sd = math.sqrt(embedded_delta(rho))
    am, ap = embedded_alpha(rho)
    return -(xi / (4.0 * lam)) * (1.0 + sd) / (1.0 - sd) * math.sqrt(2.0 * am / ap)


def embedded_lambda1(rho: float) -> float:
    rho = _open("rho", rho, 0.0, 1.0)
    return 2.0 * rho * math.sqrt(2.0 - rho * rho) / (1.0 + math.sqrt(embedded_delta(rho)))


def embedded_lambda2(rho: float, lam: float, xi: float) -> float:
    rho = _open("rho", rho, 0.0, 1.0)
    lam = _positive("lambda", lam)
    d = embedded_delta(rho)
    return math.sqrt(d * (2.0 - rho * rho)) * math.log(embedded_sigma(rho, lam, xi)) / (rho * lam)


def embedded_ige_closed(tau: float, l: int, lam: float, xi: float, rho: float) -> float:
    """Asymptotic IGE ``l * log(Lambda1 + Lambda2 / tau)`` of the embedded model.

    Raises
    ------
    ParamOutOfRange
        If ``rho`` is outside ``(0, 1)``, a scale is non-positive, or the
        log argument is non-positive at ``tau``.
    """
    tau = _positive("tau", tau)
    if int(l) != l or l < 1:
        raise ParamOutOfRange("l", l, "positive integer")
    arg = embedded_lambda1(rho) + embedded_lambda2(rho, lam, xi) / tau
    if arg <= 0.0:
        raise ParamOutOfRange("tau", tau, "large enough for a positive log argument")
    return int(l) * math.log(arg)


# ---------------------------------------------------------------------------
# scattering


def scattering_igc_ratio(rho: float) -> float:
    """``sqrt((1 - rho) / (1 + rho))`` on ``[0, 1)``."""
    rho = _half_open("rho", rho, 0.0, 1.0)
    return math.sqrt((1.0 - rho) / (1.0 + rho))


def scattering_ige_shift(rho: float) -> float:
    """``log((1 - rho)/(1 + rho)) / 2`` on ``[0, 1)``."""
    rho = _half_open("rho", rho, 0.0, 1.0)
    return 0.5 * math.log((1.0 - rho) / (1.0 + rho))


def _scattering_bracket(x: float) -> float:
    """``-3/4 + sinh(x)/(4x) + tanh(x/2)/x`` with a series for small ``x``."""
    if x < 0.2:
        # Taylor expansion; the constant and x^2 terms cancel exactly
        x2 = x * x
        c = (1 / 160, -1 / 2688, 1 / 23040, -23 / 5322240, 331 / 754790400, -227 / 5109350400)
        acc = 0.0
        for coef in reversed(c):
            acc = acc * x2 + coef
        return x2 * x2 * acc
    return -0.75 + math.sinh(x) / (4.0 * x) + math.tanh(0.5 * x) / x


def scattering_igc_closed(tau: float, rho: float, lam: float) -> float:
    """Exact IGC of the correlated wave-packet manifold.

    Tends to 0 as ``tau -> 0+``.
    """
    tau = _positive("tau", tau)
    lam = _positive("lambda", lam)
    ratio = scattering_igc_ratio(rho)
    return 8.0 * ratio * _scattering_bracket(lam * tau)


def scattering_ige_closed(tau: float, rho: float, lam: float) -> float:
    """Asymptotic IGE ``lam tau - log(lam tau) + log((1-rho)/(1+rho))/2``."""
    tau = _positive("tau", tau)
    lam = _positive("lambda", lam)
    shift = scattering_ige_shift(rho)
    x = lam * tau
    return x - math.log(x) + shift


@dataclass(frozen=True)
class ScatteringParams:
    """Wave-packet scattering setup.

    Attributes
    ----------
    k0 : float
        Mean wavenumber.
    sigma_k0 : float
        Momentum dispersion (zero allowed).
    R0 : float
        Initial separation.
    L : float
        Potential range.
    a_s : float
        s-wave scattering length.
    """

    k0: float = 1.0
    sigma_k0: float = 0.0
    R0: float = 1.0
    L: float = 1.0
    a_s: float = 0.0

    def __post_init__(self):
        for name in ("k0", "R0", "L"):
            _positive(name, getattr(self, name))
        for name in ("sigma_k0", "a_s"):
            v = float(getattr(self, name))
            if not (v >= 0.0 and math.isfinite(v)):
                raise ParamOutOfRange(name, v, "[0, inf)")


def _regime_check(p: ScatteringParams, rho: float, what: str):
    if p.k0 * p.L > REGIME_LIMIT or rho > REGIME_LIMIT:
        warnings.warn(
            f"{what}: perturbative regime requires k0*L and rho small "
            f"(got k0*L={p.k0 * p.L:.3g}, rho={rho:.3g})",
            RegimeWarning,
            stacklevel=3,
        )


def purity(rho: float, p: ScatteringParams) -> float:
    """Post-collision purity ``1 - 4 rho k0^2 (2 k0^2 + sigma^2) R0 L^3 / 3``.

    Emits :class:`~igac.errors.RegimeWarning` outside the small-parameter regime.
    """
    rho = _half_open("rho", rho, 0.0, 1.0)
    _regime_check(p, rho, "purity")
    return 1.0 - 4.0 * rho * p.k0**2 * (2.0 * p.k0**2 + p.sigma_k0**2) * p.R0 * p.L**3 / 3.0


def rho_qm(p: ScatteringParams) -> float:
    """Entanglement strength ``sqrt(8 (2 k0^2 + sigma^2) R0 a_s)``; must lie in ``[0, 1)``."""
    val = math.sqrt(8.0 * (2.0 * p.k0**2 + p.sigma_k0**2) * p.R0 * p.a_s)
    if not val < 1.0:
        raise ParamOutOfRange("rho_qm", val, "[0, 1)")
    return val


def rho_from_complexity(c_uncorr: float, c_corr: float) -> float:
    """Correlation from a pair of IGCs, ``(Cu^2 - Cc^2) / (Cu^2 + Cc^2)``."""
    cu = float(c_uncorr)
    cc = float(c_corr)
    if cu < 0 or cc < 0 or cu + cc == 0.0:
        raise ParamOutOfRange("complexity", (cu, cc), "non-negative, not both zero")
    return (cu * cu - cc * cc) / (cu * cu + cc * cc)


def purity_eta(p: ScatteringParams) -> float:
    """Coefficient ``(8/3) k0^2 (2 k0^2 + sigma^2) R0 L^3`` of the complexity-purity relation."""
    return 8.0 / 3.0 * p.k0**2 * (2.0 * p.k0**2 + p.sigma_k0**2) * p.R0 * p.L**3


def purity_from_complexity(c_uncorr: float, c_corr: float, p: ScatteringParams) -> float:
    """Purity predicted from IGCs, ``1 - eta * (Cu^2 - Cc^2) / (Cu^2 + Cc^2)``.

    Note that this coefficient is twice the one implied by substituting the
    complexity-derived correlation into :func:`purity`.
    """
    rho = rho_from_complexity(c_uncorr, c_corr)
    _regime_check(p, rho, "purity_from_complexity")
    return 1.0 - purity_eta(p) * rho
