"""Ready-made statistical manifolds.

Each builder returns a :class:`~igac.manifold.StatisticalModel` with an
exact monomial metric. Gaussian and exponential-type models also carry a
density family so the metric can be cross-checked by quadrature. When
``sqrt(det g)`` splits into one-coordinate factors, the model carries the
antiderivative of each factor for fast volume evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import ParamOutOfRange
from ..manifold import (
    AxisRule,
    DensityFamily,
    DomainBox,
    MonomialMetric,
    StatisticalModel,
    diagonal_metric,
)

INF = math.inf
SQRT2_2 = math.sqrt(2.0) / 2.0


# ---------------------------------------------------------------------------
# parameter schemas


@dataclass(frozen=True)
class ParamSpec:
    """Schema for one catalog parameter.

    ``kind`` is ``"float"``, ``"int"`` or ``"floats"`` (a list of floats,
    each checked against the bounds).
    """

    name: str
    kind: str = "float"
    default: object = None
    lower: float = -INF
    upper: float = INF
    lower_closed: bool = False
    upper_closed: bool = False
    label: str | None = None
    doc: str = ""

    def bound_text(self) -> str:
        if self.label:
            return self.label
        lo = "[" if self.lower_closed else "("
        hi = "]" if self.upper_closed else ")"
        return f"{lo}{_fmt(self.lower)}, {_fmt(self.upper)}{hi}"

    def _ok(self, v: float) -> bool:
        if not math.isfinite(v):
            return False
        lo_ok = v >= self.lower if self.lower_closed else v > self.lower
        hi_ok = v <= self.upper if self.upper_closed else v < self.upper
        return lo_ok and hi_ok

    def coerce(self, value):
        if self.kind == "floats":
            if np.isscalar(value):
                value = [value]
            vals = [float(v) for v in value]
            if not vals:
                raise ParamOutOfRange(self.name, value, "non-empty list")
            for v in vals:
                if not self._ok(v):
                    raise ParamOutOfRange(self.name, v, self.bound_text())
            return tuple(vals)
        if self.kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ParamOutOfRange(self.name, value, "an integer")
            v = int(value)
        else:
            v = float(value)
        if not self._ok(v):
            raise ParamOutOfRange(self.name, value, self.bound_text())
        return v


def _fmt(v: float) -> str:
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return f"{v:g}"


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    builder: Callable
    params: tuple
    summary: str
    source: str
    dim_rule: Callable = field(default=lambda p: 0)

    def resolve(self, given: dict) -> dict:
        known = {p.name for p in self.params}
        unknown = set(given) - known
        if unknown:
            raise ParamOutOfRange(sorted(unknown)[0], given[sorted(unknown)[0]], f"one of {sorted(known) or 'no parameters'}")
        out = {}
        for p in self.params:
            if p.name in given:
                out[p.name] = p.coerce(given[p.name])
            elif p.default is not None:
                out[p.name] = p.coerce(p.default)
            else:
                raise ParamOutOfRange(p.name, None, f"required, domain {p.bound_text()}")
        return out


# ---------------------------------------------------------------------------
# volume factor helpers


@dataclass(frozen=True)
class CoordinateFactor:
    """One factor ``h(t)`` of a split Fisher density, with antiderivative ``H``."""

    density: Callable
    antiderivative: Callable


def power_factor(coef: float, p: int) -> CoordinateFactor:
    """Factor ``coef * t**(-p)`` for ``t > 0`` (``p = 0`` allows any ``t``)."""
    if p == 0:
        return CoordinateFactor(lambda t: coef + 0.0 * t, lambda t: coef * t)
    if p == 1:
        return CoordinateFactor(lambda t: coef / t, lambda t: coef * np.log(t))
    return CoordinateFactor(
        lambda t: coef * t ** (-p), lambda t: coef * t ** (1 - p) / (1 - p)
    )


def _sqrt_quadratic_factor(c: float) -> CoordinateFactor:
    """Factor ``sqrt(1 + c**2 t**2)``."""

    def h(t):
        return np.sqrt(1.0 + (c * t) ** 2)

    def big_h(t):
        return 0.5 * (t * np.sqrt(1.0 + (c * t) ** 2) + np.arcsinh(c * t) / c)

    return CoordinateFactor(h, big_h)


# ---------------------------------------------------------------------------
# density family helpers


def _mvn_family(dim: int, mean_fn: Callable, cov_fn: Callable) -> DensityFamily:
    """Multivariate normal family with parameter-dependent mean and covariance."""

    def frame(theta):
        return mean_fn(theta), np.linalg.cholesky(cov_fn(theta)), None

    def log_density(x, theta):
        m = np.asarray(mean_fn(theta), float)
        c = np.linalg.cholesky(cov_fn(theta))
        z = np.linalg.solve(c, (x - m).T)
        l = m.size
        return (
            -0.5 * np.sum(z * z, axis=0)
            - np.sum(np.log(np.diag(c)))
            - 0.5 * l * math.log(2 * math.pi)
        )

    return DensityFamily(log_density, tuple(AxisRule("line") for _ in range(dim)), frame, "gaussian")


def _corr_cov(sig: float, r: np.ndarray) -> np.ndarray:
    return sig * sig * r


# ---------------------------------------------------------------------------
# builders


def euclidean(n: int = 2) -> StatisticalModel:
    """Flat test manifold: unit-variance Gaussian location family in ``n`` dims."""

    def mean(theta):
        return np.asarray(theta, float)

    fam = _mvn_family(n, mean, lambda theta: np.eye(n))
    return StatisticalModel(
        name="euclidean",
        coord_names=tuple(f"x{k + 1}" for k in range(n)),
        domain=DomainBox.unbounded(n),
        metric_rule=diagonal_metric(n, {k: [(1.0, (0,) * n)] for k in range(n)}),
        density=fam,
        volume_factors=tuple(power_factor(1.0, 0) for _ in range(n)),
        params={"n": n},
        source="flat test manifold",
    )


def uncorrelated_gaussian(l: int = 1) -> StatisticalModel:
    """``l`` independent Gaussians; coordinates ``(mu_1, sigma_1, ..., mu_l, sigma_l)``."""
    n = 2 * l

    def pw(k, p):
        pows = [0] * n
        pows[k] = p
        return tuple(pows)

    entries = {}
    for j in range(l):
        entries[2 * j] = [(1.0, pw(2 * j + 1, -2))]
        entries[2 * j + 1] = [(2.0, pw(2 * j + 1, -2))]

    def mean(theta):
        return np.asarray(theta, float)[0::2]

    def cov(theta):
        return np.diag(np.asarray(theta, float)[1::2] ** 2)

    names = []
    for j in range(1, l + 1):
        names += [f"mu_{j}", f"sigma_{j}"]
    factors = []
    for _ in range(l):
        factors += [power_factor(1.0, 0), power_factor(math.sqrt(2.0), 2)]
    return StatisticalModel(
        name="uncorrelated_gaussian",
        coord_names=tuple(names),
        domain=DomainBox((-INF, 0.0) * l, (INF, INF) * l),
        metric_rule=diagonal_metric(n, entries),
        density=_mvn_family(l, mean, cov),
        volume_factors=tuple(factors),
        params={"l": l},
        source="independent Gaussian replicas",
    )


def _common_mean_model(name, corr: np.ndarray, params, source) -> StatisticalModel:
    """Equal-mean, equal-variance Gaussian with fixed correlation pattern ``corr``."""
    l = corr.shape[0]
    cinv = np.linalg.inv(corr)
    mu_coef = float(np.sum(cinv))  # 1^T R^{-1} 1
    sig_coef = 2.0 * l  # (1/2) tr((2/sigma I)^2) * sigma^2
    metric = diagonal_metric(2, {0: [(mu_coef, (0, -2))], 1: [(sig_coef, (0, -2))]})

    def mean(theta):
        return np.full(l, theta[0], dtype=float)

    fam = _mvn_family(l, mean, lambda theta: _corr_cov(theta[1], corr))
    return StatisticalModel(
        name=name,
        coord_names=("mu", "sigma"),
        domain=DomainBox((-INF, 0.0), (INF, INF)),
        metric_rule=metric,
        density=fam,
        volume_factors=(power_factor(1.0, 0), power_factor(math.sqrt(mu_coef * sig_coef), 2)),
        params=params,
        source=source,
    )


def bivariate_corr(rho: float) -> StatisticalModel:
    """Bivariate Gaussian with common mean and variance and correlation ``rho``."""
    r = np.array([[1.0, rho], [rho, 1.0]])
    return _common_mean_model("bivariate_corr", r, {"rho": rho}, "correlated bivariate Gaussian")


def trivariate_case1(rho: float) -> StatisticalModel:
    """One correlated pair among three variables."""
    r = np.array([[1.0, rho, 0.0], [rho, 1.0, 0.0], [0.0, 0.0, 1.0]])
    return _common_mean_model("trivariate_case1", r, {"rho": rho}, "trivariate Gaussian, one correlated pair")


def trivariate_case2(rho: float) -> StatisticalModel:
    """First variable correlated with the other two."""
    r = np.array([[1.0, rho, rho], [rho, 1.0, 0.0], [rho, 0.0, 1.0]])
    return _common_mean_model("trivariate_case2", r, {"rho": rho}, "trivariate Gaussian, star correlations")


def trivariate_case3(rho: float) -> StatisticalModel:
    """All three pairs correlated."""
    r = np.array([[1.0, rho, rho], [rho, 1.0, rho], [rho, rho, 1.0]])
    return _common_mean_model("trivariate_case3", r, {"rho": rho}, "trivariate Gaussian, all pairs correlated")


def _pair_means_model(name, rho, params, source) -> StatisticalModel:
    """Two correlated coordinates with separate means and a shared width.

    Coordinates ``(mu_x, mu_y, sigma)``.
    """
    q = 1.0 / (1.0 - rho * rho)
    metric = MonomialMetric(
        3,
        {
            (0, 0): [(q, (0, 0, -2))],
            (1, 1): [(q, (0, 0, -2))],
            (0, 1): [(-rho * q, (0, 0, -2))],
            (2, 2): [(4.0, (0, 0, -2))],
        },
    )
    r = np.array([[1.0, rho], [rho, 1.0]])

    def mean(theta):
        return np.array([theta[0], theta[1]], dtype=float)

    fam = _mvn_family(2, mean, lambda theta: _corr_cov(theta[2], r))
    return StatisticalModel(
        name=name,
        coord_names=("mu_x", "mu_y", "sigma"),
        domain=DomainBox((-INF, -INF, 0.0), (INF, INF, INF)),
        metric_rule=metric,
        density=fam,
        volume_factors=(
            power_factor(1.0, 0),
            power_factor(1.0, 0),
            power_factor(2.0 / math.sqrt(1.0 - rho * rho), 3),
        ),
        params=params,
        source=source,
    )


def microcorrelated_3d(rho: float) -> StatisticalModel:
    return _pair_means_model("microcorrelated_3d", rho, {"rho": rho}, "microcorrelated Gaussian pair")


def scattering_uncorr() -> StatisticalModel:
    return _pair_means_model("scattering_uncorr", 0.0, {}, "pre-collision Gaussian wave-packet pair")


def scattering_corr(rho: float) -> StatisticalModel:
    return _pair_means_model("scattering_corr", rho, {"rho": rho}, "post-collision correlated wave-packet pair")


def macro_correlation(a: float, b: float) -> float:
    """Macroscopic correlation coefficient of an embedding constraint.

    ``a`` and ``b`` are the partial derivatives of the constrained mean with
    respect to the free mean and the free width.
    """
    return a * b / (math.sqrt(1.0 + a * a) * math.sqrt(2.0 + 0.5 * b * b))


def linear_constraint(a: float = 1.0, b: float = 1.0) -> Callable:
    """Default embedding constraint ``mu' = a*mu + b*sigma``.

    Returns a callable ``(mu, sigma) -> (mu', d mu'/d mu, d mu'/d sigma)``.
    """

    def constraint(mu, sigma):
        return a * mu + b * sigma, a, b

    return constraint


def embedded_gaussian(l: int = 1, rho: float | None = None, constraint: Callable | None = None, at=(0.0, 1.0)) -> StatisticalModel:
    """Gaussian pairs reduced by embedding constraints.

    Coordinates ``(mu_1, sigma_1, ..., mu_l, sigma_l)``. The cross
    coefficient is ``rho`` when given; otherwise it is computed from
    ``constraint`` (default :func:`linear_constraint`) at the point ``at``.
    The metric is only defined through its normalized line element, so no
    density family is attached.
    """
    if rho is None:
        constraint = constraint or linear_constraint()
        _, a, b = constraint(*at)
        rho = macro_correlation(a, b)
    if not 0.0 <= rho < 1.0:
        raise ParamOutOfRange("rho", rho, "[0, 1)")
    n = 2 * l
    terms = {}
    factors = []
    for j in range(l):
        pw = [0] * n
        pw[2 * j + 1] = -2
        pw = tuple(pw)
        terms[(2 * j, 2 * j)] = [(1.0, pw)]
        terms[(2 * j, 2 * j + 1)] = [(rho, pw)]
        terms[(2 * j + 1, 2 * j + 1)] = [(2.0, pw)]
        factors += [power_factor(1.0, 0), power_factor(math.sqrt(2.0 - rho * rho), 2)]
    names = []
    for j in range(1, l + 1):
        names += [f"mu_{j}", f"sigma_{j}"]
    return StatisticalModel(
        name="embedded_gaussian",
        coord_names=tuple(names),
        domain=DomainBox((-INF, 0.0) * l, (INF, INF) * l),
        metric_rule=MonomialMetric(n, terms),
        volume_factors=tuple(factors),
        params={"l": l, "rho": rho},
        source="Gaussian pairs with embedding constraints",
    )


def gauss_3du() -> StatisticalModel:
    """Coordinates ``(mu_x, sigma_x, sigma_y)``; the second variable has zero mean."""
    metric = diagonal_metric(3, {0: [(1.0, (0, -2, 0))], 1: [(2.0, (0, -2, 0))], 2: [(2.0, (0, 0, -2))]})

    def mean(theta):
        return np.array([theta[0], 0.0])

    fam = _mvn_family(2, mean, lambda theta: np.diag([theta[1] ** 2, theta[2] ** 2]))
    return StatisticalModel(
        name="gauss_3du",
        coord_names=("mu_x", "sigma_x", "sigma_y"),
        domain=DomainBox((-INF, 0.0, 0.0), (INF, INF, INF)),
        metric_rule=metric,
        density=fam,
        volume_factors=(power_factor(1.0, 0), power_factor(math.sqrt(2.0), 2), power_factor(math.sqrt(2.0), 1)),
        params={},
        source="uncorrelated position-momentum Gaussian",
    )


def gauss_2du(Sigma: float = 1.0) -> StatisticalModel:
    """``gauss_3du`` under the constraint ``sigma_x * sigma_y = Sigma**2``."""
    s4 = Sigma**4
    metric = diagonal_metric(2, {0: [(1.0, (0, -2))], 1: [(4.0, (0, -2))]})

    def mean(theta):
        return np.array([theta[0], 0.0])

    fam = _mvn_family(2, mean, lambda theta: np.diag([theta[1] ** 2, s4 / theta[1] ** 2]))
    return StatisticalModel(
        name="gauss_2du",
        coord_names=("mu_x", "sigma"),
        domain=DomainBox((-INF, 0.0), (INF, INF)),
        metric_rule=metric,
        density=fam,
        volume_factors=(power_factor(1.0, 0), power_factor(2.0, 2)),
        params={"Sigma": Sigma},
        source="uncertainty-constrained Gaussian",
    )


def gauss_3dc(rho: float) -> StatisticalModel:
    """Correlated position-momentum Gaussian; coordinates ``(mu_x, sigma_x, sigma_y)``."""
    q = 1.0 / (1.0 - rho * rho)
    metric = MonomialMetric(
        3,
        {
            (0, 0): [(q, (0, -2, 0))],
            (1, 1): [((2.0 - rho * rho) * q, (0, -2, 0))],
            (2, 2): [((2.0 - rho * rho) * q, (0, 0, -2))],
            (1, 2): [(-rho * rho * q, (0, -1, -1))],
        },
    )

    def mean(theta):
        return np.array([theta[0], 0.0])

    def cov(theta):
        sx, sy = theta[1], theta[2]
        return np.array([[sx * sx, rho * sx * sy], [rho * sx * sy, sy * sy]])

    return StatisticalModel(
        name="gauss_3dc",
        coord_names=("mu_x", "sigma_x", "sigma_y"),
        domain=DomainBox((-INF, 0.0, 0.0), (INF, INF, INF)),
        metric_rule=metric,
        density=_mvn_family(2, mean, cov),
        volume_factors=(power_factor(1.0, 0), power_factor(2.0 * q, 2), power_factor(1.0, 1)),
        params={"rho": rho},
        source="correlated position-momentum Gaussian",
    )


def gauss_2dc(rho: float, Sigma: float = 1.0) -> StatisticalModel:
    """``gauss_3dc`` under the uncertainty and covariance constraints."""
    q = 1.0 / (1.0 - rho * rho)
    s2 = Sigma**2
    metric = diagonal_metric(2, {0: [(q, (0, -2))], 1: [(4.0 * q, (0, -2))]})

    def mean(theta):
        return np.array([theta[0], 0.0])

    def cov(theta):
        s = theta[1]
        return np.array([[s * s, rho * s2], [rho * s2, s2 * s2 / (s * s)]])

    return StatisticalModel(
        name="gauss_2dc",
        coord_names=("mu_x", "sigma"),
        domain=DomainBox((-INF, 0.0), (INF, INF)),
        metric_rule=metric,
        density=_mvn_family(2, mean, cov),
        volume_factors=(power_factor(1.0, 0), power_factor(2.0 * q, 2)),
        params={"rho": rho, "Sigma": Sigma},
        source="uncertainty- and covariance-constrained Gaussian",
    )


def iho(omega=(1.0,)) -> StatisticalModel:
    """Conformally flat manifold of uncoupled inverted oscillators.

    The metric is ``(1 + sum_k omega_k**2 theta_k**2 / 2) * I``. Geodesics
    are integrated in the reparametrized time in which each coordinate
    obeys ``theta'' = omega**2 theta``, so the squared speed is not
    conserved along those paths.
    """
    omega = tuple(float(w) for w in np.atleast_1d(omega))
    l = len(omega)
    base = [(1.0, (0,) * l)]
    for k, w in enumerate(omega):
        pw = [0] * l
        pw[k] = 2
        base.append((0.5 * w * w, tuple(pw)))
    metric = diagonal_metric(l, {k: list(base) for k in range(l)})
    w2 = np.array(omega) ** 2

    def accel(theta, v):
        return w2 * theta

    factors = (_sqrt_quadratic_factor(omega[0] / math.sqrt(2.0)),) if l == 1 else None
    return StatisticalModel(
        name="iho",
        coord_names=tuple(f"theta_{k + 1}" for k in range(l)),
        domain=DomainBox.unbounded(l),
        metric_rule=metric,
        volume_factors=factors,
        acceleration=accel,
        affine=False,
        params={"omega": omega},
        source="inverted harmonic oscillators",
    )


def spin_integrable() -> StatisticalModel:
    """Two exponential distributions with means ``(mu_A, mu_B)``."""
    metric = diagonal_metric(2, {0: [(1.0, (-2, 0))], 1: [(1.0, (0, -2))]})

    def log_density(x, theta):
        a, b = theta
        return -math.log(a) - math.log(b) - x[:, 0] / a - x[:, 1] / b

    def frame(theta):
        return np.zeros(0), np.zeros((0, 0)), np.array([theta[0], theta[1]])

    fam = DensityFamily(log_density, (AxisRule("half", 1.0), AxisRule("half", 1.0)), frame)
    return StatisticalModel(
        name="spin_integrable",
        coord_names=("mu_A", "mu_B"),
        domain=DomainBox((0.0, 0.0), (INF, INF)),
        metric_rule=metric,
        density=fam,
        volume_factors=(power_factor(1.0, 1), power_factor(1.0, 1)),
        params={},
        source="integrable spin chain: exponential level spacings and field",
    )


def spin_chaotic() -> StatisticalModel:
    """Wigner-Dyson spacing times Gaussian field; coordinates ``(mu_A, mu_B, sigma_B)``.

    The sample vector is ordered ``(x_B, x_A)`` so the line axis comes first.
    """
    metric = diagonal_metric(3, {0: [(4.0, (-2, 0, 0))], 1: [(1.0, (0, 0, -2))], 2: [(2.0, (0, 0, -2))]})
    log_half_pi = math.log(math.pi / 2.0)
    half_log_2pi = 0.5 * math.log(2 * math.pi)

    def log_density(x, theta):
        a, mb, sb = theta
        xb, xa = x[:, 0], x[:, 1]
        wd = log_half_pi + np.log(xa) - 2 * math.log(a) - math.pi * xa * xa / (4 * a * a)
        g = -half_log_2pi - math.log(sb) - 0.5 * ((xb - mb) / sb) ** 2
        return wd + g

    def frame(theta):
        a, mb, sb = theta
        return np.array([mb]), np.array([[sb]]), np.array([2.0 * a / math.sqrt(math.pi)])

    fam = DensityFamily(log_density, (AxisRule("line"), AxisRule("half", 2.0)), frame)
    return StatisticalModel(
        name="spin_chaotic",
        coord_names=("mu_A", "mu_B", "sigma_B"),
        domain=DomainBox((0.0, -INF, 0.0), (INF, INF, INF)),
        metric_rule=metric,
        density=fam,
        volume_factors=(power_factor(2.0, 1), power_factor(1.0, 0), power_factor(math.sqrt(2.0), 2)),
        params={},
        source="chaotic spin chain: Wigner-Dyson spacings and Gaussian field",
    )


# ---------------------------------------------------------------------------
# registry

_RHO = ParamSpec("rho", lower=-1.0, upper=1.0, doc="correlation coefficient")
_RHO_POS = ParamSpec("rho", lower=0.0, upper=1.0, lower_closed=True, doc="correlation coefficient")
_SIGMA = ParamSpec("Sigma", default=1.0, lower=0.0, doc="uncertainty product scale")
_L = ParamSpec("l", kind="int", default=1, lower=1, lower_closed=True, doc="number of replicas")

CATALOG: dict[str, CatalogEntry] = {}


def _register(name, builder, params, summary, source, dim_rule):
    CATALOG[name] = CatalogEntry(name, builder, tuple(params), summary, source, dim_rule)


_register("euclidean", euclidean, [ParamSpec("n", "int", 2, 1, INF, True)], "flat test manifold", "test fixture", lambda p: p["n"])
_register("uncorrelated_gaussian", uncorrelated_gaussian, [_L], "l independent Gaussians", "independent Gaussian replicas", lambda p: 2 * p["l"])
_register("bivariate_corr", bivariate_corr, [_RHO], "correlated bivariate Gaussian, common mean and width", "correlated bivariate Gaussian", lambda p: 2)
_register("trivariate_case1", trivariate_case1, [_RHO], "trivariate Gaussian, one correlated pair", "trivariate Gaussian (weak)", lambda p: 2)
_register(
    "trivariate_case2",
    trivariate_case2,
    [ParamSpec("rho", lower=-SQRT2_2, upper=SQRT2_2, label="(-sqrt(2)/2, sqrt(2)/2)", doc="correlation coefficient")],
    "trivariate Gaussian, one variable correlated with both others",
    "trivariate Gaussian (mildly weak)",
    lambda p: 2,
)
_register(
    "trivariate_case3",
    trivariate_case3,
    [ParamSpec("rho", lower=-0.5, upper=1.0, label="(-1/2, 1)", doc="correlation coefficient")],
    "trivariate Gaussian, all pairs correlated",
    "trivariate Gaussian (strong)",
    lambda p: 2,
)
_register("microcorrelated_3d", microcorrelated_3d, [_RHO_POS], "correlated pair with separate means", "microcorrelated Gaussian pair", lambda p: 3)
_register(
    "embedded_gaussian",
    embedded_gaussian,
    [_L, ParamSpec("rho", default=macro_correlation(1.0, 1.0), lower=0.0, upper=1.0, lower_closed=True, doc="macroscopic correlation")],
    "Gaussian pairs with embedding constraints",
    "macrocorrelated embedded Gaussian",
    lambda p: 2 * p["l"],
)
_register("gauss_3du", gauss_3du, [], "uncorrelated position-momentum Gaussian", "3D uncorrelated Gaussian", lambda p: 3)
_register("gauss_2du", gauss_2du, [_SIGMA], "3Du under sigma_x*sigma_y = Sigma^2", "2D uncorrelated Gaussian", lambda p: 2)
_register("gauss_3dc", gauss_3dc, [_RHO], "correlated position-momentum Gaussian", "3D correlated Gaussian", lambda p: 3)
_register("gauss_2dc", gauss_2dc, [_RHO, _SIGMA], "3Dc under uncertainty and covariance constraints", "2D correlated Gaussian", lambda p: 2)
_register(
    "iho",
    iho,
    [ParamSpec("omega", "floats", (1.0,), 0.0, INF, doc="oscillator frequencies")],
    "uncoupled inverted harmonic oscillators",
    "inverted oscillator manifold",
    lambda p: len(p["omega"]),
)
_register("spin_integrable", spin_integrable, [], "exponential spacing x exponential field", "integrable spin chain", lambda p: 2)
_register("spin_chaotic", spin_chaotic, [], "Wigner-Dyson spacing x Gaussian field", "chaotic spin chain", lambda p: 3)
_register("scattering_uncorr", scattering_uncorr, [], "pre-collision wave-packet pair", "wave-packet scattering (uncorrelated)", lambda p: 3)
_register("scattering_corr", scattering_corr, [_RHO_POS], "post-collision correlated wave-packet pair", "wave-packet scattering (correlated)", lambda p: 3)


def build(name: str, **params) -> StatisticalModel:
    """Build a catalog model by name.

    Raises
    ------
    KeyError
        Unknown model name.
    ParamOutOfRange
        A parameter is missing or violates its domain.
    """
    try:
        entry = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; known: {', '.join(sorted(CATALOG))}") from None
    return entry.builder(**entry.resolve(params))


def list_models() -> list[dict]:
    """Rows describing every catalog entry (name, dimension rule, parameters, source)."""
    rows = []
    for name, e in CATALOG.items():
        try:
            dim = e.dim_rule(e.resolve({}))
        except ParamOutOfRange:
            dim = e.dim_rule({p.name: p.default or 0.0 for p in e.params})
        rows.append(
            {
                "name": name,
                "dimension": dim,
                "parameters": [(p.name, p.bound_text()) for p in e.params],
                "source": e.source,
                "summary": e.summary,
            }
        )
    return rows
