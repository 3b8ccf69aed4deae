"""Statistical manifolds, Fisher-Rao metrics, and Levi-Civita connections.

A :class:`StatisticalModel` bundles a parameter domain with an analytic
metric rule and, optionally, a :class:`DensityFamily` from which the metric
can be recomputed by quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.laguerre import laggauss

from .errors import (
    NoAnalyticRule,
    NonInvertibleJacobian,
    NonPositiveDeterminant,
    OutOfDomain,
    QuadratureNotConverged,
    SingularMetric,
)

BOUNDARY_MARGIN = 1e-9


# ---------------------------------------------------------------------------
# domain and tensors


@dataclass(frozen=True)
class DomainBox:
    """Product of open intervals, one per coordinate.

    Parameters
    ----------
    lower, upper : sequence of float
        Interval endpoints; ``-inf``/``inf`` are allowed.
    margin : float
        Points closer than this to a finite endpoint are rejected.
    """

    lower: tuple
    upper: tuple
    margin: float = BOUNDARY_MARGIN

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi):
            raise ValueError("lower and upper bounds differ in length")
        for k, (a, b) in enumerate(zip(lo, hi)):
            if not a < b:
                raise ValueError(f"empty interval for coordinate {k}: ({a}, {b})")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def violation(self, theta) -> int | None:
        """Index of the first coordinate outside the domain, or None."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got shape {theta.shape}")
        for k, (v, a, b) in enumerate(zip(theta, self.lower, self.upper)):
            if not np.isfinite(v) or not (a + self.margin < v < b - self.margin):
                return k
        return None

    def contains(self, theta) -> bool:
        return self.violation(theta) is None

    def check(self, theta) -> np.ndarray:
        """Return ``theta`` as a float array, raising OutOfDomain if needed."""
        theta = np.asarray(theta, dtype=float)
        k = self.violation(theta)
        if k is not None:
            raise OutOfDomain(k, float(theta[k]), (self.lower[k], self.upper[k]))
        return theta

    @classmethod
    def unbounded(cls, n: int) -> "DomainBox":
        return cls((-np.inf,) * n, (np.inf,) * n)


@dataclass(frozen=True)
class MetricTensor:
    """Metric components at a parameter point.

    ``components`` is symmetrized on construction and stored read-only.
    """

    point: tuple
    components: np.ndarray

    def __post_init__(self):
        g = np.array(self.components, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("metric components must be a square matrix")
        g = 0.5 * (g + g.T)
        g.setflags(write=False)
        object.__setattr__(self, "components", g)
        object.__setattr__(self, "point", tuple(float(v) for v in self.point))

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.components)
        except np.linalg.LinAlgError:
            return False
        return True

    def inverse(self) -> np.ndarray:
        try:
            c = np.linalg.cholesky(self.components)
        except np.linalg.LinAlgError as exc:
            raise SingularMetric(f"metric not positive definite at {self.point}") from exc
        cinv = np.linalg.inv(c)
        return cinv.T @ cinv

    def line_element(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ self.components @ v)


# ---------------------------------------------------------------------------
# analytic metric rules


@dataclass(frozen=True)
class MonomialMetric:
    """Metric whose entries are sums of monomials in the coordinates.

    Every catalog line element has this form, which gives exact metric
    gradients (and hence Christoffel symbols) without finite differences.

    Parameters
    ----------
    dim : int
    terms : mapping
        ``{(i, j): [(coef, powers), ...]}`` for ``i <= j``; ``powers`` is an
        integer tuple of length ``dim``.
    """

    dim: int
    terms: Mapping

    def __post_init__(self):
        clean = {}
        for (i, j), mons in self.terms.items():
            i, j = min(i, j), max(i, j)
            lst = clean.setdefault((i, j), [])
            for coef, powers in mons:
                powers = tuple(int(p) for p in powers)
                if len(powers) != self.dim:
                    raise ValueError("monomial power tuple has wrong length")
                if coef != 0.0:
                    lst.append((float(coef), powers))
        object.__setattr__(self, "terms", {k: tuple(v) for k, v in clean.items()})

        # flattened arrays for vectorized evaluation
        rows, cols, coefs, pows = [], [], [], []
        for (i, j), mons in self.terms.items():
            for c, p in mons:
                rows.append(i)
                cols.append(j)
                coefs.append(c)
                pows.append(p)
        n = self.dim
        # scatter[(i*n + j), t] = 1 places term t into both symmetric slots
        scatter = np.zeros((n * n, len(coefs)))
        for t, (i, j) in enumerate(zip(rows, cols)):
            scatter[i * n + j, t] = 1.0
            scatter[j * n + i, t] = 1.0
        pw = np.array(pows, dtype=float).reshape(-1, n)
        object.__setattr__(self, "_scatter", scatter * np.array(coefs, dtype=float))
        object.__setattr__(self, "_pows", pw)
        # powers after differentiating each monomial by each coordinate
        object.__setattr__(self, "_dpows", pw[:, None, :] - np.eye(n)[None, :, :])

    def __call__(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            mono = np.prod(theta**self._pows, axis=1)
        return (self._scatter @ mono).reshape(self.dim, self.dim)

    def gradient(self, theta) -> np.ndarray:
        """Array ``D`` with ``D[l, i, j] = d g_ij / d theta^l``."""
        theta = np.asarray(theta, dtype=float)
        n = self.dim
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            dm = np.prod(theta**self._dpows, axis=2) * self._pows  # (terms, l)
        dm = np.where(self._pows != 0.0, dm, 0.0)
        return (self._scatter @ dm).T.reshape(n, n, n)


def diagonal_metric(dim: int, entries: Mapping[int, Sequence]) -> MonomialMetric:
    """Shorthand for a diagonal :class:`MonomialMetric`."""
    return MonomialMetric(dim, {(k, k): mons for k, mons in entries.items()})


# ---------------------------------------------------------------------------
# density families and quadrature


@dataclass(frozen=True)
class AxisRule:
    """Support of one sample-space axis.

    ``kind="line"`` uses Gauss-Hermite nodes; ``kind="half"`` uses
    Gauss-Laguerre nodes with the substitution ``x = scale * t**(1/power)``,
    chosen so the dominant decay ``exp(-(x/scale)**power)`` becomes ``exp(-t)``.
    """

    kind: str = "line"
    power: float = 1.0

    def __post_init__(self):
        if self.kind not in ("line", "half"):
            raise ValueError(f"unknown axis kind {self.kind!r}")


@dataclass(frozen=True)
class DensityFamily:
    """Parametric family of densities on a product of lines and half-lines.

    Parameters
    ----------
    log_density : callable
        ``log_density(x, theta)`` with ``x`` of shape ``(m, l)`` returning ``(m,)``.
    axes : tuple of AxisRule
        One entry per sample-space axis. Line axes must come first.
    frame : callable
        ``frame(theta) -> (loc, chol, scales)``. ``loc`` and ``chol`` map
        standard normal coordinates of the line axes to ``x``; ``scales``
        gives one scale per half axis.
    hint : str
        ``"gaussian"`` when the family is Gaussian in its line axes.
    """

    log_density: Callable
    axes: tuple
    frame: Callable
    hint: str = "generic"

    @property
    def sample_dim(self) -> int:
        return len(self.axes)

    @property
    def n_line(self) -> int:
        return sum(a.kind == "line" for a in self.axes)


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for quadrature-based metric evaluation.

    ``order`` is the starting number of nodes per axis; it doubles until two
    successive estimates agree to ``rtol`` or ``max_nodes`` total nodes would
    be exceeded.
    """

    order: int = 8
    rtol: float = 1e-10
    max_order: int = 128
    max_nodes: int = 400_000
    fd_rel_step: float = 1e-3

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("quadrature order must be at least 2")


def _nodes(family: DensityFamily, theta: np.ndarray, order: int):
    """Sample points ``x`` (m, l) and log quadrature weights (m,)."""
    loc, chol, scales = family.frame(theta)
    per_axis_t = []
    per_axis_logw = []
    for ax in family.axes:
        if ax.kind == "line":
            z, w = hermegauss(order)
            per_axis_t.append(z)
            per_axis_logw.append(np.log(w) + 0.5 * z**2)
        else:
            t, w = laggauss(order)
            per_axis_t.append(t)
            per_axis_logw.append(np.log(w) + t)
    grids = np.meshgrid(*per_axis_t, indexing="ij")
    lw_grids = np.meshgrid(*per_axis_logw, indexing="ij")
    t = np.stack([g.ravel() for g in grids], axis=1)
    logw = sum(g.ravel() for g in lw_grids)

    x = np.empty_like(t)
    nl = family.n_line
    if nl:
        chol = np.atleast_2d(np.asarray(chol, dtype=float))
        x[:, :nl] = np.asarray(loc, dtype=float) + t[:, :nl] @ chol.T
        logw = logw + np.log(abs(np.prod(np.diag(chol))))
    scales = np.atleast_1d(np.asarray(scales, dtype=float)) if scales is not None else ()
    for h, ax in enumerate(family.axes[nl:]):
        k = nl + h
        s, p = scales[h], ax.power
        tk = t[:, k]
        x[:, k] = s * tk ** (1.0 / p)
        # dx/dt = s/p * t**(1/p - 1)
        logw = logw + np.log(s / p) + (1.0 / p - 1.0) * np.log(tk)
    return x, logw


def _score(family: DensityFamily, x: np.ndarray, theta: np.ndarray, rel_step: float):
    """Per-node log-density and its parameter gradient by 5-point differences."""
    n = theta.size
    logp = family.log_density(x, theta)
    score = np.empty((x.shape[0], n))
    for k in range(n):
        # relative step, floored so coordinates near zero still get a usable stencil
        h = rel_step * max(abs(theta[k]), 0.1)
        e = np.zeros(n)
        e[k] = h
        fp1 = family.log_density(x, theta + e)
        fm1 = family.log_density(x, theta - e)
        fp2 = family.log_density(x, theta + 2 * e)
        fm2 = family.log_density(x, theta - 2 * e)
        score[:, k] = (8 * (fp1 - fm1) - (fp2 - fm2)) / (12 * h)
    return logp, score


def metric_numeric(
    family: DensityFamily,
    theta,
    quad: QuadratureSpec | None = None,
    domain: DomainBox | None = None,
) -> MetricTensor:
    """Fisher-Rao metric ``E[score score^T]`` by tensor-product quadrature.

    Parameters
    ----------
    family : DensityFamily
    theta : array_like
        Parameter point.
    quad : QuadratureSpec, optional
    domain : DomainBox, optional
        When given, ``theta`` is checked against it first.

    Raises
    ------
    QuadratureNotConverged
        If doubling the order never brings successive estimates within
        ``quad.rtol`` of each other.
    """
    quad = quad or QuadratureSpec()
    theta = np.asarray(theta, dtype=float)
    if domain is not None:
        theta = domain.check(theta)
    order = quad.order
    prev = None
    diff = np.inf
    while True:
        x, logw = _nodes(family, theta, order)
        logp, score = _score(family, x, theta, quad.fd_rel_step)
        wp = np.exp(logw + logp)
        g = (score * wp[:, None]).T @ score
        g = 0.5 * (g + g.T)
        if prev is not None:
            scale = max(np.max(np.abs(g)), np.finfo(float).tiny)
            diff = np.max(np.abs(g - prev)) / scale
            if diff < quad.rtol:
                return MetricTensor(tuple(theta), g)
        prev = g
        order *= 2
        if order > quad.max_order or order ** family.sample_dim > quad.max_nodes:
            raise QuadratureNotConverged(
                f"relative change {diff:.3e} > {quad.rtol:.1e} at last order {order // 2}"
            )


def normalization_check(family: DensityFamily, theta, order: int = 32) -> float:
    """Quadrature estimate of the total mass of ``exp(log_density)``."""
    theta = np.asarray(theta, dtype=float)
    x, logw = _nodes(family, theta, order)
    return float(np.sum(np.exp(logw + family.log_density(x, theta))))


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class StatisticalModel:
    """A statistical manifold with an analytic metric and optional extras.

    Parameters
    ----------
    name : str
        Catalog identifier.
    coord_names : tuple of str
    domain : DomainBox
    metric_rule : callable, optional
        ``theta -> (n, n)`` array. A :class:`MonomialMetric` also supplies
        analytic gradients.
    density : DensityFamily, optional
        Enables quadrature cross-checks.
    volume_factors : tuple of callables, optional
        When ``sqrt(det g)`` factorizes as a product of one-coordinate
        functions, entry ``k`` is the antiderivative of the ``k``-th factor.
        Complexity volumes then reduce to products of one-dimensional
        integrals.
    acceleration : callable, optional
        ``(theta, v) -> d2theta/dtau2``. Overrides the Levi-Civita geodesic
        right-hand side for models integrated in a non-affine time.
    affine : bool
        False when ``acceleration`` does not preserve the squared speed.
    params : dict
        Construction parameters, for reporting.
    source : str
        Short description of where the model comes from.
    """

    name: str
    coord_names: tuple
    domain: DomainBox
    metric_rule: Callable | None = None
    density: DensityFamily | None = None
    volume_factors: tuple | None = None
    acceleration: Callable | None = None
    affine: bool = True
    params: dict = field(default_factory=dict)
    source: str = ""

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def has_analytic_gradient(self) -> bool:
        return hasattr(self.metric_rule, "gradient")

    def metric(self, theta) -> np.ndarray:
        """Raw metric array without domain checks (hot path for integrators)."""
        return self.metric_rule(theta)


def metric_analytic(model: StatisticalModel, theta) -> MetricTensor:
    """Closed-form metric of ``model`` at ``theta``.

    Raises
    ------
    OutOfDomain
    NoAnalyticRule
    """
    if model.metric_rule is None:
        raise NoAnalyticRule(f"model {model.name!r} has no analytic metric")
    theta = model.domain.check(theta)
    return MetricTensor(tuple(theta), model.metric_rule(theta))


def fisher_density(g) -> float:
    """Riemannian volume weight ``sqrt(det g)``.

    Raises
    ------
    NonPositiveDeterminant
    """
    comps = g.components if isinstance(g, MetricTensor) else np.asarray(g, dtype=float)
    det = np.linalg.det(comps)
    if not np.isfinite(det) or det <= 0.0:
        raise NonPositiveDeterminant(f"det g = {det!r}")
    return float(np.sqrt(det))


def default_fd_step(theta) -> np.ndarray:
    """Per-coordinate central-difference step ``eps**(1/3) * max(1, |theta|)``."""
    theta = np.asarray(theta, dtype=float)
    return np.finfo(float).eps ** (1.0 / 3.0) * np.maximum(1.0, np.abs(theta))


def metric_gradient_fd(model: StatisticalModel, theta, step=None) -> np.ndarray:
    """``D[l, i, j] = d g_ij / d theta^l`` by central differences.

    The stencil must stay inside the domain.
    """
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    h = default_fd_step(theta) if step is None else np.broadcast_to(np.asarray(step, float), (n,))
    d = np.empty((n, n, n))
    for l in range(n):
        e = np.zeros(n)
        e[l] = h[l]
        plus, minus = theta + e, theta - e
        for pt in (plus, minus):
            k = model.domain.violation(pt)
            if k is not None:
                raise OutOfDomain(k, float(pt[k]), (model.domain.lower[k], model.domain.upper[k]))
        d[l] = (model.metric(plus) - model.metric(minus)) / (2 * h[l])
    return d


def christoffel_from(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Levi-Civita symbols ``Gamma[k, i, j]`` from the metric and its gradient."""
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric("metric inversion failed") from exc
    if not np.all(np.isfinite(ginv)):
        raise SingularMetric("metric inversion produced non-finite entries")
    # lowered[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    lowered = np.transpose(dg, (2, 0, 1)) + np.transpose(dg, (2, 1, 0)) - dg
    gam = 0.5 * np.einsum("kl,lij->kij", ginv, lowered)
    return 0.5 * (gam + np.transpose(gam, (0, 2, 1)))


def christoffel(model: StatisticalModel, theta, step=None, method: str = "auto") -> np.ndarray:
    """Christoffel symbols of the second kind, ``Gamma[k, i, j]``.

    Parameters
    ----------
    model : StatisticalModel
    theta : array_like
    step : float or array_like, optional
        Finite-difference step. Passing a step forces finite differences.
    method : {"auto", "analytic", "fd"}
        ``auto`` uses analytic metric gradients when the model has them.

    Raises
    ------
    SingularMetric
    OutOfDomain
    """
    theta = model.domain.check(theta)
    if method == "auto":
        method = "analytic" if (step is None and model.has_analytic_gradient) else "fd"
    if method == "analytic":
        if not model.has_analytic_gradient:
            raise NoAnalyticRule(f"model {model.name!r} has no analytic metric gradient")
        dg = model.metric_rule.gradient(theta)
    elif method == "fd":
        if step is not None and np.any(np.asarray(step) <= 0):
            raise ValueError("finite-difference step must be positive")
        dg = metric_gradient_fd(model, theta, step)
    else:
        raise ValueError(f"unknown method {method!r}")
    return christoffel_from(model.metric(theta), dg)


# ---------------------------------------------------------------------------
# reparametrization


@dataclass(frozen=True)
class Reparametrization:
    """Coordinate change ``theta = forward(theta_new)``.

    Parameters
    ----------
    forward : callable
        New coordinates to old coordinates.
    jacobian : callable
        ``d theta / d theta_new`` at a new-coordinate point.
    metric : callable, optional
        Independently known metric in the new coordinates. When absent, the
        new-coordinate metric is recomputed by quadrature from the model's
        density family composed with ``forward``.
    """

    forward: Callable
    jacobian: Callable
    metric: Callable | None = None
    name: str = ""


IDENTITY_COND_LIMIT = 1e12


def _pulled_back_family(family: DensityFamily, diffeo: Reparametrization) -> DensityFamily:
    return DensityFamily(
        log_density=lambda x, tn: family.log_density(x, np.asarray(diffeo.forward(tn), float)),
        axes=family.axes,
        frame=lambda tn: family.frame(np.asarray(diffeo.forward(tn), float)),
        hint=family.hint,
    )


def transformed_metric(model: StatisticalModel, diffeo: Reparametrization, theta_new) -> np.ndarray:
    """``J^T g(forward(theta_new)) J``, the tensor-transformed metric."""
    theta_new = np.asarray(theta_new, dtype=float)
    j = np.atleast_2d(np.asarray(diffeo.jacobian(theta_new), dtype=float))
    if j.shape != (model.dim, model.dim):
        raise NonInvertibleJacobian(f"Jacobian has shape {j.shape}")
    det = np.linalg.det(j)
    if not np.isfinite(det) or det == 0.0 or np.linalg.cond(j) > IDENTITY_COND_LIMIT:
        raise NonInvertibleJacobian(f"Jacobian singular at {tuple(theta_new)} (det={det!r})")
    theta = model.domain.check(diffeo.forward(theta_new))
    return j.T @ metric_analytic(model, theta).components @ j


def check_reparam_covariance(
    model: StatisticalModel,
    diffeo: Reparametrization,
    theta_new,
    quad: QuadratureSpec | None = None,
) -> float:
    """Max-norm residual of ``g'(theta') - J^T g J``.

    A small value certifies that the metric transforms as a rank-2 tensor.

    Raises
    ------
    NonInvertibleJacobian
    """
    theta_new = np.asarray(theta_new, dtype=float)
    pulled = transformed_metric(model, diffeo, theta_new)
    if diffeo.metric is not None:
        direct = np.asarray(diffeo.metric(theta_new), dtype=float)
    elif model.density is not None:
        direct = metric_numeric(_pulled_back_family(model.density, diffeo), theta_new, quad).components
    else:
        raise NoAnalyticRule("need either a new-coordinate metric or a density family")
    return float(np.max(np.abs(direct - pulled)))
