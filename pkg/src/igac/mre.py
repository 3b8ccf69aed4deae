"""Maximum relative entropy updating on a parameter grid.

The update conditions on one observed value ``x'`` and tilts the result by
``exp(beta * f(theta))`` so that the posterior mean of ``f`` hits a target.
With no moment constraint (or ``beta = 0``) it reduces to Bayes' rule.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import BetaNotBracketed, InfeasibleMoment, MaxIterations, ZeroEvidence

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class GridPrior:
    """Discretized prior with a likelihood table.

    Parameters
    ----------
    theta : array_like, shape (n,)
        Grid nodes.
    weights : array_like, shape (n,)
        Quadrature weights; use ones for a discrete prior.
    prior : array_like, shape (n,)
        Prior values with ``sum(weights * prior) == 1``.
    likelihood : array_like, shape (n, k)
        ``likelihood[i, j] = P(x_j | theta_i)``.
    observables : sequence of str, optional
        Labels of the ``k`` likelihood columns (default ``x1..xk``).
    """

    theta: np.ndarray
    weights: np.ndarray
    prior: np.ndarray
    likelihood: np.ndarray
    observables: tuple = ()

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        p = np.asarray(self.prior, dtype=float).ravel()
        lik = np.asarray(self.likelihood, dtype=float)
        if lik.ndim == 1:
            lik = lik[:, None]
        n = theta.size
        if not (w.size == p.size == lik.shape[0] == n):
            raise ValueError("theta, weights, prior and likelihood rows must have equal length")
        if np.any(w < 0) or np.any(p < 0):
            raise ValueError("weights and prior values must be non-negative")
        if np.any(lik < 0) or not np.all(np.isfinite(lik)):
            raise ValueError("likelihood entries must be finite and non-negative")
        total = float(np.sum(w * p))
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"prior is not normalized: sum(weights*prior) = {total!r}")
        obs = tuple(self.observables) or tuple(f"x{j + 1}" for j in range(lik.shape[1]))
        if len(obs) != lik.shape[1]:
            raise ValueError("one observable label per likelihood column required")
        for name, arr in (("theta", theta), ("weights", w), ("prior", p), ("likelihood", lik)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "observables", obs)

    @property
    def size(self) -> int:
        return self.theta.size

    def column(self, observed) -> np.ndarray:
        """Likelihood column for an observable given by label or index."""
        if isinstance(observed, str):
            try:
                j = self.observables.index(observed)
            except ValueError:
                raise KeyError(f"unknown observable {observed!r}") from None
        else:
            j = int(observed)
        return self.likelihood[:, j]

    @classmethod
    def normalized(cls, theta, weights, prior, likelihood, observables=()):
        """Construct after rescaling ``prior`` so it is normalized."""
        w = np.asarray(weights, float)
        p = np.asarray(prior, float)
        return cls(theta, w, p / np.sum(w * p), likelihood, observables)


@dataclass(frozen=True)
class MomentConstraint:
    """Expected-value constraint ``E[f(theta)] = target``."""

    f: Callable
    target: float

    def values(self, theta: np.ndarray) -> np.ndarray:
        return np.asarray(self.f(theta), dtype=float) * np.ones_like(theta)


@dataclass(frozen=True)
class MreSolution:
    """Updated distribution on the grid.

    Attributes
    ----------
    posterior : ndarray
        ``P_new(theta_i)``, normalized so ``sum(weights * posterior) == 1``.
    beta : float
        Solved multiplier (exactly 0 for a Bayes update).
    moment : float or None
        Achieved ``E[f]`` under the posterior, when a constraint was given.
    normalizer : float
        ``sum(weights * prior * lik * exp(beta f))``; may overflow to inf for
        extreme ``beta``, in which case ``log_normalizer`` is still exact.
    log_normalizer : float
    """

    posterior: np.ndarray
    beta: float
    moment: float | None
    normalizer: float
    log_normalizer: float


def _log_base(prior: GridPrior, observed) -> np.ndarray:
    """``log(weights * prior * lik)`` with ``-inf`` off the support."""
    w = prior.weights * prior.prior * prior.column(observed)
    with np.errstate(divide="ignore"):
        return np.log(w)


def _finish(prior: GridPrior, logw: np.ndarray, beta: float, fvals=None) -> MreSolution:
    log_z = float(logsumexp(logw))
    mass = np.exp(logw - log_z)  # weights * posterior
    with np.errstate(divide="ignore", invalid="ignore"):
        post = np.where(prior.weights > 0, mass / np.where(prior.weights > 0, prior.weights, 1.0), 0.0)
    moment = float(np.sum(mass * fvals)) if fvals is not None else None
    return MreSolution(post, float(beta), moment, math.exp(log_z) if log_z < 709 else math.inf, log_z)


def bayes_update(prior: GridPrior, observed) -> MreSolution:
    """Condition the prior on one observed value.

    Raises
    ------
    ZeroEvidence
        If the observation has zero probability under the prior.
    """
    logw = _log_base(prior, observed)
    if not np.any(np.isfinite(logw)):
        raise ZeroEvidence(f"observation {observed!r} has zero evidence under the prior")
    return _finish(prior, logw, 0.0)


def moment_map(logw: np.ndarray, fvals: np.ndarray, beta: float) -> tuple[float, float]:
    """Tilted mean and variance of ``f`` at ``beta``."""
    a = logw + beta * fvals
    a = a - np.max(a)
    p = np.exp(a)
    p /= p.sum()
    m = float(np.dot(p, fvals))
    var = float(np.dot(p, (fvals - m) ** 2))
    return m, var


def solve_beta(
    prior: GridPrior,
    observed,
    constraint: MomentConstraint,
    tol: float = 1e-12,
    max_iter: int = 200,
    max_doublings: int = 60,
) -> float:
    """Multiplier ``beta`` with tilted mean of ``f`` equal to the target.

    The tilted mean is strictly increasing in ``beta`` (its derivative is a
    variance), so the root is unique. The bracket grows by doubling from
    ``[-1, 1]``; the root is then polished by Newton steps safeguarded by
    bisection.

    Raises
    ------
    InfeasibleMoment
        Target not strictly inside the range of ``f`` on the support.
    BetaNotBracketed
        Doubling failed to bracket the root.
    MaxIterations
    """
    logw = _log_base(prior, observed)
    support = np.isfinite(logw)
    if not np.any(support):
        raise ZeroEvidence(f"observation {observed!r} has zero evidence under the prior")
    fvals = constraint.values(prior.theta)[support]
    logw = logw[support]
    target = float(constraint.target)
    fmin, fmax = float(fvals.min()), float(fvals.max())
    if not (fmin < target < fmax):
        raise InfeasibleMoment(
            f"target {target!r} not strictly inside ({fmin!r}, {fmax!r}) on the update support"
        )

    def g(b):
        m, v = moment_map(logw, fvals, b)
        return m - target, v

    r0, _ = g(0.0)
    if abs(r0) <= tol:
        return 0.0

    lo, hi = -1.0, 1.0
    rlo, _ = g(lo)
    rhi, _ = g(hi)
    for _ in range(max_doublings):
        if rlo <= 0.0 <= rhi:
            break
        if rhi < 0.0:
            lo, rlo = hi, rhi
            hi *= 2.0
            rhi, _ = g(hi)
        else:
            hi, rhi = lo, rlo
            lo *= 2.0
            rlo, _ = g(lo)
    else:
        raise BetaNotBracketed((lo, hi))
    if abs(rlo) <= tol:
        return lo
    if abs(rhi) <= tol:
        return hi

    b = 0.5 * (lo + hi)
    for _ in range(max_iter):
        r, v = g(b)
        if abs(r) <= tol:
            return b
        if r < 0:
            lo = b
        else:
            hi = b
        nb = b - r / v if v > 0 else None
        if nb is None or not (lo < nb < hi):
            nb = 0.5 * (lo + hi)
        if nb == b or hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(b)):
            # bracket exhausted at machine precision
            r, _ = g(nb)
            if abs(r) <= tol:
                return nb
            raise MaxIterations(f"bracket collapsed at beta={nb!r} with residual {r:.3e}")
        b = nb
    raise MaxIterations(f"no convergence in {max_iter} iterations (bracket [{lo}, {hi}])")


def mre_update(
    prior: GridPrior,
    observed,
    constraint: MomentConstraint | None = None,
    tol: float = 1e-12,
) -> MreSolution:
    """Update on data and, optionally, an expected-value constraint.

    Parameters
    ----------
    prior : GridPrior
    observed : str or int
        Observable label or likelihood column index.
    constraint : MomentConstraint, optional
        Without it this is exactly :func:`bayes_update`.
    tol : float
        Absolute tolerance on the achieved moment.

    Returns
    -------
    MreSolution
        Posterior proportional to ``exp(beta f) * prior * likelihood``.
    """
    if constraint is None:
        return bayes_update(prior, observed)
    beta = solve_beta(prior, observed, constraint, tol)
    logw = _log_base(prior, observed)
    fvals = constraint.values(prior.theta)
    tilted = logw + beta * np.where(np.isfinite(logw), fvals, 0.0)
    return _finish(prior, tilted, beta, fvals)


def load_grid_prior(path) -> GridPrior:
    """Read a grid prior from CSV with columns ``theta, weight, prior, lik_<x>...``.

    Raises
    ------
    ValueError
        Missing columns or malformed numbers, with the file path in the message.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        lik_cols = [c for c in cols if c.startswith("lik_")]
        missing = [c for c in ("theta", "weight", "prior") if c not in cols]
        if missing or not lik_cols:
            raise ValueError(f"{path}: need columns theta, weight, prior, lik_*; missing {missing or ['lik_*']}")
        rows = list(reader)
    try:
        theta = [float(r["theta"]) for r in rows]
        w = [float(r["weight"]) for r in rows]
        p = [float(r["prior"]) for r in rows]
        lik = [[float(r[c]) for c in lik_cols] for r in rows]
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: malformed number ({exc})") from exc
    return GridPrior(theta, w, p, lik, tuple(c[len("lik_"):] for c in lik_cols))


def gaussian_grid_prior(
    n: int = 101,
    mean: float = 0.0,
    sd: float = 1.0,
    half_width: float = 5.0,
    likelihoods: Sequence[Callable] = (),
) -> GridPrior:
    """Trapezoid-weighted Gaussian prior on ``mean +- half_width * sd``.

    ``likelihoods`` are callables ``theta -> P(x|theta)``, one per observable.
    """
    theta = np.linspace(mean - half_width * sd, mean + half_width * sd, n)
    w = np.full(n, theta[1] - theta[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    p = np.exp(-0.5 * ((theta - mean) / sd) ** 2)
    lik = np.column_stack([np.asarray(f(theta), float) for f in likelihoods]) if likelihoods else np.ones((n, 1))
    return GridPrior.normalized(theta, w, p, lik)
