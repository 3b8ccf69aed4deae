"""Geodesic flows on statistical manifolds.

Initial-value problems are integrated with an adaptive Dormand-Prince 5(4)
pair; two-point problems are solved by shooting on the initial velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShootingDiverged, StepUnderflow
from .manifold import StatisticalModel, metric_gradient_fd

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class _OutsideDomain(Exception):
    pass


@dataclass
class IntegratorStats:
    steps: int = 0
    rejected: int = 0
    rhs_evals: int = 0
    tol: float = 0.0


@dataclass(frozen=True)
class GeodesicPath:
    """Sampled geodesic ``(tau_i, theta_i, v_i)`` with dense output.

    Attributes
    ----------
    tau : ndarray, shape (N,)
    theta, velocity, acceleration : ndarray, shape (N, n)
    truncated : bool
        True when integration stopped early at the domain boundary.
    stats : IntegratorStats
    model_name : str
    """

    tau: np.ndarray
    theta: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    truncated: bool = False
    stats: IntegratorStats = field(default_factory=IntegratorStats)
    model_name: str = ""

    @property
    def dim(self) -> int:
        return self.theta.shape[1]

    @property
    def span(self) -> tuple[float, float]:
        return float(self.tau[0]), float(self.tau[-1])

    def __len__(self) -> int:
        return self.tau.size

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.span
        if np.any(t < lo - 1e-12 * max(1.0, abs(lo))) or np.any(t > hi + 1e-12 * max(1.0, abs(hi))):
            raise ValueError(f"tau outside path range [{lo}, {hi}]")
        t = np.clip(t, lo, hi)
        k = np.clip(np.searchsorted(self.tau, t, side="right") - 1, 0, self.tau.size - 2)
        h = self.tau[k + 1] - self.tau[k]
        s = (t - self.tau[k]) / h
        return t, k, h, s

    @staticmethod
    def _hermite(y0, y1, d0, d1, h, s):
        s = s[..., None]
        h = h[..., None]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1

    @staticmethod
    def _hermite_deriv(y0, y1, d0, d1, h, s):
        s = s[..., None]
        h = h[..., None]
        g00 = (6 * s**2 - 6 * s) / h
        g10 = 3 * s**2 - 4 * s + 1
        g01 = (-6 * s**2 + 6 * s) / h
        g11 = 3 * s**2 - 2 * s
        return g00 * y0 + g10 * d0 + g01 * y1 + g11 * d1

    def theta_at(self, t) -> np.ndarray:
        """Coordinates at ``t`` (scalar or array) by cubic Hermite interpolation."""
        scalar = np.ndim(t) == 0
        t, k, h, s = self._locate(np.atleast_1d(t))
        out = self._hermite(self.theta[k], self.theta[k + 1], self.velocity[k], self.velocity[k + 1], h, s)
        return out[0] if scalar else out

    def velocity_at(self, t) -> np.ndarray:
        """Velocity at ``t`` by cubic Hermite interpolation of the velocity samples."""
        scalar = np.ndim(t) == 0
        t, k, h, s = self._locate(np.atleast_1d(t))
        out = self._hermite(self.velocity[k], self.velocity[k + 1], self.acceleration[k], self.acceleration[k + 1], h, s)
        return out[0] if scalar else out

    def velocity_hermite_derivative(self, t) -> np.ndarray:
        """Derivative of the interpolated coordinates (consistent with :meth:`theta_at`)."""
        t, k, h, s = self._locate(np.atleast_1d(t))
        return self._hermite_deriv(self.theta[k], self.theta[k + 1], self.velocity[k], self.velocity[k + 1], h, s)


@dataclass(frozen=True)
class BoundaryProblem:
    """Endpoints to connect and the affine span between them."""

    theta_initial: tuple
    theta_final: tuple
    span: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.theta_initial, float)
        b = np.asarray(self.theta_final, float)
        if a.shape != b.shape:
            raise ValueError("endpoints have different dimensions")
        if np.array_equal(a, b):
            raise ValueError("endpoints must be distinct")
        if not self.span > 0:
            raise ValueError("span must be positive")


def geodesic_acceleration(model: StatisticalModel, theta: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``-Gamma^k_ij v^i v^j`` (or the model's own acceleration rule)."""
    if model.acceleration is not None:
        return np.asarray(model.acceleration(theta, v), dtype=float)
    g = model.metric(theta)
    if model.has_analytic_gradient:
        dg = model.metric_rule.gradient(theta)
    else:
        dg = metric_gradient_fd(model, theta)
    n = v.size
    flat = dg.reshape(n, n * n)
    # w_l = v^i v^j (d_i g_jl - d_l g_ij / 2)
    w = v @ (v @ flat).reshape(n, n) - 0.5 * (flat @ np.outer(v, v).ravel())
    if n == 1:
        return -w / g[0, 0]
    return -np.linalg.solve(g, w)


def _initial_step(f, t0, y0, f0, direction, rtol, atol, order=5):
    # components that start at zero get a floor so the heuristic stays finite
    mag = np.abs(y0)
    floor = 1e-3 * mag.max() if mag.max() > 0 else 1.0
    scale = atol + rtol * np.maximum(mag, floor)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    try:
        f1 = f(t0 + direction * h0, y1)
        d2 = np.max(np.abs(f1 - f0) / scale) / h0
    except _OutsideDomain:
        return h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / order)
    return min(100 * h0, h1)


def integrate_ivp(
    model: StatisticalModel,
    theta0,
    v0,
    tau_max: float,
    tol: float = 1e-10,
    atol: float = 0.0,
    t_eval=None,
    max_steps: int = 1_000_000,
    min_step: float | None = None,
) -> GeodesicPath:
    """Integrate the geodesic equation from ``(theta0, v0)``.

    Parameters
    ----------
    model : StatisticalModel
    theta0, v0 : array_like
        Initial point (interior) and velocity (nonzero).
    tau_max : float
        Final affine parameter; a negative value integrates backward.
    tol : float
        Relative local error tolerance per step.
    atol : float
        Absolute floor for the error scale. The default of zero gives pure
        relative control, which keeps exponentially shrinking widths accurate.
    t_eval : array_like, optional
        Parameters the integrator must land on exactly; they appear among
        the samples.
    max_steps : int
    min_step : float, optional
        Smallest allowed step before :class:`StepUnderflow`.

    Returns
    -------
    GeodesicPath
        ``truncated`` is set when the trajectory reaches the domain boundary.

    Raises
    ------
    StepUnderflow
    """
    theta0 = model.domain.check(theta0)
    v0 = np.asarray(v0, dtype=float)
    n = theta0.size
    if v0.shape != (n,):
        raise ValueError(f"velocity must have {n} components")
    if not np.any(v0 != 0.0):
        raise ValueError("initial velocity must be nonzero")
    if tau_max == 0 or not math.isfinite(tau_max):
        raise ValueError("tau_max must be finite and nonzero")
    if not tol > 0:
        raise ValueError("tol must be positive")
    direction = 1.0 if tau_max > 0 else -1.0
    lower = np.array(model.domain.lower) + model.domain.margin
    upper = np.array(model.domain.upper) - model.domain.margin
    stats = IntegratorStats(tol=tol)

    def f(t, y):
        th = y[:n]
        if not ((th > lower) & (th < upper)).all() or not np.isfinite(y).all():
            raise _OutsideDomain
        stats.rhs_evals += 1
        a = geodesic_acceleration(model, th, y[n:])
        if not np.isfinite(a).all():
            raise _OutsideDomain
        return np.concatenate([y[n:], a])

    stops = []
    if t_eval is not None:
        te = np.sort(np.asarray(t_eval, dtype=float))
        if direction < 0:
            te = te[::-1]
        stops = [t for t in te if direction * t > 0 and direction * t < direction * tau_max]
    stops.append(float(tau_max))
    stop_idx = 0

    t = 0.0
    y = np.concatenate([theta0, v0])
    fy = f(t, y)
    ts, ys, fs = [t], [y.copy()], [fy.copy()]
    h = _initial_step(f, t, y, fy, direction, tol, atol)
    if min_step is None:
        min_step = 1e-14 * max(1.0, abs(tau_max))
    truncated = False
    domain_rejects = 0

    while stop_idx < len(stops):
        if stats.steps >= max_steps:
            raise StepUnderflow(f"exceeded {max_steps} steps at tau={t}")
        target = stops[stop_idx]
        remaining = direction * (target - t)
        land = h >= remaining
        step = remaining if land else h
        if step < min_step and not land:
            if domain_rejects:
                truncated = True
                break
            raise StepUnderflow(f"step {step:.3e} below minimum at tau={t}")
        try:
            k = [fy]
            for s in range(1, 7):
                yi = y + direction * step * np.dot(_A[s], k[:s]) if s else y
                k.append(f(t + direction * _C[s] * step, yi))
            k = np.array(k)
            y_new = y + direction * step * (_B5 @ k)
            err_vec = direction * step * (_E @ k)
            scale = np.maximum(atol + tol * np.maximum(np.abs(y), np.abs(y_new)), np.finfo(float).tiny)
            err = float(np.max(np.abs(err_vec) / scale))
            if not math.isfinite(err):
                raise _OutsideDomain
        except _OutsideDomain:
            stats.rejected += 1
            domain_rejects += 1
            h = 0.25 * step
            if h < min_step:
                truncated = True
                break
            continue
        if err <= 1.0:
            t = target if land else t + direction * step
            y = y_new
            fy = k[6]  # FSAL: last stage is f at the new point
            ts.append(t)
            ys.append(y.copy())
            fs.append(fy.copy())
            stats.steps += 1
            domain_rejects = 0
            if land:
                stop_idx += 1
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = step * fac if not land else max(h, step)
        else:
            stats.rejected += 1
            h = step * max(0.2, 0.9 * err ** -0.2)

    ts = np.array(ts)
    ys = np.array(ys)
    fs = np.array(fs)
    if direction < 0:
        # store with tau increasing
        ts, ys, fs = ts[::-1], ys[::-1], fs[::-1]
    for arr in (ts, ys, fs):
        arr.setflags(write=False)
    return GeodesicPath(
        tau=ts,
        theta=ys[:, :n],
        velocity=ys[:, n:],
        acceleration=fs[:, n:],
        truncated=truncated,
        stats=stats,
        model_name=model.name,
    )


def squared_speed(model: StatisticalModel, path: GeodesicPath, i: int) -> float:
    """``g(theta_i)(v_i, v_i)`` at sample ``i``."""
    th = path.theta[i]
    v = path.velocity[i]
    return float(v @ model.metric(th) @ v)


def speed_drift(model: StatisticalModel, path: GeodesicPath) -> float:
    """Largest relative deviation of the squared speed from its initial value."""
    s = np.array([squared_speed(model, path, i) for i in range(len(path))])
    return float(np.max(np.abs(s - s[0])) / abs(s[0]))


def solve_bvp(
    model: StatisticalModel,
    bp: BoundaryProblem,
    tol: float = 1e-10,
    max_iter: int = 50,
    v_guess=None,
) -> GeodesicPath:
    """Geodesic through two points by damped Newton shooting.

    The unknown is the initial velocity; the residual is the endpoint miss
    after integrating over ``bp.span``. The Jacobian is approximated by
    forward differences and the Newton step is halved until the residual
    norm decreases.

    Raises
    ------
    ShootingDiverged
        Residual not below ``tol`` after ``max_iter`` iterations; carries the
        best residual reached.
    """
    a = model.domain.check(bp.theta_initial)
    b = model.domain.check(bp.theta_final)
    span = float(bp.span)
    n = a.size
    int_tol = min(1e-12, 1e-2 * tol)

    def endpoint(v):
        if not np.any(v != 0):
            return None
        p = integrate_ivp(model, a, v, span, tol=int_tol)
        if p.truncated:
            return None
        return p.theta[-1]

    def residual(v):
        e = endpoint(v)
        return None if e is None else e - b

    v = np.asarray(v_guess, float) if v_guess is not None else (b - a) / span
    r = residual(v)
    if r is None:
        raise ShootingDiverged(math.inf, 0)
    best = float(np.max(np.abs(r)))
    for it in range(1, max_iter + 1):
        if best <= tol:
            break
        jac = np.empty((n, n))
        for k in range(n):
            dv = 1e-7 * max(1.0, abs(v[k]))
            vp = v.copy()
            vp[k] += dv
            rp = residual(vp)
            if rp is None:
                vp[k] -= 2 * dv
                rp = residual(vp)
                if rp is None:
                    raise ShootingDiverged(best, it)
                dv = -dv
            jac[:, k] = (rp - r) / dv
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise ShootingDiverged(best, it) from None
        lam = 1.0
        improved = False
        for _ in range(30):
            vt = v + lam * step
            rt = residual(vt)
            if rt is not None:
                nt = float(np.max(np.abs(rt)))
                if nt < best:
                    v, r, best = vt, rt, nt
                    improved = True
                    break
            lam *= 0.5
        if not improved:
            raise ShootingDiverged(best, it)
    if best > tol:
        raise ShootingDiverged(best, max_iter)
    return integrate_ivp(model, a, v, span, tol=int_tol)
