"""Statistical volumes along geodesics and the complexity measures built on them.

``V(s)`` is the Fisher volume of the coordinate region swept by a geodesic
segment of length ``s``; the complexity ``C(tau)`` is its running average
and the entropy-like indicator ``S(tau) = log C(tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq, minimize_scalar

from .errors import DegenerateTrace, NonFiniteIntegrand, PathTooShort, WindowTooSmall
from .geodesic import GeodesicPath
from .manifold import StatisticalModel

FROZEN_RTOL = 1e-12
REGIMES = ("linear", "logarithmic", "exponential", "power-law")


# ---------------------------------------------------------------------------
# volumes


class VolumeEvaluator:
    """Vectorized ``V(s)`` for one model, path and start offset.

    Parameters
    ----------
    model : StatisticalModel
    path : GeodesicPath
    s0 : float
        Offset of the segment start from the path start.
    method : {"auto", "factorized", "box"}
        ``factorized`` multiplies the variation of each coordinate's
        antiderivative along the path (requires ``model.volume_factors``);
        ``box`` integrates ``sqrt(det g)`` over the coordinate box spanned by
        the segment endpoints. ``auto`` prefers ``factorized``.

    Notes
    -----
    A coordinate that stays constant along the whole path contributes a
    factor of one. Coordinates that reverse direction are handled by
    summing absolute increments between turning points; ``reversed`` records
    whether that happened.
    """

    def __init__(self, model: StatisticalModel, path: GeodesicPath, s0: float = 0.0, method: str = "auto", rtol: float = 1e-10):
        if method == "auto":
            method = "factorized" if model.volume_factors is not None else "box"
        if method == "factorized" and model.volume_factors is None:
            raise ValueError(f"model {model.name!r} has no factorized Fisher density")
        if method not in ("factorized", "box"):
            raise ValueError(f"unknown volume method {method!r}")
        self.model = model
        self.path = path
        self.method = method
        self.rtol = rtol
        t0, t1 = path.span
        self.start = t0 + float(s0)
        if not (t0 <= self.start < t1):
            raise PathTooShort(f"s0={s0} outside path range [{t0}, {t1}]")
        self.max_s = t1 - self.start
        spread = path.theta.max(axis=0) - path.theta.min(axis=0)
        scale = np.maximum(1.0, np.abs(path.theta).max(axis=0))
        self.frozen = spread <= FROZEN_RTOL * scale
        self.reversed = False
        if method == "factorized":
            self._prepare_turning_points()

    # -- factorized route -------------------------------------------------

    def _prepare_turning_points(self):
        p = self.path
        self._turns = []
        self._turn_cum = []
        for k in range(p.dim):
            if self.frozen[k]:
                self._turns.append(np.zeros(0))
                self._turn_cum.append(np.zeros(1))
                continue
            vk = p.velocity[:, k]
            idx = np.nonzero(np.sign(vk[:-1]) * np.sign(vk[1:]) < 0)[0]
            roots = []
            for i in idx:
                a, b = p.tau[i], p.tau[i + 1]
                roots.append(brentq(lambda t: p.velocity_at(t)[k], a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps))
            roots = np.array(roots)
            big_h = self.model.volume_factors[k].antiderivative
            knots = np.concatenate([[p.tau[0]], roots])
            hv = big_h(p.theta_at(knots)[:, k]) if knots.size else np.zeros(0)
            # cumulative variation at each turning point, measured from the path start
            cum = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(hv)))])
            self._turns.append(roots)
            self._turn_cum.append(cum)
            if roots.size:
                self.reversed = True

    def _cum_variation(self, k: int, t: np.ndarray, theta_k: np.ndarray) -> np.ndarray:
        """Variation of ``H_k`` along the path from its start to ``t``."""
        big_h = self.model.volume_factors[k].antiderivative
        roots = self._turns[k]
        cum = self._turn_cum[k]
        if roots.size == 0:
            return np.abs(big_h(theta_k) - big_h(self.path.theta[0, k]))
        j = np.searchsorted(roots, t, side="right")  # turning points passed
        knot_tau = np.concatenate([[self.path.tau[0]], roots])[j]
        knot_h = big_h(self.path.theta_at(knot_tau)[:, k])
        return cum[j] + np.abs(big_h(theta_k) - knot_h)

    def _factorized(self, s: np.ndarray) -> np.ndarray:
        a = np.full_like(s, self.start)
        b = self.start + s
        th_a = self.path.theta_at(a)
        th_b = self.path.theta_at(b)
        vol = np.ones_like(s)
        for k in range(self.path.dim):
            if self.frozen[k]:
                continue
            var = self._cum_variation(k, b, th_b[:, k]) - self._cum_variation(k, a, th_a[:, k])
            vol = vol * np.abs(var)
        return vol

    # -- box route ----------------------------------------------------------

    def _box_one(self, lo: np.ndarray, hi: np.ndarray) -> float:
        active = [k for k in range(lo.size) if not self.frozen[k]]
        if not active:
            return 1.0
        if any(hi[k] == lo[k] for k in active):
            return 0.0
        dom_lo = np.array(self.model.domain.lower)
        logmap = [dom_lo[k] == 0.0 and hi[k] / lo[k] > 2.0 for k in active]
        prev = None
        order = 8
        while True:
            x, w = leggauss(order)
            axes, weights = [], []
            for k, use_log in zip(active, logmap):
                if use_log:
                    ua, ub = math.log(lo[k]), math.log(hi[k])
                    u = 0.5 * (ub - ua) * x + 0.5 * (ub + ua)
                    t = np.exp(u)
                    axes.append(t)
                    weights.append(0.5 * (ub - ua) * w * t)
                else:
                    t = 0.5 * (hi[k] - lo[k]) * x + 0.5 * (hi[k] + lo[k])
                    axes.append(t)
                    weights.append(0.5 * (hi[k] - lo[k]) * w)
            grids = np.meshgrid(*axes, indexing="ij")
            wgrid = np.ones_like(grids[0])
            for d, wk in enumerate(weights):
                shape = [1] * len(active)
                shape[d] = -1
                wgrid = wgrid * wk.reshape(shape)
            pts = np.tile(lo, (grids[0].size, 1))
            for d, k in enumerate(active):
                pts[:, k] = grids[d].ravel()
            dens = np.array([math.sqrt(max(np.linalg.det(self.model.metric(pt)), 0.0)) for pt in pts])
            val = float(np.sum(dens * wgrid.ravel()))
            if prev is not None and abs(val - prev) <= self.rtol * abs(val):
                return val
            if order >= 64 or order ** len(active) > 200_000:
                return val
            prev = val
            order *= 2

    def _box(self, s: np.ndarray) -> np.ndarray:
        th_a = self.path.theta_at(self.start)
        th_b = self.path.theta_at(self.start + s)
        out = np.empty_like(s)
        for i in range(s.size):
            lo = np.minimum(th_a, th_b[i])
            hi = np.maximum(th_a, th_b[i])
            out[i] = self._box_one(lo, hi)
        return out

    def __call__(self, s) -> np.ndarray:
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s < 0):
            raise ValueError("segment length must be non-negative")
        if np.any(s > self.max_s * (1 + 1e-12)):
            raise PathTooShort(f"segment length {s.max()} exceeds available path length {self.max_s}")
        s = np.minimum(s, self.max_s)
        out = self._factorized(s) if self.method == "factorized" else self._box(s)
        if not np.all(np.isfinite(out)):
            raise NonFiniteIntegrand(f"non-finite volume at s={s[~np.isfinite(out)][0]}")
        return out[0] if scalar else out


def volume_at(model: StatisticalModel, path: GeodesicPath, s: float, s0: float = 0.0, method: str = "auto") -> float:
    """Fisher volume swept by the geodesic segment ``[s0, s0 + s]``.

    Raises
    ------
    PathTooShort
        The segment runs past the end of the path.
    NonFiniteIntegrand
    """
    return float(VolumeEvaluator(model, path, s0, method)(float(s)))


# ---------------------------------------------------------------------------
# complexity traces


@dataclass(frozen=True)
class ComplexityTrace:
    """Per-``tau`` volume, complexity ``C`` and its logarithm ``S``."""

    tau: np.ndarray
    volume: np.ndarray
    igc: np.ndarray
    ige: np.ndarray
    model_name: str = ""
    s0: float = 0.0
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("tau", "volume", "igc", "ige"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.tau.size > 1 and np.any(np.diff(self.tau) <= 0):
            raise ValueError("tau must be strictly increasing")

    def __len__(self) -> int:
        return self.tau.size

    def series(self, quantity: str) -> np.ndarray:
        try:
            return {"volume": self.volume, "igc": self.igc, "ige": self.ige}[quantity]
        except KeyError:
            raise ValueError(f"unknown quantity {quantity!r}; use volume, igc or ige") from None

    @classmethod
    def from_igc(cls, tau, volume, igc, **kw) -> "ComplexityTrace":
        igc = np.asarray(igc, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ige = np.where(igc > 0, np.log(np.where(igc > 0, igc, 1.0)), np.nan)
        return cls(tau, volume, igc, ige, **kw)


_GL_X, _GL_W = leggauss(8)


def _gl(fn, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """8-point Gauss-Legendre integrals over many panels in one call."""
    half = 0.5 * (b - a)
    x = half[:, None] * _GL_X + (0.5 * (b + a))[:, None]
    return half * (fn(x.ravel()).reshape(x.shape) @ _GL_W)


def _panel_integrals(fn, a: np.ndarray, b: np.ndarray, rtol: float, max_depth: int) -> np.ndarray:
    """Adaptive integrals over consecutive panels ``[a_i, b_i]`` starting at 0.

    Every panel still unconverged is split in the same vectorized pass. A
    panel is accepted once the bisected estimate moves by less than
    ``rtol`` times the larger of its own value and its share
    ``(b - a) / b`` of the running integral up to ``b``; the second term
    keeps roundoff in a nearly vanishing integrand from forcing endless
    refinement while preserving the relative accuracy of ``C(tau)``.
    Panels whose error estimate stops shrinking under bisection (at least a
    factor 4 is expected from an 8-point rule) are taken to be at the
    roundoff level of ``fn`` and accepted as well.
    """
    out = np.zeros(a.size)
    owner = np.arange(a.size)
    whole = _gl(fn, a, b)
    running = np.abs(np.cumsum(whole))
    floor = running * (b - a) / np.maximum(b, np.finfo(float).tiny)
    parent_err = np.full(a.size, np.inf)
    for depth in range(max_depth + 1):
        m = 0.5 * (a + b)
        halves = _gl(fn, np.concatenate([a, m]), np.concatenate([m, b]))
        left, right = halves[: a.size], halves[a.size :]
        both = left + right
        err = np.abs(both - whole)
        done = err <= rtol * np.maximum(np.abs(both), np.maximum(floor, np.finfo(float).tiny))
        done |= err > 0.25 * parent_err
        if depth == max_depth:
            done[:] = True
        np.add.at(out, owner[done], both[done])
        keep = ~done
        if not keep.any():
            break
        a = np.concatenate([a[keep], m[keep]])
        b = np.concatenate([m[keep], b[keep]])
        whole = np.concatenate([left[keep], right[keep]])
        floor = np.concatenate([floor[keep], floor[keep]]) * 0.5
        parent_err = np.concatenate([err[keep], err[keep]]) * 0.5
        owner = np.concatenate([owner[keep], owner[keep]])
    return out


def running_average(volume_fn: Callable, tau_grid, rtol: float = 1e-10, max_depth: int = 30, breakpoints=None) -> np.ndarray:
    """``(1/tau) * integral_0^tau V(s) ds`` at each grid point.

    Parameters
    ----------
    volume_fn : callable
        Vectorized ``V(s)``.
    tau_grid : array_like
        Positive, strictly increasing.
    rtol : float
        Relative tolerance per panel.
    breakpoints : array_like, optional
        Points where ``V`` may lose smoothness (for example the nodes of an
        interpolated path); panels never straddle them.

    Notes
    -----
    Panels use adaptive 8-point Gauss-Legendre rules, so a polynomial ``V``
    of degree up to 15 is integrated exactly.
    """
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or tau.size == 0:
        raise ValueError("tau grid must be a non-empty 1-D array")
    if tau[0] <= 0 or np.any(np.diff(tau) <= 0):
        raise ValueError("tau grid must be positive and strictly increasing")
    knots = np.concatenate([[0.0], tau])
    if breakpoints is not None:
        bp = np.asarray(breakpoints, dtype=float)
        knots = np.union1d(knots, bp[(bp > 0) & (bp < tau[-1])])
    pieces = _panel_integrals(volume_fn, knots[:-1], knots[1:], rtol, max_depth)
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    return cum[np.searchsorted(knots, tau)] / tau


def trace_from_volume(volume_fn: Callable, tau_grid, rtol: float = 1e-10, breakpoints=None, **kw) -> ComplexityTrace:
    """Build a trace from any vectorized volume function ``V(s)``."""
    tau = np.asarray(tau_grid, dtype=float)
    c = running_average(volume_fn, tau, rtol, breakpoints=breakpoints)
    return ComplexityTrace.from_igc(tau, volume_fn(tau), c, **kw)


def igc(model: StatisticalModel, path: GeodesicPath, tau_grid, s0: float = 0.0, method: str = "auto", rtol: float = 1e-10) -> ComplexityTrace:
    """Complexity trace of ``model`` along ``path``.

    Raises
    ------
    PathTooShort
        ``s0 + max(tau_grid)`` beyond the end of the path.
    NonFiniteIntegrand
    """
    ev = VolumeEvaluator(model, path, s0, method)
    tau = np.asarray(tau_grid, dtype=float)
    if tau.size and tau.max() > ev.max_s * (1 + 1e-12):
        raise PathTooShort(f"tau grid reaches {tau.max()} but only {ev.max_s} of path is available")
    tr = trace_from_volume(ev, tau, rtol, breakpoints=path.tau - ev.start, model_name=model.name, s0=s0, flags={"orientation_reversal": ev.reversed, "volume_method": ev.method})
    return tr


# ---------------------------------------------------------------------------
# growth analysis


def _tail(n: int, fraction: float) -> slice:
    if not 0 < fraction <= 1:
        raise ValueError("tail fraction must lie in (0, 1]")
    k = int(math.ceil(fraction * n))
    return slice(n - k, n)


def _slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    a = float(np.dot(dx, y - ym) / np.dot(dx, dx))
    return a, float(ym - a * xm)


def ks_analogue(trace: ComplexityTrace, window: float = 0.5) -> float:
    """Least-squares slope of ``S(tau)`` over the tail window.

    Raises
    ------
    WindowTooSmall
        Fewer than 10 samples in the window.
    """
    sl = _tail(len(trace), window)
    tau = trace.tau[sl]
    s = trace.ige[sl]
    if tau.size < 10:
        raise WindowTooSmall(f"tail window holds {tau.size} samples; at least 10 required")
    ok = np.isfinite(s)
    if ok.sum() < 10:
        raise WindowTooSmall("fewer than 10 finite IGE values in the tail window")
    return _slope(tau[ok], s[ok])[0]


@dataclass(frozen=True)
class GrowthFit:
    """Outcome of regime classification.

    Attributes
    ----------
    regime : str
        One of ``linear``, ``logarithmic``, ``exponential``, ``power-law`` or
        ``ambiguous``.
    coefficients : dict
        Coefficients of the chosen regime (or of the best fit when ambiguous).
    r2 : float
    window : tuple of float
    candidates : dict
        ``regime -> (coefficients, r2)`` for every regime that could be fitted.
    quantity : str
    note : str
    """

    regime: str
    coefficients: dict
    r2: float
    window: tuple
    candidates: dict
    quantity: str = ""
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "coefficients": dict(self.coefficients),
            "r2": self.r2,
            "window": list(self.window),
            "quantity": self.quantity,
            "note": self.note,
            "candidates": {k: {"coefficients": dict(c), "r2": r} for k, (c, r) in self.candidates.items()},
        }


def _r2(y: np.ndarray, fit: np.ndarray) -> float:
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def _fit_regimes(tau: np.ndarray, y: np.ndarray) -> dict:
    out = {}
    a, b = _slope(tau, y)
    out["linear"] = ({"slope": a, "intercept": b}, _r2(y, a * tau + b))
    if np.all(tau > 0):
        lt = np.log(tau)
        a, b = _slope(lt, y)
        out["logarithmic"] = ({"coefficient": a, "intercept": b}, _r2(y, a * lt + b))
    if np.all(y > 0):
        ly = np.log(y)
        a, b = _slope(tau, ly)
        out["exponential"] = ({"rate": a, "log_prefactor": b}, _r2(ly, a * tau + b))
        if np.all(tau > 0):
            a, b = _slope(lt, ly)
            out["power-law"] = ({"exponent": a, "log_prefactor": b}, _r2(ly, a * lt + b))
    return out


def _predict(regime: str, c: dict, tau: np.ndarray) -> np.ndarray:
    """Back-transformed prediction of a fitted regime on the original scale."""
    if regime == "linear":
        return c["slope"] * tau + c["intercept"]
    if regime == "logarithmic":
        return c["coefficient"] * np.log(tau) + c["intercept"]
    if regime == "exponential":
        return np.exp(c["rate"] * tau + c["log_prefactor"])
    return np.exp(c["log_prefactor"]) * tau ** c["exponent"]


def offset_power_exponent(tau: np.ndarray, y: np.ndarray, bounds=(-4.0, 4.0)) -> float:
    """Exponent ``p`` of the least-squares fit ``y = a * tau**p + b``."""
    t = tau / tau.max()

    def sse(p):
        x = np.log(t) if abs(p) < 1e-12 else t**p
        a, b = _slope(x, y) if np.ptp(x) > 0 else (0.0, y.mean())
        return float(np.sum((y - a * x - b) ** 2))

    res = minimize_scalar(sse, bounds=bounds, method="bounded", options={"xatol": 1e-8})
    return float(res.x)


LINEAR_EXPONENT_BAND = 0.1


def classify_series(tau, y, tail: float = 0.5, margin: float = 0.001, quantity: str = "") -> GrowthFit:
    """Pick the growth regime that best explains ``y(tau)`` over the tail.

    The four candidate regressions are linear (``y`` vs ``tau``),
    logarithmic (``y`` vs ``log tau``), exponential (``log y`` vs ``tau``)
    and power-law (``log y`` vs ``log tau``). The highest R-squared wins if
    it beats the runner-up by ``margin``. When linear and power-law are
    within the margin, an offset power fit ``a tau**p + b`` settles it:
    ``|p - 1| <= 0.1`` means linear. Other near-ties go to the candidate
    whose back-transformed prediction has the best R-squared on the
    original scale; ``ambiguous`` only if that also ties.

    Raises
    ------
    DegenerateTrace
        Fewer than 20 tail samples, a constant series, or non-finite data.
    """
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(y, dtype=float)
    sl = _tail(tau.size, tail)
    tau, y = tau[sl], y[sl]
    if tau.size < 20:
        raise DegenerateTrace(f"tail window holds {tau.size} samples; at least 20 required")
    if not (np.all(np.isfinite(tau)) and np.all(np.isfinite(y))):
        raise DegenerateTrace("non-finite values in the tail window")
    if np.ptp(y) == 0.0:
        raise DegenerateTrace("series is constant over the tail window")
    fits = _fit_regimes(tau, y)
    ranked = sorted(fits.items(), key=lambda kv: kv[1][1], reverse=True)
    window = (float(tau[0]), float(tau[-1]))
    best, (coef, r2) = ranked[0]
    if len(ranked) == 1 or r2 - ranked[1][1][1] >= margin:
        return GrowthFit(best, coef, r2, window, fits, quantity)
    pair = {best, ranked[1][0]}
    if pair == {"linear", "power-law"}:
        p = offset_power_exponent(tau, y)
        pick = "linear" if abs(p - 1.0) <= LINEAR_EXPONENT_BAND else "power-law"
        c, r = fits[pick]
        return GrowthFit(pick, c, r, window, fits, quantity, note=f"offset power exponent {p:.6g} settled a near-tie")
    contenders = [name for name, (_, r) in ranked if r2 - r < margin]
    raw = {name: _r2(y, _predict(name, fits[name][0], tau)) for name in contenders}
    order = sorted(raw, key=raw.get, reverse=True)
    if raw[order[0]] - raw[order[1]] > 1e-9:
        pick = order[0]
        c, r = fits[pick]
        return GrowthFit(pick, c, r, window, fits, quantity, note=f"original-scale R2 settled a near-tie among {', '.join(contenders)}")
    return GrowthFit(
        "ambiguous", coef, r2, window, fits, quantity,
        note=f"{', '.join(contenders)} within R2 margin {margin}",
    )


def classify_growth(trace: ComplexityTrace, tail: float = 0.5, quantity: str = "ige", margin: float = 0.001) -> GrowthFit:
    """Classify the growth of one trace quantity (``volume``, ``igc`` or ``ige``)."""
    return classify_series(trace.tau, trace.series(quantity), tail, margin, quantity)
