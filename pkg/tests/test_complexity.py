import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from igac.catalog import build
from igac.complexity import (
    ComplexityTrace,
    VolumeEvaluator,
    classify_series,
    igc,
    ks_analogue,
    running_average,
    trace_from_volume,
    volume_at,
)
from igac.errors import DegenerateTrace, PathTooShort, WindowTooSmall
from igac.geodesic import integrate_ivp

SQRT2 = math.sqrt(2.0)


def test_unit_box_volume():
    flat = build("euclidean", n=2)
    path = integrate_ivp(flat, [0.0, 0.0], [1.0, 1.0], 2.0)
    assert volume_at(flat, path, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert volume_at(flat, path, 1.0, method="box") == pytest.approx(1.0, abs=1e-12)


def test_spin_volume_nested_integrals():
    spin = build("spin_integrable")
    path = integrate_ivp(spin, [1.0, 1.0], [1.0, 2.0], 3.0)
    assert volume_at(spin, path, 2.0) == pytest.approx(8.0, rel=1e-8)


def test_radial_volume_with_frozen_mean():
    # mu never moves, so the whole density sqrt(2)/sigma^2 goes to the sigma factor
    g = build("uncorrelated_gaussian", l=1)
    path = integrate_ivp(g, [0.0, 1.0], [0.0, 1.0], 2.0)
    ev = VolumeEvaluator(g, path)
    assert ev.frozen.tolist() == [True, False]
    assert ev(np.array([1.0]))[0] == pytest.approx(SQRT2 * (1 - math.exp(-1.0)), rel=1e-9)


def test_box_and_factorized_agree_on_monotone_segment():
    g = build("uncorrelated_gaussian", l=1)
    path = integrate_ivp(g, [0.0, 1.0], [1.0, 0.5], 0.4)
    s = np.array([0.1, 0.2, 0.3])
    fac = VolumeEvaluator(g, path, method="factorized")(s)
    box = VolumeEvaluator(g, path, method="box")(s)
    np.testing.assert_allclose(fac, box, rtol=1e-8)


def test_orientation_reversal_flagged():
    g = build("uncorrelated_gaussian", l=1)
    # sigma rises to the top of the semicircle and comes back down
    path = integrate_ivp(g, [0.0, 1.0], [1.0, 0.5], 4.0)
    trace = igc(g, path, np.linspace(0.5, 4.0, 30))
    assert trace.flags["orientation_reversal"]
    assert np.all(np.diff(trace.volume) >= -1e-12)


def test_path_too_short():
    g = build("uncorrelated_gaussian", l=1)
    path = integrate_ivp(g, [0.0, 1.0], [0.0, 1.0], 1.0)
    with pytest.raises(PathTooShort):
        VolumeEvaluator(g, path, s0=2.0)
    with pytest.raises(PathTooShort):
        igc(g, path, [0.5, 1.5])


def test_constant_volume_average():
    c = running_average(lambda s: np.full_like(s, 5.0), np.linspace(0.1, 10, 50))
    assert np.all(np.abs(c - 5.0) <= 1e-12)


def test_linear_volume_average():
    tau = np.linspace(0.5, 20, 40)
    c = running_average(lambda s: SQRT2 * s, tau)
    np.testing.assert_allclose(c, SQRT2 * tau / 2, rtol=1e-12)


def test_cubic_volume_integrated_exactly():
    tau = np.linspace(0.5, 10, 20)
    c = running_average(lambda s: 1 + s - 2 * s**2 + 3 * s**3, tau)
    exact = 1 + tau / 2 - 2 * tau**2 / 3 + 3 * tau**3 / 4
    np.testing.assert_allclose(c, exact, rtol=1e-12)


def test_spin_closed_form_trace():
    tau = np.linspace(0.5, 20, 40)
    tr = trace_from_volume(lambda s: 2 * s**2, tau)
    np.testing.assert_allclose(tr.igc, 2 * tau**2 / 3, rtol=1e-12)
    np.testing.assert_allclose(tr.ige, 2 * np.log(tau) + math.log(2 / 3), rtol=0, atol=1e-12)


def test_spin_igc_matches_closed_form():
    spin = build("spin_integrable")
    path = integrate_ivp(spin, [1.0, 1.0], [1.0, 2.0], 10.0)
    tau = np.linspace(0.5, 10, 20)
    trace = igc(spin, path, tau)
    np.testing.assert_allclose(trace.igc, 2 * tau**2 / 3, rtol=1e-7)


def _synthetic(tau, ige):
    return ComplexityTrace(tau, np.exp(ige), np.exp(ige), ige)


def test_ks_of_affine_entropy():
    tau = np.linspace(0, 10, 100)
    assert abs(ks_analogue(_synthetic(tau, 3 * tau + 2)) - 3.0) <= 1e-10


def test_ks_of_log_entropy_vanishes():
    tau = np.linspace(50, 100, 200)
    assert ks_analogue(_synthetic(tau, 2 * np.log(tau) + 1)) <= 0.05


def test_ks_window_too_small():
    tau = np.linspace(1, 2, 15)
    with pytest.raises(WindowTooSmall):
        ks_analogue(_synthetic(tau, tau), window=0.5)


def test_classify_power_law():
    tau = np.linspace(10, 100, 200)
    fit = classify_series(tau, 7 / tau)
    assert fit.regime == "power-law"
    assert abs(fit.coefficients["exponent"] + 1.0) <= 0.01


def test_classify_logarithmic():
    tau = np.linspace(1, 100, 300)
    fit = classify_series(tau, 2 * np.log(tau) + 1)
    assert fit.regime == "logarithmic"
    assert abs(fit.coefficients["coefficient"] - 2.0) <= 0.02


def test_classify_linear_and_exponential():
    tau = np.linspace(1, 20, 200)
    lin = classify_series(tau, 3 * tau + 2)
    assert lin.regime == "linear" and lin.coefficients["slope"] == pytest.approx(3.0, rel=1e-10)
    exp = classify_series(tau, 0.5 * np.exp(0.7 * tau))
    assert exp.regime == "exponential" and exp.coefficients["rate"] == pytest.approx(0.7, rel=1e-10)


def test_classify_degenerate():
    with pytest.raises(DegenerateTrace):
        classify_series(np.arange(10.0), np.arange(10.0))
    with pytest.raises(DegenerateTrace):
        classify_series(np.arange(1.0, 51.0), np.full(50, 4.0))
    y = np.arange(1.0, 51.0)
    y[30] = np.nan
    with pytest.raises(DegenerateTrace):
        classify_series(np.arange(1.0, 51.0), y)


def test_trace_rejects_unsorted_tau():
    with pytest.raises(ValueError):
        ComplexityTrace([1.0, 0.5], [1, 1], [1, 1], [0, 0])


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.5, 2.0))
def test_volume_monotone_and_average_bounded(vm, vs, sigma):
    if abs(vm) + abs(vs) < 1e-2:
        vm = 0.5
    g = build("uncorrelated_gaussian", l=1)
    path = integrate_ivp(g, [0.0, sigma], [vm, vs], 3.0)
    if path.truncated:
        return
    tau = np.linspace(0.2, 3.0, 15)
    tr = igc(g, path, tau)
    assert np.all(np.diff(tr.volume) >= -1e-12 * tr.volume[-1])
    # a running average of a nondecreasing function never exceeds its endpoint
    assert np.all(tr.igc <= tr.volume * (1 + 1e-10))
    pos = tr.igc > 0
    np.testing.assert_allclose(tr.ige[pos], np.log(tr.igc[pos]), rtol=0, atol=0)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.5, 4))
def test_running_average_linear_in_volume(a, b, scale):
    tau = np.linspace(0.5, 5, 12)
    f = lambda s: np.sin(s) + 2  # noqa: E731
    left = running_average(lambda s: a * f(s) + b * s**2, tau)
    right = a * running_average(f, tau) + b * tau**2 / 3
    np.testing.assert_allclose(left, right, rtol=1e-9, atol=1e-9 * (abs(a) + abs(b) * 25))
    # rescaling the volume rescales the complexity
    np.testing.assert_allclose(running_average(lambda s: scale * f(s), tau), scale * running_average(f, tau), rtol=1e-12)
