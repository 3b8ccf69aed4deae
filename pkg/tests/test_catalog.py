import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from igac.catalog import (
    CATALOG,
    RATIO_FAMILIES,
    ScatteringParams,
    build,
    embedded_delta,
    embedded_ige_closed,
    f_micro,
    list_models,
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
    scattering_ige_shift,
)
from igac.errors import ParamOutOfRange, RegimeWarning


def test_no_correlation_limits():
    assert ratio_bivariate_strong(0) == 1.0
    assert ratio_trivariate_strong(0) == 1.0
    assert ratio_trivariate_weak(0) == 1.0
    assert scattering_igc_ratio(0) == 1.0
    assert abs(f_micro(1e-12) - 1.0) <= 1e-9


def test_value_examples():
    assert ratio_bivariate_strong(0.44) == pytest.approx(1.2, rel=1e-15)
    assert ratio_trivariate_strong(0.625) == pytest.approx(1.5, rel=1e-15)
    assert ratio_trivariate_mildly_weak(0.5) == pytest.approx(math.sqrt(1.5), rel=1e-15)
    assert scattering_ige_shift(0.6) == pytest.approx(-math.log(2), rel=1e-15)
    assert embedded_delta(0.5) == 2.0
    assert rho_qm(ScatteringParams(k0=1, sigma_k0=0, R0=1, a_s=1 / 1600)) == pytest.approx(0.1, rel=1e-14)


def test_purity_example_warns_outside_regime():
    with pytest.warns(RegimeWarning):
        p = purity(0.1, ScatteringParams(k0=1, sigma_k0=0, R0=1, L=1))
    assert p == pytest.approx(1 - 0.4 * 2 / 3, rel=1e-15)


def test_purity_from_complexity_coefficient():
    params = ScatteringParams(k0=0.05, L=1.0)
    cu = 2.0
    cc = scattering_igc_ratio(0.05) * cu
    drop = 1.0 - purity_from_complexity(cu, cc, params)
    assert drop == pytest.approx(2 * (1.0 - purity(0.05, params)), rel=1e-12)


def test_scattering_igc_vanishes_at_origin():
    vals = [scattering_igc_closed(t, 0.3, 1.0) for t in (1e-1, 1e-2, 1e-3)]
    assert vals[0] > vals[1] > vals[2] >= 0
    assert vals[2] < 1e-11


def test_scattering_igc_series_continuity():
    # the small-argument series and the direct formula meet at x = 0.2
    lo = scattering_igc_closed(0.2 * (1 - 1e-12), 0.0, 1.0)
    hi = scattering_igc_closed(0.2, 0.0, 1.0)
    assert abs(hi - lo) <= 1e-11 * abs(hi)


def test_mildly_weak_vanishes_at_edge():
    vals = [ratio_trivariate_mildly_weak(math.sqrt(2) / 2 - d) for d in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3


@pytest.mark.parametrize(
    "fn,bad,bound",
    [
        (ratio_bivariate_strong, 1.0, "(-1, 1)"),
        (ratio_trivariate_strong, -0.5, "(-1/2, 1)"),
        (scattering_igc_ratio, 1.0, "[0, 1)"),
        (scattering_igc_ratio, -0.1, "[0, 1)"),
    ],
)
def test_formula_domain_errors_name_bound(fn, bad, bound):
    with pytest.raises(ParamOutOfRange) as info:
        fn(bad)
    assert bound in str(info.value)


def test_mildly_weak_domain_message():
    with pytest.raises(ParamOutOfRange, match=r"sqrt\(2\)/2"):
        ratio_trivariate_mildly_weak(0.8)


@pytest.mark.parametrize(
    "name,params",
    [
        ("bivariate_corr", {"rho": 1.0}),
        ("trivariate_case2", {"rho": 0.8}),
        ("trivariate_case3", {"rho": -0.5}),
        ("scattering_corr", {"rho": 1.0}),
        ("uncorrelated_gaussian", {"l": 0}),
        ("gauss_2du", {"Sigma": 0.0}),
        ("iho", {"omega": [1.0, -1.0]}),
    ],
)
def test_build_rejects_out_of_range(name, params):
    with pytest.raises(ParamOutOfRange):
        build(name, **params)


def test_build_unknown_model():
    with pytest.raises(KeyError):
        build("no_such_model")


def test_spin_metrics():
    np.testing.assert_allclose(build("spin_integrable").metric([2.0, 4.0]), np.diag([0.25, 1 / 16]), rtol=1e-15)
    np.testing.assert_allclose(build("spin_chaotic").metric([2.0, 0.3, 0.5]), np.diag([1.0, 4.0, 8.0]), rtol=1e-15)


@given(st.floats(-3, 3), st.floats(0.2, 4), st.floats(0.2, 4))
def test_gauss_2dc_reduces_to_2du(mu, sigma, scale):
    a = build("gauss_2dc", rho=0.0, Sigma=scale).metric([mu, sigma])
    b = build("gauss_2du", Sigma=scale).metric([mu, sigma])
    np.testing.assert_array_equal(a, b)


def test_catalog_listing():
    rows = list_models()
    names = {r["name"] for r in rows}
    assert {"uncorrelated_gaussian", "spin_chaotic", "iho", "embedded_gaussian"} <= names
    assert set(CATALOG) == names
    for r in rows:
        assert r["source"] and r["dimension"]


def test_embedded_model_without_density():
    m = build("embedded_gaussian", l=1)
    assert m.density is None
    g = m.metric([0.3, 1.2])
    assert g.shape == (2, 2) and np.all(np.linalg.eigvalsh(g) > 0)


def test_embedded_ige_positive_argument():
    with pytest.raises(ParamOutOfRange):
        embedded_ige_closed(1.0, 1, 1.0, 1.0, 1.0)


@given(st.floats(-0.49, 0.99))
def test_three_over_two_identity(r):
    assert abs(ratio_trivariate_strong(r) / ratio_bivariate_strong(r) - ratio_3v2(r)) <= 1e-12


@given(st.floats(0.0, 0.999), st.floats(0.01, 100))
def test_scattering_round_trip(r, cu):
    assert abs(rho_from_complexity(cu, scattering_igc_ratio(r) * cu) - r) <= 1e-12


@given(st.floats(-0.99, 0.98), st.floats(1e-3, 1e-2))
def test_increasing_families(r, step):
    assert ratio_bivariate_strong(r + step) > ratio_bivariate_strong(r)
    assert ratio_trivariate_weak(r + step) > ratio_trivariate_weak(r)


@given(st.floats(1e-3, 0.98))
def test_f_micro_decreasing(r):
    assert f_micro(r + 1e-3) < f_micro(r)


def test_ratio_families_registry():
    assert set(RATIO_FAMILIES) >= {"bivariate_strong", "trivariate_weak", "trivariate_mildly_weak", "trivariate_strong"}
