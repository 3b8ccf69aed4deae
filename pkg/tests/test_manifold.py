import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from igac.catalog import build
from igac.errors import NonInvertibleJacobian, NonPositiveDeterminant, OutOfDomain, SingularMetric
from igac.manifold import (
    AxisRule,
    DensityFamily,
    DomainBox,
    MetricTensor,
    Reparametrization,
    check_reparam_covariance,
    christoffel,
    fisher_density,
    metric_analytic,
    metric_numeric,
    normalization_check,
)

sigmas = st.floats(0.2, 5.0)
means = st.floats(-3.0, 3.0)


def test_gaussian_metric_at_sigma_two():
    g = metric_analytic(build("uncorrelated_gaussian", l=1), [0.0, 2.0]).components
    np.testing.assert_array_equal(g, np.diag([0.25, 0.5]))


def test_euclidean_metric_is_identity():
    g = metric_analytic(build("euclidean", n=3), [1.0, -2.0, 7.0]).components
    np.testing.assert_array_equal(g, np.eye(3))


def test_bivariate_metric_common_mean():
    # mean term 1' R^-1 1 / sigma^2 = 2 / (1 + rho) at sigma = 1
    g = metric_analytic(build("bivariate_corr", rho=0.6), [0.0, 1.0]).components
    np.testing.assert_allclose(g, np.diag([1.25, 4.0]), rtol=1e-15)


def test_location_family_unit_information():
    fam = DensityFamily(
        lambda x, th: -0.5 * (x[:, 0] - th[0]) ** 2 - 0.5 * math.log(2 * math.pi),
        (AxisRule("line"),),
        lambda th: (np.array([th[0]]), np.eye(1), np.zeros(0)),
    )
    for mu in (-3.0, 0.0, 2.5):
        np.testing.assert_allclose(metric_numeric(fam, [mu]).components, [[1.0]], rtol=1e-10)


def test_exponential_family_information():
    fam = DensityFamily(
        lambda x, th: -math.log(th[0]) - x[:, 0] / th[0],
        (AxisRule("half"),),
        lambda th: (np.zeros(0), np.zeros((0, 0)), np.array([th[0]])),
    )
    np.testing.assert_allclose(metric_numeric(fam, [4.0]).components, [[1.0 / 16.0]], rtol=1e-10)


def test_gaussian_numeric_matches_analytic():
    m = build("uncorrelated_gaussian", l=1)
    gn = metric_numeric(m.density, [0.0, 2.0], domain=m.domain).components
    np.testing.assert_allclose(gn, np.diag([0.25, 0.5]), rtol=1e-6, atol=1e-12)


@pytest.mark.parametrize(
    "name,params,theta",
    [
        ("trivariate_case1", {"rho": 0.3}, [0.2, 1.3]),
        ("trivariate_case2", {"rho": 0.4}, [0.2, 1.3]),
        ("trivariate_case3", {"rho": 0.6}, [0.2, 1.3]),
        ("microcorrelated_3d", {"rho": 0.4}, [0.1, -0.3, 0.8]),
        ("gauss_3du", {}, [0.2, 0.7, 1.4]),
        ("gauss_3dc", {"rho": 0.3}, [0.2, 0.7, 1.4]),
        ("gauss_2dc", {"rho": 0.3, "Sigma": 1.2}, [0.2, 0.7]),
        ("scattering_corr", {"rho": 0.5}, [0.1, -0.3, 0.8]),
    ],
)
def test_every_density_model_matches_quadrature(name, params, theta):
    m = build(name, **params)
    ga = metric_analytic(m, theta).components
    gn = metric_numeric(m.density, theta, domain=m.domain).components
    assert np.max(np.abs(gn - ga)) / np.max(np.abs(ga)) <= 1e-6


def test_density_families_are_normalized():
    for name, params, theta in [
        ("uncorrelated_gaussian", {"l": 1}, [0.3, 1.7]),
        ("spin_chaotic", {}, [1.3, 0.2, 0.9]),
        ("bivariate_corr", {"rho": -0.4}, [0.0, 1.2]),
    ]:
        fam = build(name, **params).density
        assert abs(normalization_check(fam, theta) - 1.0) <= 1e-12


def test_fisher_density_examples():
    assert fisher_density(np.eye(2)) == 1.0
    spin = build("spin_integrable")
    assert fisher_density(spin.metric([2.0, 4.0])) == pytest.approx(0.125, rel=1e-15)
    g = build("uncorrelated_gaussian", l=1).metric([0.0, 2.0])
    assert fisher_density(g) == pytest.approx(math.sqrt(0.125), rel=1e-15)
    with pytest.raises(NonPositiveDeterminant):
        fisher_density(np.diag([1.0, -1.0]))


def test_christoffel_examples():
    g = build("uncorrelated_gaussian", l=1)
    assert christoffel(g, [0.0, 1.0])[1, 1, 1] == pytest.approx(-1.0, rel=1e-14)
    assert christoffel(g, [0.0, 2.0])[0, 0, 1] == pytest.approx(-0.5, rel=1e-14)
    flat = build("euclidean", n=2)
    assert np.all(christoffel(flat, [0.3, -1.0]) == 0.0)
    assert np.all(christoffel(flat, [0.3, -1.0], method="fd") == 0.0)


def test_christoffel_fd_richardson_order():
    m = build("gauss_3dc", rho=0.4)
    th = np.array([0.3, 0.8, 1.3])
    exact = christoffel(m, th, method="analytic")
    e1 = np.max(np.abs(christoffel(m, th, step=1e-2) - exact))
    e2 = np.max(np.abs(christoffel(m, th, step=5e-3) - exact))
    assert math.log2(e1 / e2) >= 1.8


def test_out_of_domain_and_margin():
    g = build("uncorrelated_gaussian", l=1)
    with pytest.raises(OutOfDomain) as info:
        metric_analytic(g, [0.0, 5e-10])
    assert info.value.index == 1
    with pytest.raises(OutOfDomain):
        christoffel(g, [0.0, -1.0])
    box = DomainBox((0.0,), (1.0,))
    assert box.contains([0.5]) and not box.contains([1.0 - 1e-10])


def test_singular_metric_inverse():
    with pytest.raises(SingularMetric):
        MetricTensor((0.0,), np.zeros((2, 2))).inverse()


def test_identity_reparametrization_exact():
    m = build("uncorrelated_gaussian", l=1)
    ident = Reparametrization(lambda t: t, lambda t: np.eye(2), metric=lambda t: m.metric(t))
    assert check_reparam_covariance(m, ident, [0.4, 1.3]) == 0.0


def test_log_sigma_reparametrization():
    m = build("uncorrelated_gaussian", l=1)
    diffeo = Reparametrization(
        lambda t: np.array([t[0], math.exp(t[1])]),
        lambda t: np.diag([1.0, math.exp(t[1])]),
    )
    assert check_reparam_covariance(m, diffeo, [0.3, 0.4]) <= 1e-8
    # the lambda-lambda entry becomes the constant 2
    known = Reparametrization(diffeo.forward, diffeo.jacobian, metric=lambda t: np.diag([math.exp(-2 * t[1]), 2.0]))
    assert check_reparam_covariance(m, known, [0.3, 0.4]) <= 1e-12


def test_mean_scaling_reparametrization():
    m = build("uncorrelated_gaussian", l=1)
    diffeo = Reparametrization(lambda t: np.array([2 * t[0], t[1]]), lambda t: np.diag([2.0, 1.0]))
    assert check_reparam_covariance(m, diffeo, [0.5, 1.5]) <= 1e-8


def test_singular_jacobian_rejected():
    m = build("uncorrelated_gaussian", l=1)
    bad = Reparametrization(lambda t: t, lambda t: np.array([[1.0, 0.0], [0.0, 0.0]]), metric=lambda t: np.eye(2))
    with pytest.raises(NonInvertibleJacobian):
        check_reparam_covariance(m, bad, [0.0, 1.0])


@given(means, sigmas, st.floats(-0.9, 0.9))
def test_metric_symmetric_positive_definite(mu, sigma, rho):
    for m, th in [
        (build("bivariate_corr", rho=rho), [mu, sigma]),
        (build("gauss_3dc", rho=rho), [mu, sigma, sigma + 0.1]),
        (build("microcorrelated_3d", rho=abs(rho)), [mu, -mu, sigma]),
    ]:
        t = metric_analytic(m, th)
        assert np.array_equal(t.components, t.components.T)
        assert t.is_positive_definite()


@given(means, sigmas, st.floats(-2.0, 2.0))
def test_fisher_density_transforms_with_jacobian(mu, sigma, shift):
    # theta = (a * mu' + shift, exp(lam)) : sqrt g'(theta') = sqrt g(theta) |det J|
    m = build("uncorrelated_gaussian", l=1)
    a = 1.7
    tn = np.array([(mu - shift) / a, math.log(sigma)])
    jac = np.diag([a, sigma])
    g_new = jac.T @ m.metric([mu, sigma]) @ jac
    assert fisher_density(g_new) == pytest.approx(fisher_density(m.metric([mu, sigma])) * abs(np.linalg.det(jac)), rel=1e-8)
    diffeo = Reparametrization(lambda t: np.array([a * t[0] + shift, math.exp(t[1])]), lambda t: np.diag([a, math.exp(t[1])]))
    assert check_reparam_covariance(m, diffeo, tn) <= 1e-8 * max(1.0, np.max(np.abs(g_new)))


@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(-0.8, 0.8))
def test_analytic_gradient_matches_finite_differences(s1, s2, rho):
    m = build("gauss_3dc", rho=rho)
    th = np.array([0.1, s1, s2])
    a = christoffel(m, th, method="analytic")
    f = christoffel(m, th, method="fd")
    assert np.max(np.abs(a - f)) <= 1e-6 * max(1.0, np.max(np.abs(a)))
