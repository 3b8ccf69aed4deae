import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from igac.errors import InfeasibleMoment, ZeroEvidence
from igac.mre import (
    GridPrior,
    MomentConstraint,
    bayes_update,
    gaussian_grid_prior,
    load_grid_prior,
    moment_map,
    mre_update,
    solve_beta,
)

TWO_POINT = GridPrior([1.0, 2.0], [1.0, 1.0], [0.5, 0.5], [[0.8], [0.4]])
IDENT = lambda t: t  # noqa: E731


def test_two_point_bayes():
    sol = bayes_update(TWO_POINT, 0)
    np.testing.assert_allclose(sol.posterior, [2 / 3, 1 / 3], rtol=1e-15)
    assert sol.beta == 0.0


def test_uninformative_likelihood_keeps_prior():
    gp = GridPrior([0.0, 1.0, 2.0], [1, 1, 1], [0.2, 0.3, 0.5], np.ones((3, 1)))
    np.testing.assert_allclose(bayes_update(gp, 0).posterior, [0.2, 0.3, 0.5], rtol=1e-15)


def test_degenerate_prior_fixed_point():
    gp = GridPrior([1.0, 2.0], [1, 1], [1.0, 0.0], [[0.3], [0.9]])
    np.testing.assert_array_equal(bayes_update(gp, 0).posterior, [1.0, 0.0])


def test_zero_evidence():
    gp = GridPrior([1.0, 2.0], [1, 1], [1.0, 0.0], [[0.0], [0.9]])
    with pytest.raises(ZeroEvidence):
        bayes_update(gp, 0)


def test_two_point_mre_oracle():
    sol = mre_update(TWO_POINT, 0, MomentConstraint(IDENT, 1.25))
    assert abs(sol.beta - math.log(2 / 3)) <= 1e-12
    np.testing.assert_allclose(sol.posterior, [0.75, 0.25], atol=1e-12)
    assert abs(sol.moment - 1.25) <= 1e-12


def test_constraint_at_bayes_mean_gives_zero_beta():
    assert solve_beta(TWO_POINT, 0, MomentConstraint(IDENT, 4 / 3)) == 0.0


def test_infeasible_target():
    with pytest.raises(InfeasibleMoment):
        mre_update(TWO_POINT, 0, MomentConstraint(IDENT, 2.0))
    with pytest.raises(InfeasibleMoment):
        mre_update(TWO_POINT, 0, MomentConstraint(IDENT, 0.5))


def test_target_near_supremum_gives_large_beta():
    gp = gaussian_grid_prior(101)
    top = gp.theta.max()
    sol = mre_update(gp, 0, MomentConstraint(IDENT, top - 1e-3))
    assert sol.beta > 10
    assert abs(sol.moment - (top - 1e-3)) <= 1e-12
    assert np.all(np.isfinite(sol.posterior))


def test_tilted_posterior_matches_bruteforce():
    lik = lambda t: np.exp(-0.5 * ((t - 0.4) / 0.7) ** 2)  # noqa: E731
    gp = gaussian_grid_prior(101, likelihoods=[lik])
    sol = mre_update(gp, 0, MomentConstraint(IDENT, 0.9))
    brute = gp.prior * lik(gp.theta) * np.exp(sol.beta * gp.theta)
    brute /= np.sum(gp.weights * brute)
    assert np.max(np.abs(sol.posterior - brute)) <= 1e-12


def test_grid_prior_validation():
    with pytest.raises(ValueError):
        GridPrior([1.0, 2.0], [1, 1], [0.5, 0.6], [[1.0], [1.0]])
    with pytest.raises(ValueError):
        GridPrior([1.0, 2.0], [1, 1], [0.5, 0.5], [[1.0], [-0.1]])


def test_load_grid_prior(tmp_path):
    p = tmp_path / "grid.csv"
    p.write_text("theta,weight,prior,lik_a,lik_b\n1,1,0.5,0.8,0.1\n2,1,0.5,0.4,0.3\n")
    gp = load_grid_prior(p)
    assert gp.observables == ("a", "b")
    np.testing.assert_allclose(bayes_update(gp, "a").posterior, [2 / 3, 1 / 3])
    bad = tmp_path / "bad.csv"
    bad.write_text("theta,prior\n1,1\n")
    with pytest.raises(ValueError, match="bad.csv"):
        load_grid_prior(bad)


grids = st.integers(3, 40).flatmap(
    lambda n: st.tuples(
        arrays(float, n, elements=st.floats(0.1, 2.0)),
        arrays(float, n, elements=st.floats(0.05, 2.0)),
        arrays(float, n, elements=st.floats(0.01, 1.0)),
    )
)


def _grid(data):
    gaps, w, lik = data
    theta = np.cumsum(gaps) - 3.0  # strictly increasing, well separated nodes
    return GridPrior.normalized(theta, w, np.ones_like(w), lik[:, None])


@given(grids)
def test_bayes_mean_constraint_reproduces_bayes(data):
    gp = _grid(data)
    b = bayes_update(gp, 0)
    mean = float(np.sum(gp.weights * b.posterior * gp.theta))
    m = mre_update(gp, 0, MomentConstraint(IDENT, mean))
    assert np.max(np.abs(m.posterior - b.posterior)) <= 1e-12


@given(grids, st.floats(-3, 3), st.floats(0.01, 2))
def test_moment_map_increasing(data, beta, step):
    gp = _grid(data)
    logw = np.log(gp.weights * gp.prior * gp.likelihood[:, 0])
    m1, v1 = moment_map(logw, gp.theta, beta)
    m2, _ = moment_map(logw, gp.theta, beta + step)
    assert v1 >= 0
    assert m2 >= m1 - 1e-12


@given(grids, st.floats(0.05, 0.95))
def test_posterior_normalized_and_idempotent(data, frac):
    gp = _grid(data)
    lo, hi = gp.theta.min(), gp.theta.max()
    target = lo + frac * (hi - lo)
    sol = mre_update(gp, 0, MomentConstraint(IDENT, target))
    assert np.all(sol.posterior >= 0)
    assert abs(np.sum(gp.weights * sol.posterior) - 1.0) <= 1e-12
    assert abs(sol.moment - target) <= 1e-10
    again = mre_update(gp, 0, MomentConstraint(IDENT, sol.moment))
    assert np.max(np.abs(again.posterior - sol.posterior)) <= 1e-12 * max(1.0, np.max(sol.posterior))
