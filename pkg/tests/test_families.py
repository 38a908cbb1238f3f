"""Family calculus against closed forms the implementation never evaluates."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modev import (
    DomainError,
    SupportError,
    draw_sample,
    expect,
    family_names,
    fisher_by_quadrature,
    fisher_information,
    get_family,
    hellinger_affinity,
    hellinger_g,
    integrate_support,
    log_density,
    phi_matrix,
    score,
)
from modev.families import density_normalization

ALL_FAMILIES = ("gaussian", "gaussian2", "bernoulli", "exponential", "laplace")


def theta_for(name):
    # a generic interior point per family
    if name == "gaussian2":
        return np.array([0.3, -0.2])
    if name == "bernoulli":
        return np.array([0.4])
    if name == "exponential":
        return np.array([1.5])
    return np.array([0.3])


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------


def test_log_density_worked_values():
    assert log_density(get_family("gaussian"), 0.0, 0.0) == pytest.approx(
        -0.5 * math.log(2 * math.pi), abs=1e-12
    )
    assert log_density(get_family("gaussian"), 2.0, 0.5) == pytest.approx(
        -0.5 * math.log(2 * math.pi) - 1.125, abs=1e-12
    )
    assert log_density(get_family("gaussian2"), np.zeros(2), np.zeros(2)) == pytest.approx(
        -math.log(2 * math.pi), abs=1e-12
    )
    assert log_density(get_family("bernoulli"), 1.0, 0.3) == pytest.approx(math.log(0.3))
    assert log_density(get_family("bernoulli"), 0.0, 0.3) == pytest.approx(math.log(0.7))
    assert log_density(get_family("exponential"), 2.0, 1.5) == pytest.approx(
        math.log(1.5) - 3.0, abs=1e-12
    )
    assert log_density(get_family("laplace"), 2.0, 0.5) == pytest.approx(
        -math.log(2.0) - 1.5, abs=1e-12
    )


def test_log_density_rejects_points_outside_support():
    with pytest.raises(SupportError):
        log_density(get_family("bernoulli"), 0.5, 0.3)
    with pytest.raises(SupportError):
        log_density(get_family("exponential"), -1.0, 1.0)


@pytest.mark.parametrize("name", ALL_FAMILIES)
def test_density_normalizes_to_one(name):
    fam = get_family(name)
    assert density_normalization(fam, theta_for(name)) == pytest.approx(1.0, abs=1e-8)


def test_family_registry():
    assert set(family_names()) == set(ALL_FAMILIES)
    with pytest.raises(DomainError):
        get_family("cauchy")
    with pytest.raises(DomainError):
        get_family("bernoulli").validate_theta(1.5)


# ---------------------------------------------------------------------------
# root-density ratio g and the Hellinger affinity
# ---------------------------------------------------------------------------


def test_hellinger_g_worked_values():
    g = hellinger_g(get_family("gaussian"), 0.0, 0.2, np.array([0.0]))
    assert float(g[0]) == pytest.approx(math.exp(-0.01) - 1.0, abs=1e-12)
    g = hellinger_g(get_family("bernoulli"), 0.5, 0.3, np.array([1.0]))
    assert float(g[0]) == pytest.approx(math.sqrt(1.6) - 1.0, abs=1e-12)


def test_affinity_matches_closed_forms():
    # Gaussian location: exp(-tau^2/8)
    assert hellinger_affinity(get_family("gaussian"), 0.0, 1.0) == pytest.approx(
        math.exp(-0.125), abs=1e-8
    )
    # planar Gaussian: exp(-|tau|^2/8)
    assert hellinger_affinity(
        get_family("gaussian2"), np.zeros(2), np.array([0.2, 0.0])
    ) == pytest.approx(math.exp(-0.005), abs=1e-10)
    # Bernoulli: sqrt(t0 t1) + sqrt((1-t0)(1-t1))
    assert hellinger_affinity(get_family("bernoulli"), 0.5, 0.3) == pytest.approx(
        math.sqrt(0.4) + math.sqrt(0.1), abs=1e-12
    )
    # rate a vs b: 2 sqrt(ab) / (a + b)
    assert hellinger_affinity(get_family("exponential"), 1.0, 0.3) == pytest.approx(
        2.0 * math.sqrt(1.3) / 2.3, abs=1e-8
    )
    # unit Laplace shift D: exp(-D/2) (1 + D/2)
    assert hellinger_affinity(get_family("laplace"), 0.0, 0.4) == pytest.approx(
        math.exp(-0.2) * 1.2, abs=1e-8
    )


def test_affinity_random_gaussian_shifts():
    fam = get_family("gaussian")
    rng = np.random.default_rng(7)
    for _ in range(50):
        theta0 = float(rng.uniform(-1.0, 1.0))
        tau = float(rng.uniform(-0.3, 0.3))
        if abs(tau) < 1e-3:
            continue
        want = math.exp(-(tau**2) / 8.0)
        assert hellinger_affinity(fam, theta0, tau) == pytest.approx(want, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(
    theta0=st.floats(-1.5, 1.5),
    tau=st.floats(-0.5, 0.5).filter(lambda t: abs(t) > 1e-3),
)
def test_affinity_symmetric_and_bounded(theta0, tau):
    fam = get_family("gaussian")
    a = hellinger_affinity(fam, theta0, tau)
    b = hellinger_affinity(fam, theta0 + tau, -tau)
    assert 0.0 < a <= 1.0
    assert a == pytest.approx(b, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(theta0=st.floats(0.1, 0.9), tau=st.floats(-0.08, 0.08))
def test_affinity_symmetric_bernoulli(theta0, tau):
    fam = get_family("bernoulli")
    a = hellinger_affinity(fam, theta0, tau)
    want = math.sqrt(theta0 * (theta0 + tau)) + math.sqrt((1 - theta0) * (1 - theta0 - tau))
    assert a == pytest.approx(want, abs=1e-12)


# ---------------------------------------------------------------------------
# score and Fisher information
# ---------------------------------------------------------------------------


def test_score_worked_values():
    # phi is the root-density derivative: phi = (d/dtau) g at tau = 0
    assert float(score(get_family("gaussian"), 0.0, 2.0)[0]) == pytest.approx(1.0, abs=1e-12)
    assert float(score(get_family("exponential"), 1.0, 1.0)[0]) == pytest.approx(0.0, abs=1e-12)
    # Bernoulli at 1/2: phi(1) = 1, phi(0) = -1
    assert float(score(get_family("bernoulli"), 0.5, 1.0)[0]) == pytest.approx(1.0)
    assert float(score(get_family("bernoulli"), 0.5, 0.0)[0]) == pytest.approx(-1.0)


@pytest.mark.parametrize("name", ("gaussian", "exponential", "laplace"))
def test_score_is_derivative_of_g(name):
    fam = get_family(name)
    theta0 = theta_for(name)
    rng = np.random.default_rng(11)
    xs = draw_sample(fam, theta0, 100, seed=5).observations.reshape(-1)
    h = 1e-5
    for x in xs:
        if name == "laplace" and abs(x - theta0[0]) < 1e-3:
            continue  # kink: derivative only a.e.
        fd = (
            hellinger_g(fam, theta0, h, np.array([x]))
            - hellinger_g(fam, theta0, -h, np.array([x]))
        ) / (2 * h)
        want = float(score(fam, theta0, x)[0])
        assert float(fd[0]) == pytest.approx(want, abs=1e-5 * (1 + abs(want)))
    del rng


def test_score_is_directional_derivative_planar():
    fam = get_family("gaussian2")
    theta0 = np.array([0.3, -0.2])
    xs = draw_sample(fam, theta0, 40, seed=5).observations
    h = 1e-5
    for i in range(2):
        e = np.zeros(2)
        e[i] = 1.0
        fd = (
            hellinger_g(fam, theta0, h * e, xs) - hellinger_g(fam, theta0, -h * e, xs)
        ) / (2 * h)
        want = np.asarray([score(fam, theta0, x)[i] for x in xs])
        np.testing.assert_allclose(np.asarray(fd), want, atol=1e-5, rtol=1e-5)


def test_fisher_quadrature_matches_closed_forms():
    assert fisher_by_quadrature(get_family("gaussian"), 0.0)[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert fisher_by_quadrature(get_family("bernoulli"), 0.5)[0, 0] == pytest.approx(4.0, abs=1e-9)
    assert fisher_by_quadrature(get_family("bernoulli"), 0.3)[0, 0] == pytest.approx(
        1.0 / 0.21, abs=1e-9
    )
    assert fisher_by_quadrature(get_family("exponential"), 1.5)[0, 0] == pytest.approx(
        1.0 / 1.5**2, abs=1e-6
    )
    assert fisher_by_quadrature(get_family("laplace"), 0.0)[0, 0] == pytest.approx(1.0, abs=1e-6)
    np.testing.assert_allclose(
        fisher_by_quadrature(get_family("gaussian2"), np.zeros(2)), np.eye(2), atol=1e-6
    )


@pytest.mark.parametrize("name", ALL_FAMILIES)
def test_fisher_info_square_roots(name):
    fam = get_family(name)
    info = fisher_information(fam, theta_for(name))
    np.testing.assert_allclose(info.sqrt @ info.sqrt, info.matrix, atol=1e-10)
    np.testing.assert_allclose(info.inv_sqrt @ info.matrix @ info.inv_sqrt, np.eye(fam.d), atol=1e-10)
    w = np.linalg.eigvalsh(info.matrix)
    assert np.all(w > 0)


def test_phi_matrix_shape():
    fam = get_family("gaussian2")
    obs = draw_sample(fam, np.zeros(2), 13, seed=0).observations
    assert phi_matrix(fam, obs, np.zeros(2)).shape == (13, 2)
    fam1 = get_family("gaussian")
    obs1 = draw_sample(fam1, 0.0, 7, seed=0).observations
    assert phi_matrix(fam1, obs1, 0.0).shape == (7, 1)


# ---------------------------------------------------------------------------
# quadrature and expectations
# ---------------------------------------------------------------------------


def test_expect_second_moments():
    assert expect(get_family("gaussian"), 0.5, lambda x: (x - 0.5) ** 2) == pytest.approx(
        1.0, abs=1e-9
    )
    assert expect(get_family("exponential"), 1.5, lambda x: x) == pytest.approx(
        1.0 / 1.5, abs=1e-9
    )
    assert expect(get_family("laplace"), 0.0, lambda x: x**2) == pytest.approx(2.0, abs=1e-8)
    fam2 = get_family("gaussian2")
    assert expect(fam2, np.zeros(2), lambda x: np.sum(np.asarray(x) ** 2, axis=-1)) == pytest.approx(
        2.0, abs=1e-10
    )


def test_integrate_support_binary_is_exact_sum():
    fam = get_family("bernoulli")
    val = integrate_support(fam, lambda x: np.asarray(x) + 3.0)
    assert val == pytest.approx(7.0, abs=0.0)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", ALL_FAMILIES)
def test_draws_are_reproducible(name):
    fam = get_family(name)
    theta = theta_for(name)
    a = draw_sample(fam, theta, 64, seed=123)
    b = draw_sample(fam, theta, 64, seed=123)
    c = draw_sample(fam, theta, 64, seed=124)
    np.testing.assert_array_equal(a.observations, b.observations)
    assert not np.array_equal(a.observations, c.observations)
    assert a.n == 64 and a.family == name


def test_draws_land_in_support():
    obs = draw_sample(get_family("bernoulli"), 0.4, 500, seed=1).observations
    assert set(np.unique(obs)) <= {0.0, 1.0}
    obs = draw_sample(get_family("exponential"), 2.0, 500, seed=1).observations
    assert np.all(obs > 0)
