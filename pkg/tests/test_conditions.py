"""Regularity checks against independently derived values."""

import math

import numpy as np
import pytest
import scipy.stats as sps

from modev import (
    Box,
    DivergenceError,
    GridError,
    LossSpec,
    MonotoneError,
    NonDifferentiableWarning,
    check_a0,
    check_c,
    check_d,
    check_dqm,
    check_e,
    check_exp_moment,
    check_loss,
    check_moment_b,
    get_family,
)

GAUSS = get_family("gaussian")


# ---------------------------------------------------------------------------
# Hellinger separation (A0)
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("delta", (0.5, 1.0, 2.0))
def test_a0_gaussian_infimum(delta):
    rep = check_a0(GAUSS, Box(np.array([-2.0]), np.array([2.0])), delta)
    want = 2.0 * (1.0 - math.exp(-(delta**2) / 8.0))
    assert rep.verdict == "pass"
    assert rep.witnesses[0].value == pytest.approx(want, abs=1e-4)


def test_a0_planar_gaussian_infimum():
    fam = get_family("gaussian2")
    rep = check_a0(fam, Box(np.full(2, -1.0), np.full(2, 1.0)), 0.5)
    want = 2.0 * (1.0 - math.exp(-0.25 / 8.0))
    assert rep.verdict == "pass"
    assert rep.witnesses[0].value == pytest.approx(want, abs=1e-4)


def test_a0_grid_validation():
    compact = Box(np.array([-2.0]), np.array([2.0]))
    with pytest.raises(GridError):
        check_a0(GAUSS, compact, 0.0)
    with pytest.raises(GridError):
        check_a0(GAUSS, compact, 100.0)  # exceeds the domain diameter
    with pytest.raises(GridError):
        check_a0(GAUSS, Box(np.array([-20.0]), np.array([2.0])), 0.5)


# ---------------------------------------------------------------------------
# DQM
# ---------------------------------------------------------------------------


def test_dqm_gaussian_modulus_shrinks():
    taus = [m * np.ones(1) for m in (0.001, 0.01, 0.1)]
    model, rep = check_dqm(GAUSS, 0.0, taus)
    assert rep.verdict == "pass"
    omega = rep.parameters["raw_omega"]
    # mean-square linearization error of sqrt-density ratio is O(|tau|^2)
    assert omega[0] < omega[-1] < 1e-3
    assert model.omega_fit.shape[1] == 2
    np.testing.assert_allclose(model.phi_values(np.array([2.0])), [1.0], atol=1e-12)


# ---------------------------------------------------------------------------
# truncated LR moments (B) and the exponential envelope (A1A2)
# ---------------------------------------------------------------------------


def test_moment_b_trivial_when_truncation_inactive():
    # Bernoulli log ratios are bounded, so a threshold past the range leaves
    # nothing to truncate and the moment is exactly zero
    fam = get_family("bernoulli")
    rep = check_moment_b(fam, 0.5, 0.1, 0.5, 1.5, [0.05, 0.1, -0.1])
    assert rep.verdict == "pass"
    assert rep.parameters["max_value"] == 0.0


def test_moment_b_gaussian_small():
    rep = check_moment_b(GAUSS, 0.0, 0.1, 0.5, 1.5, [0.05, 0.1, -0.1])
    assert rep.verdict == "pass"
    assert 0.0 < rep.parameters["max_value"] < 1e-4


def test_moment_b_validation():
    with pytest.raises(GridError):
        check_moment_b(GAUSS, 0.0, 0.1, -1.0, 1.5, [0.1])
    with pytest.raises(GridError):
        check_moment_b(GAUSS, 0.0, 0.1, 0.5, 0.5, [0.1])


def test_exp_moment_matches_closed_form():
    rep = check_exp_moment(GAUSS, 0.0, lambda x: np.abs(x), 1.0)
    # worst neighborhood point is theta = +-1; E_m e^{|X|} in closed form
    m = 1.0
    want = math.exp(0.5 + m) * sps.norm.cdf(m + 1) + math.exp(0.5 - m) * sps.norm.cdf(1 - m)
    assert rep.verdict == "pass"
    assert rep.witnesses[0].value == pytest.approx(want, abs=1e-8)


def test_exp_moment_rejects_divergent_envelope():
    with pytest.raises(DivergenceError):
        check_exp_moment(GAUSS, 0.0, lambda x: np.asarray(x) ** 2, 1.0)
    with pytest.raises(GridError):
        check_exp_moment(GAUSS, 0.0, lambda x: np.abs(x), 0.0)


# ---------------------------------------------------------------------------
# C1/C2 decay
# ---------------------------------------------------------------------------


def test_c_gaussian_exponents_and_truncated_moment():
    rep = check_c(GAUSS, 0.0, (0.2, 0.1, 0.05, 0.02), gamma=1.0, lam=1.0)
    assert rep.verdict == "pass"
    assert 3.8 <= rep.parameters["c2_loglog_exponent"] <= 4.2
    assert rep.parameters["c1_loglog_slope"] >= 0.9
    # E[phi^2 1(|phi| > 2.5)] for phi = x/2: tail moment of the standard normal
    w = next(
        w
        for w in rep.witnesses
        if isinstance(w.input, dict) and w.input.get("quantity") == "truncated_phi2"
    )
    want = 0.5 * (5.0 * sps.norm.pdf(5.0) + sps.norm.sf(5.0))
    assert w.value == pytest.approx(want, rel=1e-10)


def test_c_planar_gaussian_exponents():
    fam = get_family("gaussian2")
    rep = check_c(fam, np.zeros(2), (0.2, 0.1, 0.05, 0.02), gamma=1.0, lam=1.0)
    assert rep.verdict == "pass"
    assert 3.8 <= rep.parameters["c2_loglog_exponent"] <= 4.2


def test_c_grid_validation():
    with pytest.raises(GridError):
        check_c(GAUSS, 0.0, (0.02, 0.1, 0.2), gamma=1.0, lam=1.0)  # increasing
    with pytest.raises(GridError):
        check_c(GAUSS, 0.0, (0.2, 0.1), gamma=1.0, lam=1.0)  # too short


# ---------------------------------------------------------------------------
# gradient moment (D) and centered log-ratio moments (E)
# ---------------------------------------------------------------------------


def test_d_gaussian_worst_moment():
    rep = check_d(GAUSS, 3.0)
    assert rep.verdict == "pass"
    assert rep.witnesses[0].value == pytest.approx(2.0 * math.sqrt(2.0 / math.pi), abs=1e-8)


def test_d_laplace_warns_once_about_ae_gradient():
    fam = get_family("laplace")
    with pytest.warns(NonDifferentiableWarning):
        rep = check_d(fam, 3.0)
    assert rep.verdict == "pass"
    # |grad log f| = 1 a.e., so every moment equals 1
    assert rep.witnesses[0].value == pytest.approx(1.0, abs=1e-6)


def test_d_rejects_small_m():
    with pytest.raises(GridError):
        check_d(GAUSS, 1.0)
    with pytest.raises(GridError):
        check_d(get_family("gaussian2"), 2.0)


def test_e_gaussian_constant_residual():
    # for the location family the centered log ratio minus the score term is
    # the deterministic constant (v^2 - u^2)/2
    rep = check_e(GAUSS, 0.0, 1e6, 2.0, 2.0, [(0.0, 0.1)])
    assert rep.verdict == "pass"
    assert rep.parameters["fitted_C"] == pytest.approx(0.0025, rel=1e-9)


def test_e_validation():
    with pytest.raises(GridError):
        check_e(GAUSS, 0.0, 1e6, 1.0, 2.0, [(0.0, 0.1)])
    with pytest.raises(GridError):
        check_e(GAUSS, 0.0, 1e6, 2.0, 2.0, [(0.0, 20.0)])  # leaves the domain


# ---------------------------------------------------------------------------
# loss regularity
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("p", (1.0, 2.0))
def test_loss_certifies_power_laws(p):
    rep = check_loss(LossSpec.power(p), (1.5, 2.0, 3.0, 5.0), (0.1, 0.5, 1.0, 2.0))
    assert rep.verdict == "pass"
    assert rep.parameters["kappa1"] == pytest.approx(p, abs=1e-9)
    assert rep.parameters["C1"] == pytest.approx(1.0, abs=1e-9)


def test_loss_linear_increment():
    rep = check_loss(LossSpec.linear(), (1.5, 2.0), (0.5, 1.0))
    assert rep.verdict == "pass"
    # l1(ax)/l1(x) - 1 = a - 1 exactly
    assert rep.parameters["kappa2"] == pytest.approx(1.0, abs=1e-9)
    assert rep.parameters["C2"] == pytest.approx(1.0, abs=1e-9)


def test_loss_rejects_non_monotone_table():
    loss = LossSpec.table([0.0, 1.0, 2.0], [0.0, 1.0, 0.5])
    with pytest.raises(MonotoneError):
        check_loss(loss, (1.5, 2.0), (0.5, 1.0))


def test_loss_table_validation():
    with pytest.raises(GridError):
        LossSpec.table([0.5, 1.0], [0.0, 1.0])  # must start at x = 0
    with pytest.raises(GridError):
        LossSpec.table([0.0, 1.0], [0.5, 1.0])  # must start at l1 = 0
    with pytest.raises(GridError):
        check_loss(LossSpec.power(2.0), (0.5, 2.0), (0.5, 1.0))  # a <= 1
