import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sciuq.errors import DuplicateProcessKey, FamilyMismatch
from sciuq.likelihoods import UqModel
from sciuq.processes import (LOG_2PI, HalfNormal, LogNormal, Normal, Process, VariableSpec,
                             diag_gaussian_logpdf, inv_softplus, kl_to_prior, log_prior,
                             variational_sample)
from sciuq.surrogates import FnnSpec, IdentitySpec


@pytest.mark.parametrize("P", [1, 3, 10])
def test_standard_normal_at_origin(P):
    value = log_prior(VariableSpec.samplable(), np.zeros(P))
    assert value == pytest.approx(-P / 2 * LOG_2PI, abs=1e-12)


def test_standard_normal_values():
    assert log_prior(VariableSpec.samplable(), np.zeros(1)) == pytest.approx(-0.9189385, abs=1e-7)
    assert log_prior(VariableSpec.samplable(), np.ones(1)) == pytest.approx(-1.4189385, abs=1e-7)


def test_halfnormal_outside_support():
    assert log_prior(VariableSpec.samplable(HalfNormal(0.5)), np.array([-0.1])) == -math.inf


def test_halfnormal_density():
    sigma, t = 0.7, 0.4
    expected = math.log(2) - 0.5 * LOG_2PI - math.log(sigma) - 0.5 * (t / sigma) ** 2
    assert log_prior(VariableSpec.samplable(HalfNormal(sigma)), np.array([t])) == pytest.approx(
        expected, abs=1e-12)


@given(theta=st.lists(st.floats(1e-3, 50.0), min_size=1, max_size=5),
       mu=st.floats(-1, 1), sigma=st.floats(0.2, 3.0))
def test_lognormal_formula(theta, mu, sigma):
    theta = np.array(theta)
    lp = log_prior(VariableSpec.samplable(LogNormal(mu, sigma)), theta)
    z = (np.log(theta) - mu) / sigma
    normal_of_log = np.sum(-0.5 * z * z - math.log(sigma) - 0.5 * LOG_2PI)
    assert lp == pytest.approx(normal_of_log - np.sum(np.log(theta)), rel=1e-12, abs=1e-12)


def test_lognormal_outside_support():
    assert log_prior(VariableSpec.samplable(LogNormal()), np.array([0.0])) == -math.inf


@given(seed=st.integers(0, 2 ** 16), h=st.floats(1e-3, 1.0))
def test_normal_prior_concave_along_lines(seed, h):
    rng = np.random.default_rng(seed)
    var = VariableSpec.samplable(Normal(0.3, 1.7))
    x, d = rng.standard_normal(4), rng.standard_normal(4)
    f = lambda s: log_prior(var, x + s * d)
    assert f(h) - 2 * f(0.0) + f(-h) <= 1e-12


def test_trainable_has_no_prior():
    with pytest.raises(FamilyMismatch):
        log_prior(VariableSpec.trainable(), np.zeros(2))


def test_family_invariants():
    with pytest.raises(FamilyMismatch):
        VariableSpec("trainable", prior=Normal())
    with pytest.raises(FamilyMismatch):
        VariableSpec("samplable", prior=Normal(), m=np.zeros(1), rho=np.zeros(1))
    with pytest.raises(FamilyMismatch):
        VariableSpec("variational")
    with pytest.raises(ValueError):
        VariableSpec.variational(m=np.zeros(2))


def test_variational_sample_collapses_to_mean():
    var = VariableSpec.variational(m=[1.0, 2.0], rho=[-800.0, -800.0])
    np.testing.assert_array_equal(variational_sample(var, [0.3, -2.0]), [1.0, 2.0])


def test_variational_sample_unit_scale():
    var = VariableSpec.variational(m=[0.0], rho=inv_softplus([1.0]))
    np.testing.assert_allclose(variational_sample(var, [0.5]), [0.5], rtol=1e-14)


def test_variational_sample_requires_variational():
    with pytest.raises(FamilyMismatch):
        variational_sample(VariableSpec.samplable(), np.zeros(1))


def test_variational_sample_density():
    rng = np.random.default_rng(0)
    m, rho = rng.standard_normal(3), rng.standard_normal(3)
    var = VariableSpec.variational(m=m, rho=rho)
    sigma = np.log1p(np.exp(rho))
    for _ in range(5):
        noise = rng.standard_normal(3)
        theta = variational_sample(var, noise)
        expected = sum(-0.5 * ((t - mi) / s) ** 2 - math.log(s) - 0.5 * LOG_2PI
                       for t, mi, s in zip(theta, m, sigma))
        assert diag_gaussian_logpdf(theta, m, sigma) == pytest.approx(expected, abs=1e-10)


def test_variational_sample_mean_converges():
    rng = np.random.default_rng(1)
    m, rho = np.array([0.5, -2.0]), np.array([0.3, -1.0])
    var = VariableSpec.variational(m=m, rho=rho)
    n = 100_000
    draws = variational_sample(var, rng.standard_normal((n, 2)))
    sigma = np.log1p(np.exp(rho))
    assert np.all(np.abs(draws.mean(axis=0) - m) <= 4 * sigma / math.sqrt(n))


def test_kl_at_prior_is_zero():
    var = VariableSpec.variational(m=[0.0, 0.0], rho=inv_softplus([1.0, 1.0]))
    assert abs(float(kl_to_prior(var))) <= 1e-14


def test_kl_shifted_mean():
    var = VariableSpec.variational(m=[1.0], rho=inv_softplus([1.0]))
    assert float(kl_to_prior(var)) == pytest.approx(0.5, abs=1e-14)


def test_kl_matches_monte_carlo():
    rng = np.random.default_rng(2)
    m, rho = rng.standard_normal(3), rng.standard_normal(3)
    mu_p, sd_p = 0.4, 1.6
    var = VariableSpec.variational(Normal(mu_p, sd_p), m=m, rho=rho)
    sigma = np.log1p(np.exp(rho))
    n = 1_000_000
    z = rng.standard_normal((n, 3))
    theta = m + sigma * z
    log_q = np.sum(-0.5 * z * z - np.log(sigma), axis=1)
    log_p = np.sum(-0.5 * ((theta - mu_p) / sd_p) ** 2 - math.log(sd_p), axis=1)
    diff = log_q - log_p
    se = diff.std() / math.sqrt(n)
    assert abs(float(kl_to_prior(var)) - diff.mean()) <= 3 * se


@given(seed=st.integers(0, 2 ** 16))
def test_kl_nonnegative(seed):
    rng = np.random.default_rng(seed)
    var = VariableSpec.variational(Normal(rng.normal(), rng.uniform(0.1, 3)),
                                   m=rng.standard_normal(4), rho=rng.standard_normal(4))
    assert float(kl_to_prior(var)) >= 0.0


def test_kl_needs_normal_prior():
    with pytest.raises(FamilyMismatch):
        kl_to_prior(VariableSpec.variational(LogNormal(), m=[1.0], rho=[0.0]))


def test_duplicate_keys_rejected():
    p = Process("u", FnnSpec((1, 2, 1)), VariableSpec.samplable())
    q = Process("u", IdentitySpec(1), VariableSpec.samplable())
    with pytest.raises(DuplicateProcessKey):
        UqModel([p, q])


def test_variational_params_length_checked():
    with pytest.raises(ValueError):
        Process("u", IdentitySpec(2), VariableSpec.variational(m=[0.0], rho=[0.0]))


def test_prior_samples_in_support():
    rng = np.random.default_rng(0)
    for prior in (HalfNormal(2.0), LogNormal(0.0, 1.0)):
        assert prior.in_support(prior.sample(rng, 1000))
