"""Optimization-based methods: MFVI, MC dropout, ensembles and Laplace."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import autodiff as ad
from ..errors import DivergedElbo, InferenceError, MemberDiverged, NonFiniteValue
from ..likelihoods import OperatorTarget, UqModel
from ..processes import LOG_2PI, Normal, gaussian_kl, inv_softplus
from .core import InferenceConfig, PosteriorSamples, minimize

log = logging.getLogger(__name__)


class NonPositiveCurvature(UserWarning):
    """Laplace curvature had entries with no data information."""


# ---------------------------------------------------------------------------
# mean-field variational inference


def _prior_arrays(model: UqModel):
    mu = np.zeros(model.n_params)
    sd = np.ones(model.n_params)
    normal = np.ones(model.n_params, dtype=bool)
    for p in model.processes:
        s = model.slice(p.key)
        if isinstance(p.variable.prior, Normal):
            mu[s] = p.variable.prior.mu
            sd[s] = p.variable.prior.sigma
        else:
            normal[s] = False
    return mu, sd, normal


def _initial_variational(model: UqModel, cfg, rng):
    m = model.init_params(rng)
    rho = np.full(model.n_params, float(inv_softplus(cfg.init_std)))
    for p in model.processes:
        s = model.slice(p.key)
        if p.variable.m is not None:
            m[s] = p.variable.m
            rho[s] = p.variable.rho
    return m, rho


def elbo(model: UqModel, m, rho, noise):
    """Single-sample ELBO: log-likelihood at one reparameterized draw minus KL.

    The KL is analytic for Normal priors; other priors contribute the
    single-sample estimate ``log q(theta) - log p(theta)``.
    """
    mu_p, sd_p, normal = _prior_arrays(model)
    sigma = ad.softplus(rho)
    theta = m + sigma * noise
    value = model.log_likelihood(theta)
    if normal.all():
        return value - gaussian_kl(m, sigma, mu_p, sd_p)
    idx = np.flatnonzero(normal)
    if idx.size:
        value = value - gaussian_kl(m[idx], sigma[idx], mu_p[idx], sd_p[idx])
    for p in model.processes:
        if isinstance(p.variable.prior, Normal):
            continue
        s = model.slice(p.key)
        log_q = (-0.5 * ad.asum(noise[s] * noise[s]) - ad.asum(ad.log(sigma[s]))
                 - 0.5 * p.n_params * LOG_2PI)
        value = value + p.variable.prior.log_prob(theta[s]) - log_q
    return value


def mfvi_run(model: UqModel, cfg: InferenceConfig):
    """Returns ``((m, rho), samples)`` with ``samples`` drawn from the trained q."""
    rng = np.random.default_rng(cfg.seed)
    m, rho = _initial_variational(model, cfg, rng)
    n = model.n_params
    phi = np.concatenate([m, rho])

    def neg_elbo(x, t):
        noise = rng.standard_normal(n)
        try:
            v, g = ad.grad(lambda ph: -elbo(model, ph[:n], ph[n:], noise), x)
        except NonFiniteValue as exc:
            raise DivergedElbo(f"ELBO became non-finite at iteration {t}") from exc
        return v, g

    try:
        phi, trace = minimize(neg_elbo, phi, cfg.iterations, cfg.lr)
    except NonFiniteValue as exc:
        raise DivergedElbo(str(exc)) from exc
    m, rho = phi[:n], phi[n:]
    sigma = np.logaddexp(0.0, rho)
    draws = m + sigma * rng.standard_normal((cfg.n_samples, n))
    ps = PosteriorSamples(draws, "mfvi", cfg.seed, None,
                          {"elbo": -trace, "m": m, "sigma": sigma})
    return (m, rho), ps


# ---------------------------------------------------------------------------
# Monte Carlo dropout


def dropout_scales(model: UqModel, rng, rate):
    scale = np.ones(model.n_params)
    for p in model.processes:
        if hasattr(p.surrogate, "dropout_scale"):
            scale[model.slice(p.key)] = p.surrogate.dropout_scale(rng, rate)
    return scale


def mcd_run(model: UqModel, cfg: InferenceConfig) -> PosteriorSamples:
    """Train with inverted dropout, then draw ``n_samples`` dropout masks.

    A dropout mask on hidden units is folded into the next layer's weights,
    so every prediction sample is an ordinary parameter vector.
    """
    rng = np.random.default_rng(cfg.seed)
    theta0 = model.init_params(rng)
    rate = cfg.dropout_rate

    def objective(x, t):
        scale = dropout_scales(model, rng, rate)

        def loss(th):
            value = model.mse_loss(th * scale)
            if cfg.l2_weight:
                value = value + cfg.l2_weight * ad.asum(th * th)
            return value
        return ad.grad(loss, x)

    try:
        theta, trace = minimize(objective, theta0, cfg.iterations, cfg.lr)
    except NonFiniteValue as exc:
        raise InferenceError(f"mcd training diverged: {exc}") from exc
    draws = np.array([theta * dropout_scales(model, rng, rate) for _ in range(cfg.n_samples)])
    return PosteriorSamples(draws, "mcd", cfg.seed, None, {"loss": trace, "trained": theta})


# ---------------------------------------------------------------------------
# ensembles


def _train(model: UqModel, theta0, cfg, lr_schedule=None, callback=None):
    def objective(x, t):
        return model.loss_and_grad(x)
    return minimize(objective, theta0, cfg.iterations, cfg.lr, lr_schedule, callback)


def dens_run(model: UqModel, cfg: InferenceConfig) -> PosteriorSamples:
    """Independent trainings from initializations seeded ``seed + i``."""

    def member(i):
        rng = np.random.default_rng(cfg.seed + i)
        try:
            theta, trace = _train(model, model.init_params(rng), cfg)
        except NonFiniteValue as exc:
            return MemberDiverged(f"member {i}: {exc}")
        return theta, trace[-1]

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(member, range(cfg.ensemble_size)))
    else:
        results = [member(i) for i in range(cfg.ensemble_size)]
    ok = [r for r in results if not isinstance(r, Exception)]
    failed = [str(r) for r in results if isinstance(r, Exception)]
    for msg in failed:
        log.warning("dens %s", msg)
    if not ok:
        raise InferenceError("every ensemble member diverged")
    return PosteriorSamples(np.array([r[0] for r in ok]), "dens", cfg.seed, None,
                            {"final_loss": np.array([r[1] for r in ok]), "diverged": failed})


def cyclic_cosine_lr(lr0, t, cycle_len):
    """Learning rate at 0-based iteration ``t``; reaches zero at each cycle end."""
    t_in = t % cycle_len + 1
    return 0.5 * lr0 * (1.0 + math.cos(math.pi * t_in / cycle_len))


def sens_run(model: UqModel, cfg: InferenceConfig) -> PosteriorSamples:
    """One training run, snapshotting the parameters at every cycle end."""
    cycle_len = cfg.iterations // cfg.cycles
    if cycle_len < 1:
        raise InferenceError("iterations must be at least the number of cycles")
    rng = np.random.default_rng(cfg.seed)
    snaps = []

    def grab(t, x):
        if (t + 1) % cycle_len == 0 and len(snaps) < cfg.cycles:
            snaps.append(x.copy())

    sub = InferenceConfig(**{**cfg.to_dict(), "iterations": cycle_len * cfg.cycles})
    try:
        _, trace = _train(model, model.init_params(rng), sub,
                          lambda t: cyclic_cosine_lr(cfg.lr, t, cycle_len), grab)
    except NonFiniteValue as exc:
        raise InferenceError(f"sens training diverged: {exc}") from exc
    return PosteriorSamples(np.array(snaps), "sens", cfg.seed, None, {"loss": trace})


# ---------------------------------------------------------------------------
# Laplace


def neg_log_map(model: UqModel, theta):
    """Negative log-likelihood plus a standard-normal prior penalty."""
    return -model.log_likelihood(theta) + 0.5 * ad.asum(theta * theta)


def gauss_newton_diag(model: UqModel, theta) -> np.ndarray:
    diag = np.zeros(model.n_params)
    for term in model.terms:
        _, jac = ad.jacobian(lambda t: model.predictions(term, t), theta)
        sigma = np.broadcast_to(term.dataset.noise_std, term.dataset.targets.shape)
        if isinstance(term.target, OperatorTarget):
            sigma = np.full(term.dataset.targets.shape, float(term.dataset.noise_std[0]))
        diag += np.sum(jac * jac / sigma.reshape(-1, 1) ** 2, axis=0)
    return diag


def la_run(model: UqModel, cfg: InferenceConfig) -> PosteriorSamples:
    """MAP training, then a diagonal Gauss-Newton Gaussian around the mode."""
    rng = np.random.default_rng(cfg.seed)

    def objective(x, t):
        return ad.grad(lambda th: neg_log_map(model, th), x)

    try:
        theta, trace = minimize(objective, model.init_params(rng), cfg.iterations, cfg.lr)
    except NonFiniteValue as exc:
        raise InferenceError(f"la training diverged: {exc}") from exc
    if cfg.polish:
        theta = _polish(lambda th: objective(th, 0), theta, cfg.polish)
    ggn = gauss_newton_diag(model, theta)
    flat = ggn <= 0.0
    if flat.any():
        warnings.warn(f"{int(flat.sum())} parameters have no curvature from the data; "
                      "using the prior precision there", NonPositiveCurvature, stacklevel=2)
    precision = np.where(flat, 1.0, ggn + 1.0)
    std = 1.0 / np.sqrt(precision)
    draws = theta + std * rng.standard_normal((cfg.n_samples, model.n_params))
    return PosteriorSamples(draws, "la", cfg.seed, None,
                            {"mode": theta, "std": std, "loss": trace})


def _polish(value_and_grad, x0, maxiter):
    from scipy.optimize import minimize as sp_minimize

    res = sp_minimize(value_and_grad, x0, jac=True, method="L-BFGS-B",
                      options={"maxiter": maxiter, "gtol": 1e-12, "ftol": 1e-15})
    return res.x
