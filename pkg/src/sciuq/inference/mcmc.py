"""Gradient-based MCMC: HMC, MALA and unadjusted Langevin dynamics.

Samplers accept any target exposing ``n_params``, ``init_params(rng)`` and
``log_posterior_and_grad(theta) -> (float, ndarray)``; a log density of
``-inf`` marks points outside the prior support.  All three use an identity
mass matrix and a fixed step size.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from ..errors import InferenceError, NonFiniteValue, ZeroAcceptance
from .core import InferenceConfig, PosteriorSamples, minimize

log = logging.getLogger(__name__)

MIN_ACCEPTANCE = 0.01


def leapfrog(grad_logp, theta, p, eps, n_steps):
    """``n_steps`` half-kick / drift / half-kick steps; returns ``(theta, p)``."""
    if eps <= 0 or n_steps < 1:
        raise ValueError("need eps > 0 and at least one step")
    theta = np.array(theta, dtype=float)
    p = np.array(p, dtype=float)
    for _ in range(n_steps):
        p = p + 0.5 * eps * grad_logp(theta)
        theta = theta + eps * p
        p = p + 0.5 * eps * grad_logp(theta)
        if not (np.isfinite(theta).all() and np.isfinite(p).all()):
            raise NonFiniteValue("leapfrog trajectory diverged")
    return theta, p


def _trajectory(vg, theta, p, logp, g, eps, n_steps):
    """Leapfrog that reuses the gradient at the start point.

    Returns ``None`` when the trajectory leaves the support or diverges.
    """
    p = p + 0.5 * eps * g
    for i in range(n_steps):
        theta = theta + eps * p
        try:
            logp, g = vg(theta)
        except NonFiniteValue:
            return None
        if logp == -math.inf or not np.isfinite(g).all():
            return None
        p = p + (eps if i < n_steps - 1 else 0.5 * eps) * g
        if not np.isfinite(p).all() or np.abs(p).max() > 1e150:
            return None
    return theta, p, logp, g


def initial_state(target, cfg: InferenceConfig, rng):
    theta = np.asarray(target.init_params(rng), dtype=float)
    if cfg.warm_start > 0:
        def neg(x, t):
            v, g = target.log_posterior_and_grad(x)
            if v == -math.inf:
                raise NonFiniteValue("warm start left the prior support")
            return -v, -g
        theta, _ = minimize(neg, theta, cfg.warm_start, cfg.lr)
    logp, g = target.log_posterior_and_grad(theta)
    if logp == -math.inf:
        raise InferenceError("initial point lies outside the prior support")
    return theta, logp, g


def _finish(method, cfg, kept, accepted, trace, n_kept_iters):
    rate = accepted / n_kept_iters if n_kept_iters else None
    if rate is not None and rate < MIN_ACCEPTANCE:
        raise ZeroAcceptance(
            f"{method}: acceptance rate {rate:.4f} after burn-in; reduce step_size")
    return PosteriorSamples(np.array(kept), method, cfg.seed, rate,
                            {"log_posterior": np.array(trace)})


def hmc_run(target, cfg: InferenceConfig) -> PosteriorSamples:
    rng = np.random.default_rng(cfg.seed)
    vg = target.log_posterior_and_grad
    theta, logp, g = initial_state(target, cfg, rng)
    eps, n_steps = cfg.step_size, cfg.leapfrog_steps
    total = cfg.n_burn + cfg.n_samples * cfg.thinning
    kept, trace = [], []
    accepted = 0
    for it in range(total):
        p0 = rng.standard_normal(theta.shape)
        log_u = math.log(rng.uniform())
        h0 = -logp + 0.5 * p0 @ p0
        prop = _trajectory(vg, theta, p0, logp, g, eps, n_steps)
        ok = False
        if prop is not None:
            h1 = -prop[2] + 0.5 * prop[1] @ prop[1]
            ok = math.isfinite(h1) and log_u < h0 - h1
        if ok:
            theta, _, logp, g = prop
        post = it >= cfg.n_burn
        if post:
            accepted += ok
            if (it - cfg.n_burn) % cfg.thinning == cfg.thinning - 1:
                kept.append(theta.copy())
                trace.append(logp)
    return _finish("hmc", cfg, kept, accepted, trace, total - cfg.n_burn)


def _mala_logq(to, frm, g_frm, eps):
    d = to - frm - 0.5 * eps * eps * g_frm
    return -(d @ d) / (2.0 * eps * eps)


def mala_run(target, cfg: InferenceConfig) -> PosteriorSamples:
    rng = np.random.default_rng(cfg.seed)
    vg = target.log_posterior_and_grad
    theta, logp, g = initial_state(target, cfg, rng)
    eps = cfg.step_size
    total = cfg.n_burn + cfg.n_samples * cfg.thinning
    kept, trace = [], []
    accepted = 0
    for it in range(total):
        z = rng.standard_normal(theta.shape)
        log_u = math.log(rng.uniform())
        prop = theta + 0.5 * eps * eps * g + eps * z
        ok = False
        try:
            logp_new, g_new = vg(prop)
        except NonFiniteValue:
            logp_new = -math.inf
        if logp_new > -math.inf and np.isfinite(g_new).all():
            log_alpha = (logp_new - logp + _mala_logq(theta, prop, g_new, eps)
                         - _mala_logq(prop, theta, g, eps))
            ok = log_u < log_alpha
        if ok:
            theta, logp, g = prop, logp_new, g_new
        if it >= cfg.n_burn:
            accepted += ok
            if (it - cfg.n_burn) % cfg.thinning == cfg.thinning - 1:
                kept.append(theta.copy())
                trace.append(logp)
    return _finish("mala", cfg, kept, accepted, trace, total - cfg.n_burn)


def ld_run(target, cfg: InferenceConfig) -> PosteriorSamples:
    """One leapfrog step per iterate with fresh momentum and no MH correction.

    The chain is biased for any finite step size.  A step that leaves the
    prior support is discarded (the chain stays put) since there is no
    acceptance test to fall back on.
    """
    rng = np.random.default_rng(cfg.seed)
    vg = target.log_posterior_and_grad
    theta, logp, g = initial_state(target, cfg, rng)
    eps = cfg.step_size
    total = cfg.n_burn + cfg.n_samples * cfg.thinning
    kept, trace = [], []
    moved = 0
    for it in range(total):
        p = rng.standard_normal(theta.shape)
        prop = theta + eps * p + 0.5 * eps * eps * g
        try:
            logp_new, g_new = vg(prop)
        except NonFiniteValue as exc:
            raise InferenceError(f"ld diverged at iteration {it}: {exc}") from exc
        if logp_new > -math.inf:
            theta, logp, g = prop, logp_new, g_new
            moved += it >= cfg.n_burn
        if it >= cfg.n_burn and (it - cfg.n_burn) % cfg.thinning == cfg.thinning - 1:
            kept.append(theta.copy())
            trace.append(logp)
    n_post = total - cfg.n_burn
    return PosteriorSamples(np.array(kept), "ld", cfg.seed, None,
                            {"log_posterior": np.array(trace),
                             "moved_fraction": moved / n_post if n_post else None})
