"""Priors, parameter treatments and processes.

A :class:`Process` pairs a surrogate with a :class:`VariableSpec` saying how
its parameters are handled:

* ``samplable`` - a prior, sampled by MCMC;
* ``variational`` - a prior plus a diagonal Gaussian ``q = N(m, softplus(rho)^2)``;
* ``trainable`` - point-optimized, with an optional L2 weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .errors import DuplicateProcessKey, FamilyMismatch

LOG_2PI = math.log(2.0 * math.pi)
FAMILIES = ("samplable", "variational", "trainable")


def _values(theta):
    return theta.value if isinstance(theta, Var) else np.asarray(theta, dtype=float)


@dataclass(frozen=True)
class Normal:
    mu: float = 0.0
    sigma: float = 1.0

    def in_support(self, theta) -> bool:
        return True

    def log_prob(self, theta):
        n = np.size(_values(theta))
        z = (theta - self.mu) / self.sigma
        const = -n * 0.5 * LOG_2PI - np.sum(np.log(np.broadcast_to(self.sigma, (n,))))
        return const - 0.5 * ad.asum(z * z)

    def sample(self, rng, n):
        return self.mu + self.sigma * rng.standard_normal(n)


@dataclass(frozen=True)
class HalfNormal:
    sigma: float = 1.0

    def in_support(self, theta) -> bool:
        return bool(np.all(_values(theta) >= 0.0))

    def log_prob(self, theta):
        n = np.size(_values(theta))
        z = theta / self.sigma
        const = n * (math.log(2.0) - 0.5 * LOG_2PI - math.log(self.sigma))
        return const - 0.5 * ad.asum(z * z)

    def sample(self, rng, n):
        return np.abs(self.sigma * rng.standard_normal(n))


@dataclass(frozen=True)
class LogNormal:
    """Density of a positive quantity whose logarithm is ``N(mu, sigma^2)``."""

    mu: float = 0.0
    sigma: float = 1.0

    def in_support(self, theta) -> bool:
        return bool(np.all(_values(theta) > 0.0))

    def log_prob(self, theta):
        n = np.size(_values(theta))
        logt = ad.log(theta)
        z = (logt - self.mu) / self.sigma
        const = -n * (0.5 * LOG_2PI + math.log(self.sigma))
        return const - 0.5 * ad.asum(z * z) - ad.asum(logt)

    def sample(self, rng, n):
        return np.exp(self.mu + self.sigma * rng.standard_normal(n))


PRIORS = {"normal": Normal, "halfnormal": HalfNormal, "lognormal": LogNormal}


@dataclass(frozen=True)
class VariableSpec:
    family: str
    prior: object = None
    m: np.ndarray | None = field(default=None, compare=False)
    rho: np.ndarray | None = field(default=None, compare=False)
    l2_weight: float = 0.0
    init: str = "default"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "trainable":
            if self.prior is not None or self.m is not None or self.rho is not None:
                raise FamilyMismatch("trainable variables carry no prior or variational parameters")
        else:
            if self.prior is None:
                raise FamilyMismatch(f"{self.family} variables need a prior")
            if self.family == "samplable" and (self.m is not None or self.rho is not None):
                raise FamilyMismatch("samplable variables carry no variational parameters")
            if (self.m is None) != (self.rho is None):
                raise ValueError("give both m and rho, or neither")

    @classmethod
    def samplable(cls, prior=None) -> VariableSpec:
        return cls("samplable", prior=Normal() if prior is None else prior)

    @classmethod
    def variational(cls, prior=None, m=None, rho=None) -> VariableSpec:
        return cls("variational", prior=Normal() if prior is None else prior,
                   m=None if m is None else np.asarray(m, dtype=float),
                   rho=None if rho is None else np.asarray(rho, dtype=float))

    @classmethod
    def trainable(cls, l2_weight: float = 0.0, init: str = "default") -> VariableSpec:
        return cls("trainable", l2_weight=l2_weight, init=init)


@dataclass(frozen=True)
class Process:
    key: str
    surrogate: object
    variable: VariableSpec

    def __post_init__(self):
        n = self.surrogate.n_params
        for name in ("m", "rho"):
            v = getattr(self.variable, name)
            if v is not None and np.shape(v) != (n,):
                raise ValueError(f"process {self.key!r}: {name} must have length {n}")

    @property
    def n_params(self) -> int:
        return self.surrogate.n_params

    def with_variable(self, variable: VariableSpec) -> Process:
        return Process(self.key, self.surrogate, variable)


def check_unique_keys(processes) -> None:
    seen = set()
    for p in processes:
        if p.key in seen:
            raise DuplicateProcessKey(f"duplicate process key {p.key!r}")
        seen.add(p.key)


def log_prior(var: VariableSpec, theta):
    """Log prior density with normalization; ``-inf`` outside the support."""
    if var.family == "trainable":
        raise FamilyMismatch("trainable variables have no prior")
    if not var.prior.in_support(theta):
        return -math.inf
    return var.prior.log_prob(theta)


def inv_softplus(s):
    s = np.asarray(s, dtype=float)
    return np.where(s > 30.0, s, np.log(np.expm1(np.minimum(s, 30.0))))


def reparameterize(m, rho, noise):
    return m + ad.softplus(rho) * noise


def variational_sample(var: VariableSpec, noise):
    """``m + softplus(rho) * noise``; ``noise`` may hold one draw per row."""
    if var.family != "variational":
        raise FamilyMismatch("variational_sample needs a variational variable")
    noise = np.asarray(noise, dtype=float)
    if noise.shape[-1:] != np.shape(var.m):
        raise ValueError(f"noise has shape {noise.shape}, expected {np.shape(var.m)}")
    return reparameterize(var.m, var.rho, noise)


def diag_gaussian_logpdf(theta, m, sigma) -> float:
    theta, m, sigma = (np.asarray(a, dtype=float) for a in (theta, m, sigma))
    z = (theta - m) / sigma
    return float(-0.5 * np.sum(z * z) - np.sum(np.log(sigma)) - 0.5 * theta.size * LOG_2PI)


def gaussian_kl(m_q, sigma_q, mu_p, sigma_p):
    """KL(N(m_q, sigma_q^2) || N(mu_p, sigma_p^2)) summed over coordinates."""
    d = m_q - mu_p
    terms = (ad.log(sigma_p / sigma_q) + (sigma_q * sigma_q + d * d) / (2.0 * sigma_p * sigma_p)
             - 0.5)
    return ad.asum(terms)


def kl_to_prior(var: VariableSpec, m=None, rho=None):
    """Analytic KL from the variational Gaussian to a Normal prior."""
    if var.family != "variational" or not isinstance(var.prior, Normal):
        raise FamilyMismatch("kl_to_prior needs a variational variable with a Normal prior")
    m = var.m if m is None else m
    rho = var.rho if rho is None else rho
    sigma_p = np.broadcast_to(np.asarray(var.prior.sigma, dtype=float), np.shape(_values(m)))
    return gaussian_kl(m, ad.softplus(rho), var.prior.mu, sigma_p)
