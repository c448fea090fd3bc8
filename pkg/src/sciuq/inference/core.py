"""Run configuration, the samples container, the optimizer and samples files."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, NonFiniteValue

METHODS = ("dens", "hmc", "la", "ld", "mala", "mcd", "mfvi", "sens")


@dataclass
class InferenceConfig:
    method: str = "hmc"
    n_samples: int = 1000
    # None -> a quarter of n_samples, i.e. 20% of all iterations
    burn_in: int | None = None
    thinning: int = 1
    step_size: float = 0.01
    leapfrog_steps: int = 30
    lr: float = 1e-3
    iterations: int = 5000
    ensemble_size: int = 5
    dropout_rate: float = 0.05
    cycles: int = 5
    l2_weight: float = 0.0
    # Adam iterations on the negative log posterior before sampling starts
    warm_start: int = 0
    init_std: float = 0.01
    polish: int = 0
    seed: int = 0
    # independent chains with seeds seed, seed + 1, ..., pooled row-wise
    chains: int = 1
    threads: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be at least 1")
        if not self.step_size > 0:
            raise ConfigError("step_size must be positive")
        if self.leapfrog_steps < 1:
            raise ConfigError("leapfrog_steps must be at least 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must lie in [0, 1)")
        if min(self.thinning, self.cycles, self.ensemble_size, self.chains, self.threads) < 1:
            raise ConfigError("thinning, cycles, ensemble_size, chains and threads must be at least 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn_in must be non-negative")

    @property
    def n_burn(self) -> int:
        return self.n_samples // 4 if self.burn_in is None else self.burn_in

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class PosteriorSamples:
    samples: np.ndarray
    method: str
    seed: int = 0
    acceptance_rate: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if not np.isfinite(self.samples).all():
            raise NonFiniteValue("posterior samples contain NaN or Inf")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_params(self) -> int:
        return self.samples.shape[1]

    def mean(self):
        return self.samples.mean(axis=0)

    def std(self):
        return self.samples.std(axis=0)


class Adam:
    """Adam for minimization, with an optional per-step learning rate."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, params, grad, lr=None):
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        mhat = self.m / (1 - self.beta1 ** self.t)
        vhat = self.v / (1 - self.beta2 ** self.t)
        lr = self.lr if lr is None else lr
        return params - lr * mhat / (np.sqrt(vhat) + self.eps)


def minimize(value_and_grad, x0, iterations, lr, lr_schedule=None, callback=None):
    """Plain Adam loop; returns the final iterate and the loss trace."""
    opt = Adam(lr)
    x = np.array(x0, dtype=float)
    trace = np.empty(iterations)
    for t in range(iterations):
        value, g = value_and_grad(x, t)
        if not math.isfinite(value) or not np.isfinite(g).all():
            raise NonFiniteValue(f"objective became non-finite at iteration {t}")
        trace[t] = value
        x = opt.step(x, g, None if lr_schedule is None else lr_schedule(t))
        if callback is not None:
            callback(t, x)
    return x, trace


# ---------------------------------------------------------------------------
# samples files


def _fmt(v) -> str:
    return "none" if v is None else f"{v:.17g}"


def write_samples(path, ps: PosteriorSamples) -> None:
    header = f"# method={ps.method} seed={ps.seed} acceptance_rate={_fmt(ps.acceptance_rate)}"
    cols = ",".join(f"theta_{i}" for i in range(ps.n_params))
    rows = "\n".join(",".join(f"{v:.17g}" for v in row) for row in ps.samples)
    Path(path).write_text(f"{header}\n{cols}\n{rows}\n")


def read_samples(path) -> PosteriorSamples:
    lines = Path(path).read_text().splitlines()
    meta = dict(item.split("=", 1) for item in lines[0].lstrip("# ").split())
    rate = None if meta["acceptance_rate"] == "none" else float(meta["acceptance_rate"])
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()])
    return PosteriorSamples(data, meta["method"], int(meta["seed"]), rate)
