"""Datasets, likelihood terms and the model that ties processes to data.

A :class:`UqModel` owns a list of processes (parameters laid out back to back
in one flat vector, in process order) and a list of :class:`Term` objects.
Each term compares a dataset against one of three kinds of predictions:

* :class:`Direct` - a process output, optionally one component of it;
* :class:`ResidualFn` - a differential operator applied through jets;
* :class:`OperatorTarget` - a DeepONet applied to sensor values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import autodiff as ad
from .autodiff import Var
from .errors import (DimensionMismatch, EmptyDataset, FamilyMismatch, RaggedSensors,
                     ShapeMismatch, UnknownProcessKey)
from .processes import LOG_2PI, Normal, Process, VariableSpec, check_unique_keys, log_prior
from .surrogates import DeepONetSpec, axis_seed

TAGS = ("u", "f", "b", "lambda")


@dataclass
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    noise_std: float | np.ndarray = 1.0
    tag: str = "u"

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        if self.inputs.ndim == 1:
            self.inputs = self.inputs.reshape(-1, 1)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.targets.ndim == 1:
            self.targets = self.targets.reshape(-1, 1)
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ShapeMismatch(
                f"{self.inputs.shape[0]} input rows but {self.targets.shape[0]} target rows")
        if self.tag not in TAGS:
            raise ValueError(f"unknown dataset tag {self.tag!r}")
        self.noise_std = np.broadcast_to(np.asarray(self.noise_std, dtype=float),
                                         (self.targets.shape[1],)).copy()

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def n_outputs(self):
        return self.targets.shape[1]


@dataclass
class OperatorDataset:
    """Input functions sampled at shared sensors and outputs at shared locations."""

    sensors: np.ndarray
    sensor_locations: np.ndarray
    locations: np.ndarray
    targets: np.ndarray
    noise_std: float = 1.0
    tag: str = "u"

    def __post_init__(self):
        rows = list(self.sensors) if not isinstance(self.sensors, np.ndarray) else None
        if rows is not None and len({len(r) for r in rows}) > 1:
            raise RaggedSensors("input functions are sampled at different sensor counts")
        self.sensors = np.asarray(self.sensors, dtype=float)
        self.sensor_locations = np.asarray(self.sensor_locations, dtype=float)
        if self.sensors.ndim != 2 or self.sensors.shape[1] != self.sensor_locations.shape[0]:
            raise RaggedSensors("sensor values do not match the shared sensor grid")
        self.locations = np.asarray(self.locations, dtype=float)
        if self.locations.ndim == 1:
            self.locations = self.locations.reshape(-1, 1)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.targets.shape != (self.sensors.shape[0], self.locations.shape[0]):
            raise ShapeMismatch("targets must be (n_functions, n_locations)")
        self.noise_std = np.asarray(float(self.noise_std)).reshape(1)

    def __len__(self):
        return self.targets.size

    @property
    def n_functions(self):
        return self.sensors.shape[0]

    def subset(self, idx) -> OperatorDataset:
        return OperatorDataset(self.sensors[idx], self.sensor_locations, self.locations,
                               self.targets[idx], float(self.noise_std[0]), self.tag)


# ---------------------------------------------------------------------------
# prediction targets


@dataclass(frozen=True)
class Direct:
    key: str
    component: int | None = None


@dataclass(frozen=True)
class OperatorTarget:
    key: str


class Field:
    """Values and axis derivatives of one process at a batch of points."""

    def __init__(self, value, jets):
        self.value = value
        self._jets = jets

    def d(self, k: int = 1, axis: int = 0):
        if k == 0:
            return self.value
        jet = self._jets.get(axis)
        if jet is None or jet.order < k:
            raise ValueError(f"derivative of order {k} along axis {axis} was not declared")
        return jet.derivative(k)


@dataclass(frozen=True)
class ResidualFn:
    """``fn(x, fields) -> residual`` where ``fields[key]`` is a :class:`Field`.

    ``reads`` maps each process key to the highest derivative order the
    residual takes of it; ``axes`` limits which input axes get jets.
    """

    fn: Callable
    reads: dict = field(default_factory=dict)
    axes: tuple | None = None
    name: str = "residual"

    def __post_init__(self):
        for key, order in self.reads.items():
            if not 0 <= order <= ad.MAX_ORDER:
                raise ValueError(f"jet order {order} for {key!r} is out of range")

    def __hash__(self):
        return id(self)


@dataclass
class Term:
    dataset: Dataset | OperatorDataset
    target: Direct | ResidualFn | OperatorTarget
    weight: float = 1.0

    @property
    def n_obs(self):
        if isinstance(self.dataset, OperatorDataset):
            return self.dataset.targets.size
        return len(self.dataset)


# ---------------------------------------------------------------------------
# the model


class UqModel:
    def __init__(self, processes, terms=()):
        self.processes = list(processes)
        check_unique_keys(self.processes)
        self.terms = list(terms)
        self._slices = {}
        off = 0
        for p in self.processes:
            self._slices[p.key] = slice(off, off + p.n_params)
            off += p.n_params
        self.n_params = off
        for t in self.terms:
            keys = t.target.reads if isinstance(t.target, ResidualFn) else [t.target.key]
            for key in keys:
                if key not in self._slices:
                    raise UnknownProcessKey(f"term reads unknown process {key!r}")

    def __repr__(self):
        return f"UqModel({[p.key for p in self.processes]}, {len(self.terms)} terms)"

    def process(self, key) -> Process:
        for p in self.processes:
            if p.key == key:
                return p
        raise UnknownProcessKey(f"no process {key!r}")

    def slice(self, key) -> slice:
        try:
            return self._slices[key]
        except KeyError:
            raise UnknownProcessKey(f"no process {key!r}") from None

    def params_of(self, theta, key):
        return theta[self.slice(key)]

    @property
    def family(self) -> str:
        families = {p.variable.family for p in self.processes}
        if len(families) != 1:
            raise FamilyMismatch(f"model mixes families {sorted(families)}")
        return families.pop()

    def with_family(self, family: str) -> UqModel:
        """Same surrogates and terms with every variable moved to ``family``."""
        procs = []
        for p in self.processes:
            v = p.variable
            prior = v.prior if v.prior is not None else Normal()
            if family == "samplable":
                nv = VariableSpec.samplable(prior)
            elif family == "variational":
                nv = VariableSpec.variational(prior)
            else:
                nv = VariableSpec.trainable(v.l2_weight, v.init)
            procs.append(p.with_variable(nv))
        return UqModel(procs, self.terms)

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        parts = []
        for p in self.processes:
            prior = p.variable.prior
            if prior is not None and not isinstance(prior, Normal):
                parts.append(prior.sample(rng, p.n_params))
            else:
                parts.append(p.surrogate.init_params(rng))
        return np.concatenate(parts) if parts else np.zeros(0)

    # -- predictions -------------------------------------------------------

    def predictions(self, term: Term, theta):
        tgt = term.target
        if isinstance(tgt, Direct):
            proc = self.process(tgt.key)
            out = proc.surrogate(self.params_of(theta, tgt.key), term.dataset.inputs)
            if tgt.component is not None:
                out = out[:, tgt.component:tgt.component + 1]
            return out
        if isinstance(tgt, ResidualFn):
            return residual_eval(tgt, self, theta, term.dataset.inputs)
        if isinstance(tgt, OperatorTarget):
            proc = self.process(tgt.key)
            ds = term.dataset
            return proc.surrogate(self.params_of(theta, tgt.key), ds.sensors, ds.locations)
        raise TypeError(f"unknown target type {type(tgt).__name__}")

    def evaluate(self, key, theta, x):
        """Plain output of process ``key`` at points ``x``."""
        proc = self.process(key)
        return np.asarray(proc.surrogate.eval(np.asarray(self.params_of(theta, key)), x))

    # -- densities and losses ------------------------------------------------

    def log_likelihood(self, theta):
        total = 0.0
        for term in self.terms:
            total = total + normal_loglik(term.dataset, self.predictions(term, theta))
        return total

    def log_prior(self, theta):
        total = 0.0
        for p in self.processes:
            lp = log_prior(p.variable, self.params_of(theta, p.key))
            if isinstance(lp, float) and lp == -math.inf:
                return -math.inf
            total = total + lp
        return total

    def in_support(self, theta) -> bool:
        values = np.asarray(theta.value if isinstance(theta, Var) else theta)
        for p in self.processes:
            prior = p.variable.prior
            if prior is not None and not prior.in_support(values[self.slice(p.key)]):
                return False
        return True

    def log_posterior(self, theta):
        return log_posterior(self, theta)

    def log_posterior_and_grad(self, theta):
        theta = np.asarray(theta, dtype=float)
        if not self.in_support(theta):
            return -math.inf, np.zeros_like(theta)
        return ad.grad(lambda t: log_posterior(self, t), theta)

    def mse_loss(self, theta, weights=None):
        return mse_loss(self, theta, weights)

    def loss_and_grad(self, theta):
        return ad.grad(lambda t: mse_loss(self, t), np.asarray(theta, dtype=float))


def normal_loglik(ds, predictions):
    """Gaussian log-likelihood of ``ds.targets`` around ``predictions``."""
    targets = ds.targets
    if np.shape(predictions) != targets.shape:
        raise ShapeMismatch(f"predictions {np.shape(predictions)} vs targets {targets.shape}")
    sigma = ds.noise_std
    if np.any(sigma <= 0):
        raise ValueError("noise_std must be positive for a likelihood")
    n = targets.shape[0]
    r = (predictions - targets) / sigma
    const = -n * float(np.sum(np.log(sigma))) - 0.5 * targets.size * LOG_2PI
    return const - 0.5 * ad.asum(r * r)


def residual_eval(fn: ResidualFn, model: UqModel, theta, points):
    """Residual values at ``points``; nothing is subtracted."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    fields = {}
    for key, order in fn.reads.items():
        proc = model.process(key)
        params = model.params_of(theta, key)
        if proc.surrogate.input_dim != points.shape[1]:
            raise DimensionMismatch(f"process {key!r} expects {proc.surrogate.input_dim}-D points")
        if order == 0:
            fields[key] = Field(proc.surrogate(params, points), {})
            continue
        axes = fn.axes if fn.axes is not None else range(points.shape[1])
        jets = {a: proc.surrogate(params, axis_seed(points, a, order)) for a in axes}
        first = next(iter(jets.values()))
        fields[key] = Field(first.value, jets)
    out = fn.fn(points, fields)
    if isinstance(out, (list, tuple)):
        out = ad.concat([o if np.ndim(o) == 2 else o.reshape(-1, 1) for o in out], axis=1)
    if np.ndim(out) == 1:
        out = out.reshape(-1, 1)
    return out


def log_posterior(model: UqModel, theta):
    """Unnormalized log posterior: log priors plus Gaussian log-likelihoods."""
    if any(p.variable.family == "trainable" for p in model.processes):
        raise FamilyMismatch("log_posterior needs samplable or variational processes")
    lp = model.log_prior(theta)
    if isinstance(lp, float) and lp == -math.inf:
        return -math.inf
    return lp + model.log_likelihood(theta)


def mse_loss(model: UqModel, theta, weights=None):
    """Weighted mean-squared misfit summed over terms, plus L2 penalties.

    ``weights`` optionally overrides the per-term weights, keyed by dataset tag.
    """
    total = 0.0
    for term in model.terms:
        w = term.weight if weights is None else weights.get(term.dataset.tag, term.weight)
        n = term.n_obs
        if n == 0:
            if w != 0:
                raise EmptyDataset(f"empty {term.dataset.tag!r} dataset with weight {w}")
            continue
        r = model.predictions(term, theta) - term.dataset.targets
        total = total + (w / _rows(term)) * ad.asum(r * r)
    for p in model.processes:
        if p.variable.l2_weight:
            th = model.params_of(theta, p.key)
            total = total + p.variable.l2_weight * ad.asum(th * th)
    return total


def _rows(term):
    # one observation per (function, location) pair for operator data
    if isinstance(term.dataset, OperatorDataset):
        return term.dataset.targets.size
    return len(term.dataset)


def deeponet_mse(dataset: OperatorDataset, spec: DeepONetSpec, theta):
    pred = spec(theta, dataset.sensors, dataset.locations)
    r = pred - dataset.targets
    return ad.asum(r * r) / dataset.targets.size


# ---------------------------------------------------------------------------
# CSV


def dataset_header(input_dim: int, output_dim: int) -> str:
    return ",".join([f"x_{i}" for i in range(input_dim)] + [f"y_{i}" for i in range(output_dim)])


def format_rows(rows) -> str:
    return "\n".join(",".join(f"{v:.17g}" for v in row) for row in rows)


def write_dataset(path, ds: Dataset) -> None:
    body = format_rows(np.hstack([ds.inputs, ds.targets]))
    header = dataset_header(ds.inputs.shape[1], ds.targets.shape[1])
    Path(path).write_text(header + "\n" + (body + "\n" if len(ds) else ""))


def read_dataset(path, noise_std=1.0, tag="u") -> Dataset:
    lines = Path(path).read_text().splitlines()
    cols = lines[0].split(",")
    nx = sum(c.startswith("x_") for c in cols)
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln.strip()])
    data = data.reshape(-1, len(cols))
    return Dataset(data[:, :nx], data[:, nx:], noise_std, tag)


def operator_to_dataset(ds: OperatorDataset) -> Dataset:
    """Flatten to one row per (function, location): sensors, location, target."""
    n, m = ds.targets.shape
    sensors = np.repeat(ds.sensors, m, axis=0)
    locs = np.tile(ds.locations, (n, 1))
    return Dataset(np.hstack([sensors, locs]), ds.targets.reshape(-1, 1),
                   float(ds.noise_std[0]), ds.tag)
