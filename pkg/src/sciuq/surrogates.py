"""Parameterized function families: FNNs, constants, DeepONets, generators.

A surrogate maps ``(params, x)`` to an ``(N, output_dim)`` array.  ``params``
may be a plain array or a tape variable and ``x`` may be a batch of points or
a :class:`~sciuq.autodiff.Jet`, so the same forward code produces values,
derivatives and parameter gradients.

Parameter layout is fixed: per layer the weight matrix of shape
``(fan_in, fan_out)`` in row-major order, then the bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Jet
from .errors import DimensionMismatch, ShapeMismatch, WeightsFileMissing

ACTIVATIONS = {
    "tanh": ad.tanh,
    "sin": ad.sin,
    "softplus": ad.softplus,
    "relu": ad.relu,
}


def as_batch(x, input_dim: int) -> np.ndarray:
    """Coerce ``x`` to an ``(N, input_dim)`` float array."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if input_dim == 1 else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != input_dim:
        raise DimensionMismatch(f"expected points of dimension {input_dim}, got shape {x.shape}")
    return x


def axis_seed(x: np.ndarray, axis: int, order: int) -> Jet:
    direction = np.zeros_like(x)
    direction[:, axis] = 1.0
    return Jet.seed(x, direction, order)


class Surrogate:
    """Base class; subclasses set the three sizes and implement ``__call__``.

    A custom surrogate only needs arithmetic from :mod:`sciuq.autodiff` (or
    numpy ufuncs) inside ``__call__`` for values, jets and gradients to work.
    """

    n_params: int
    input_dim: int = 1
    output_dim: int = 1

    def __call__(self, params, x):
        raise NotImplementedError

    def check_params(self, params):
        if np.shape(params) != (self.n_params,):
            raise DimensionMismatch(
                f"{type(self).__name__} takes {self.n_params} parameters, got shape {np.shape(params)}")

    def eval(self, params, x):
        self.check_params(params)
        return self(params, as_batch(x, self.input_dim))

    def eval_jets(self, params, x, axis: int, order: int) -> Jet:
        self.check_params(params)
        x = as_batch(x, self.input_dim)
        if not 0 <= axis < self.input_dim:
            raise DimensionMismatch(f"axis {axis} out of range for {self.input_dim}-D input")
        return self(params, axis_seed(x, axis, order))

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.n_params)


@dataclass(frozen=True)
class FnnSpec(Surrogate):
    """Fully-connected network; linear output layer."""

    layer_widths: tuple
    activation: str = "tanh"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2 or min(widths) < 1:
            raise ValueError(f"invalid layer widths {widths}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def input_dim(self):
        return self.layer_widths[0]

    @property
    def output_dim(self):
        return self.layer_widths[-1]

    @property
    def n_params(self):
        w = self.layer_widths
        return sum(w[i] * w[i + 1] + w[i + 1] for i in range(len(w) - 1))

    def _offsets(self):
        off = 0
        for fan_in, fan_out in zip(self.layer_widths[:-1], self.layer_widths[1:]):
            yield off, off + fan_in * fan_out, off + fan_in * fan_out + fan_out, fan_in, fan_out
            off += fan_in * fan_out + fan_out

    def unpack(self, params):
        return [(params[a:b].reshape(fan_in, fan_out), params[b:c])
                for a, b, c, fan_in, fan_out in self._offsets()]

    @staticmethod
    def pack(layers) -> np.ndarray:
        return np.concatenate([np.concatenate([np.ravel(W), np.ravel(b)]) for W, b in layers])

    def __call__(self, params, x):
        act = ACTIVATIONS[self.activation]
        layers = self.unpack(params)
        h = x
        for i, (W, b) in enumerate(layers):
            h = h @ W + b
            if i < len(layers) - 1:
                h = act(h)
        return h

    def init_params(self, rng):
        layers = []
        for fan_in, fan_out in zip(self.layer_widths[:-1], self.layer_widths[1:]):
            if self.activation == "tanh":
                limit = math.sqrt(6.0 / (fan_in + fan_out))
                W = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            else:
                W = rng.standard_normal((fan_in, fan_out)) / math.sqrt(fan_in)
            layers.append((W, np.zeros(fan_out)))
        return self.pack(layers)

    def dropout_scale(self, rng: np.random.Generator, rate: float) -> np.ndarray:
        """Per-parameter multipliers equivalent to inverted dropout on hidden units.

        Dropping hidden unit ``j`` of a layer zeroes row ``j`` of the next
        weight matrix; kept units have their rows scaled by ``1/(1-rate)``.
        """
        scale = np.ones(self.n_params)
        if rate == 0.0:
            return scale
        keep = 1.0 / (1.0 - rate)
        offsets = list(self._offsets())
        for a, b, _, fan_in, fan_out in offsets[1:]:
            mask = (rng.random(fan_in) >= rate) * keep
            scale[a:b] = np.repeat(mask, fan_out)
        return scale


@dataclass(frozen=True)
class RescaledInput(Surrogate):
    """Wraps a surrogate so that the box ``[lo, hi]`` maps onto ``[-1, 1]``.

    The affine map goes through jets unchanged, so derivatives are taken
    with respect to the original coordinates.
    """

    inner: Surrogate
    lo: tuple = (-1.0,)
    hi: tuple = (1.0,)

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if lo.shape != (self.inner.input_dim,) or np.any(hi <= lo):
            raise ValueError("need one increasing (lo, hi) pair per input dimension")
        object.__setattr__(self, "lo", tuple(lo))
        object.__setattr__(self, "hi", tuple(hi))

    @property
    def n_params(self):
        return self.inner.n_params

    @property
    def input_dim(self):
        return self.inner.input_dim

    @property
    def output_dim(self):
        return self.inner.output_dim

    def __call__(self, params, x):
        lo, hi = np.array(self.lo), np.array(self.hi)
        return self.inner(params, (x - lo) * (2.0 / (hi - lo)) - 1.0)

    def init_params(self, rng):
        return self.inner.init_params(rng)

    def dropout_scale(self, rng, rate):
        return self.inner.dropout_scale(rng, rate)


@dataclass(frozen=True)
class IdentitySpec(Surrogate):
    """Unknown constant(s): the output is the parameter vector itself."""

    dim: int = 1
    input_dim: int = 1

    @property
    def n_params(self):
        return self.dim

    @property
    def output_dim(self):
        return self.dim

    def __call__(self, params, x):
        if isinstance(x, Jet):
            n = x.shape[0]
            return Jet.constant(np.ones((n, 1)) * params.reshape(1, self.dim), x.order)
        n = np.shape(x)[0]
        return np.ones((n, 1)) * params.reshape(1, self.dim)

    def init_params(self, rng):
        # unknown constants start at zero, the mean of the default prior
        return np.zeros(self.dim)


@dataclass(frozen=True)
class DeepONetSpec:
    """Branch net on sensor values, trunk net on coordinates, inner product."""

    branch: FnnSpec
    trunk: FnnSpec

    def __post_init__(self):
        if self.branch.output_dim != self.trunk.output_dim:
            raise ValueError("branch and trunk must share the latent width")

    @property
    def n_sensors(self):
        return self.branch.input_dim

    @property
    def input_dim(self):
        return self.trunk.input_dim

    @property
    def latent_width(self):
        return self.branch.output_dim

    @property
    def n_params(self):
        return self.branch.n_params + self.trunk.n_params

    def split(self, params):
        nb = self.branch.n_params
        return params[:nb], params[nb:]

    def __call__(self, params, sensors, x):
        """Matrix of predictions, one row per input function."""
        pb, pt = self.split(params)
        return self.branch(pb, sensors) @ ad.transpose(self.trunk(pt, x))

    def eval(self, params, sensors, x):
        if np.shape(params) != (self.n_params,):
            raise DimensionMismatch(f"DeepONet takes {self.n_params} parameters")
        sensors = np.asarray(sensors, dtype=float)
        if sensors.ndim == 1:
            sensors = sensors.reshape(1, -1)
        if sensors.shape[1] != self.n_sensors:
            raise DimensionMismatch(
                f"expected {self.n_sensors} sensor values, got {sensors.shape[1]}")
        return self(params, sensors, as_batch(x, self.input_dim))

    def init_params(self, rng):
        return np.concatenate([self.branch.init_params(rng), self.trunk.init_params(rng)])


def deeponet_eval(spec: DeepONetSpec, params, lambda_sensors, x) -> float:
    """Prediction for one input function at one point."""
    return float(np.asarray(spec.eval(params, lambda_sensors, x)).reshape(()))


@dataclass(frozen=True)
class GeneratorSpec(Surrogate):
    """Fixed-weight generator; only the latent vector is a parameter.

    Two layouts of the frozen network are recognised:

    * feature layout, input width ``input_dim`` and output width
      ``latent_dim``: ``g(z, x) = features(x) . z``;
    * joint layout, input width ``latent_dim + input_dim`` and output
      width 1: ``g(z, x) = net([z, x])``.
    """

    net: FnnSpec
    weights: np.ndarray = field(repr=False, compare=False)
    latent_dim: int = 1
    input_dim: int = 1

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.net.n_params,):
            raise ShapeMismatch(
                f"weights file holds {w.size} values, network needs {self.net.n_params}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        widths = self.net.layer_widths
        if widths[0] == self.input_dim and widths[-1] == self.latent_dim:
            object.__setattr__(self, "_joint", False)
        elif widths[0] == self.latent_dim + self.input_dim and widths[-1] == 1:
            object.__setattr__(self, "_joint", True)
        else:
            raise ShapeMismatch(
                f"network widths {widths} fit neither generator layout for "
                f"latent_dim={self.latent_dim}, input_dim={self.input_dim}")

    @classmethod
    def load(cls, path, latent_dim: int, input_dim: int = 1) -> GeneratorSpec:
        net, weights = read_weights(path)
        return cls(net, weights, latent_dim=latent_dim, input_dim=input_dim)

    @property
    def n_params(self):
        return self.latent_dim

    def __call__(self, params, x):
        if not self._joint:
            return self.net(self.weights, x) @ params.reshape(self.latent_dim, 1)
        act = ACTIVATIONS[self.net.activation]
        layers = self.net.unpack(self.weights)
        (W0, b0), rest = layers[0], layers[1:]
        h = x @ W0[self.latent_dim:] + (params @ W0[: self.latent_dim] + b0)
        for W, b in rest:
            h = act(h) @ W + b
        return h


def generator_eval(spec: GeneratorSpec, latent, x) -> float:
    return float(np.asarray(spec.eval(np.asarray(latent, dtype=float), x)).reshape(-1)[0])


def surrogate_eval(spec: Surrogate, params, x) -> np.ndarray:
    """Output vector at a single point."""
    return np.asarray(spec.eval(np.asarray(params, dtype=float), x))[0]


def surrogate_eval_jets(spec: Surrogate, params, x, direction: int, order: int) -> list:
    """One jet per output component at a single point."""
    jet = spec.eval_jets(np.asarray(params, dtype=float), x, direction, order)
    coeffs = [np.asarray(c)[0] for c in jet.materialize()]
    return [Jet([c[k] for c in coeffs]) for k in range(spec.output_dim)]


# ---------------------------------------------------------------------------
# weights files


def write_weights(path, net: FnnSpec, params) -> None:
    params = np.asarray(params, dtype=float)
    if params.shape != (net.n_params,):
        raise ShapeMismatch(f"expected {net.n_params} parameters")
    widths = ",".join(str(w) for w in net.layer_widths)
    lines = [f"# fnn {widths} {net.activation}"]
    lines += [f"{v:.17g}" for v in params]
    Path(path).write_text("\n".join(lines) + "\n")


def read_weights(path) -> tuple[FnnSpec, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise WeightsFileMissing(f"weights file not found: {path}")
    lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    header = lines[0].lstrip("#").split()
    if len(header) != 3 or header[0] != "fnn":
        raise ShapeMismatch(f"bad weights header in {path}: {lines[0]!r}")
    net = FnnSpec(tuple(int(w) for w in header[1].split(",")), header[2])
    values = np.array([float(v) for v in lines[1:]])
    if values.shape != (net.n_params,):
        raise ShapeMismatch(f"{path} holds {values.size} values, header implies {net.n_params}")
    return net, values


SIN_COS_GENERATOR = Path(__file__).parent / "data" / "sin_cos_generator.csv"
