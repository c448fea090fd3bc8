"""Catalog of benchmark problems.

Each problem is a dataclass whose fields are the overridable parts of its
recipe.  A problem knows how to synthesize its datasets from a seed, which
processes it needs, how to wire them into a :class:`~sciuq.likelihoods.UqModel`
and what the clean reference solution is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from ..errors import UnknownProblem
from ..likelihoods import Dataset, Direct, OperatorDataset, OperatorTarget, ResidualFn, Term, UqModel
from ..processes import HalfNormal, LogNormal, Normal, Process, VariableSpec
from ..surrogates import DeepONetSpec, FnnSpec, IdentitySpec, RescaledInput
from .ode import interpolate, ko_reference


def make_variable(family: str, prior=None) -> VariableSpec:
    if family == "samplable":
        return VariableSpec.samplable(prior)
    if family == "variational":
        return VariableSpec.variational(prior)
    if family == "trainable":
        return VariableSpec.trainable()
    raise ValueError(f"unknown family {family!r}")


def equidistant(lo, hi, n) -> np.ndarray:
    return np.linspace(lo, hi, n).reshape(-1, 1)


@dataclass
class Problem:
    id: ClassVar[str] = ""
    description: ClassVar[str] = ""
    input_dim: ClassVar[int] = 1
    output_key: ClassVar[str] = "u"
    domain: ClassVar[tuple] = ((-1.0, 1.0),)
    default_grid: ClassVar[int] = 201

    # per-tag multipliers on the deterministic loss terms
    loss_weights: dict = field(default_factory=dict)

    def make_dataset(self, seed: int) -> dict:
        raise NotImplementedError

    def default_surrogates(self) -> dict:
        raise NotImplementedError

    def priors(self) -> dict:
        """Prior per process key; keys not listed get a standard Normal."""
        return {}

    def terms(self, data: dict) -> list:
        raise NotImplementedError

    @property
    def aleatoric_std(self) -> float:
        return self.noise_std

    def true_parameters(self) -> dict:
        return {}

    def build_model(self, data: dict, family: str = "samplable", surrogates=None) -> UqModel:
        specs = dict(self.default_surrogates())
        specs.update(surrogates or {})
        priors = self.priors()
        procs = [Process(key, spec, make_variable(family, priors.get(key, Normal())))
                 for key, spec in specs.items()]
        terms = self.terms(data)
        for t in terms:
            t.weight = float(self.loss_weights.get(t.dataset.tag, t.weight))
        return UqModel(procs, terms)

    def test_grid(self, n: int | None = None) -> np.ndarray:
        n = self.default_grid if n is None else int(n)
        if self.input_dim == 1:
            lo, hi = self.domain[0]
            return equidistant(lo, hi, n)
        from scipy.stats import qmc

        pts = qmc.Halton(d=self.input_dim, scramble=False).random(n + 1)[1:]
        lo = np.array([d[0] for d in self.domain])
        hi = np.array([d[1] for d in self.domain])
        return lo + (hi - lo) * pts

    def reference(self, grid, seed: int = 0) -> np.ndarray:
        raise NotImplementedError

    def predict(self, model: UqModel, theta, grid, seed: int = 0) -> np.ndarray:
        return model.evaluate(self.output_key, theta, grid)


# ---------------------------------------------------------------------------


@dataclass
class SineRegression(Problem):
    id: ClassVar[str] = "sine_regression"
    description: ClassVar[str] = "u = 1.5 sin(11x) from 3 noisy points in [-0.7, -0.3]"

    n_data: int = 3
    data_range: tuple = (-0.7, -0.3)
    noise_std: float = 0.05
    amplitude: float = 1.5
    frequency: float = 11.0
    hidden: int = 50

    def exact(self, x):
        return self.amplitude * np.sin(self.frequency * np.asarray(x, dtype=float))

    def make_dataset(self, seed):
        rng = np.random.default_rng(seed)
        x = equidistant(*self.data_range, self.n_data)
        u = self.exact(x) + self.noise_std * rng.standard_normal(x.shape)
        return {"u": Dataset(x, u, self.noise_std, "u")}

    def default_surrogates(self):
        return {"u": FnnSpec((1, self.hidden, 1), "tanh")}

    def terms(self, data):
        return [Term(data["u"], Direct("u"))]

    def reference(self, grid, seed=0):
        return self.exact(grid).reshape(-1, 1)


# ---------------------------------------------------------------------------


def ko_residual():
    def fn(x, fields):
        X, a, b = fields["x"], fields["a"].value, fields["b"].value
        v, dv = X.value, X.d(1)
        x1, x2, x3 = v[:, 0:1], v[:, 1:2], v[:, 2:3]
        return [dv[:, 0:1] - a * x2 * x3,
                dv[:, 1:2] - b * x1 * x3,
                dv[:, 2:3] + (a + b) * x1 * x2]
    return ResidualFn(fn, {"x": 1, "a": 0, "b": 0}, name="kraichnan_orszag")


@dataclass
class KraichnanOrszag(Problem):
    id: ClassVar[str] = "kraichnan_orszag"
    description: ClassVar[str] = "inverse KO system: infer a, b and x(t) from sparse noisy data"
    output_key: ClassVar[str] = "x"
    domain: ClassVar[tuple] = ((0.0, 10.0),)
    default_grid: ClassVar[int] = 201

    a: float = 1.0
    b: float = 1.0
    counts: tuple = (11, 7, 11)
    noise_std: float = 0.05
    n_collocation: int = 101
    residual_std: float = 0.05
    hidden: int = 20

    def reference_trajectory(self):
        return ko_reference(self.a, self.b, t_span=self.domain[0])

    def make_dataset(self, seed):
        rng = np.random.default_rng(seed)
        ts, ys = self.reference_trajectory()
        data = {}
        for k, n in enumerate(self.counts):
            t = equidistant(*self.domain[0], n)
            clean = interpolate(ts, ys, t)[:, k:k + 1]
            data[f"x{k + 1}"] = Dataset(t, clean + self.noise_std * rng.standard_normal(clean.shape),
                                        self.noise_std, "u")
        tc = equidistant(*self.domain[0], self.n_collocation)
        data["f"] = Dataset(tc, np.zeros((self.n_collocation, 3)), self.residual_std, "f")
        return data

    def default_surrogates(self):
        net = FnnSpec((1, self.hidden, self.hidden, 3), "tanh")
        return {"x": RescaledInput(net, *zip(self.domain[0])),
                "a": IdentitySpec(1), "b": IdentitySpec(1)}

    def terms(self, data):
        terms = [Term(data[f"x{k + 1}"], Direct("x", k)) for k in range(3)]
        terms.append(Term(data["f"], ko_residual()))
        return terms

    def true_parameters(self):
        return {"a": self.a, "b": self.b}

    def reference(self, grid, seed=0):
        ts, ys = self.reference_trajectory()
        return interpolate(ts, ys, grid)


# ---------------------------------------------------------------------------


def diffusion_reaction_residual(D, k_r=None):
    """``D u_xx - k_r u^3``; ``k_r`` is read from a process when not given."""
    reads = {"u": 2} if k_r is not None else {"u": 2, "k_r": 0}

    def fn(x, fields):
        u = fields["u"]
        k = k_r if k_r is not None else fields["k_r"].value
        v = u.value
        return D * u.d(2) - k * (v * v * v)
    return ResidualFn(fn, reads, name="diffusion_reaction")


DR_PRIORS = {
    "normal": Normal(0.0, 1.0),
    "halfnormal": HalfNormal(1.0),
    "lognormal": LogNormal(0.0, 1.0),
}


@dataclass
class DiffusionReactionBase(Problem):
    D: float = 0.01
    k_r: float = 0.2
    amplitude: float = 0.3
    noise_std: float = 0.01
    hidden: tuple = (50, 50, 50)

    def exact_u(self, x):
        return self.amplitude * np.sin(math.pi * np.asarray(x, dtype=float))

    def exact_f(self, x):
        s = np.sin(math.pi * np.asarray(x, dtype=float))
        return (-self.D * math.pi ** 2 * self.amplitude * s
                - self.k_r * (self.amplitude * s) ** 3)

    def default_surrogates(self):
        return {"u": FnnSpec((1, *self.hidden, 1), "tanh")}

    def reference(self, grid, seed=0):
        return self.exact_u(grid).reshape(-1, 1)


@dataclass
class DiffusionReactionInverse(DiffusionReactionBase):
    id: ClassVar[str] = "diffusion_reaction_inverse"
    description: ClassVar[str] = "infer k_r in D u_xx - k_r u^3 = f from 5 u and 17 f points"

    n_u: int = 5
    n_f: int = 17
    prior: str = "normal"

    def __post_init__(self):
        if self.prior not in DR_PRIORS:
            raise ValueError(f"prior must be one of {sorted(DR_PRIORS)}")

    def make_dataset(self, seed):
        rng = np.random.default_rng(seed)
        xu = rng.uniform(-1.0, 1.0, (self.n_u, 1))
        u = self.exact_u(xu) + self.noise_std * rng.standard_normal(xu.shape)
        xf = equidistant(-1.0, 1.0, self.n_f)
        f = self.exact_f(xf) + self.noise_std * rng.standard_normal(xf.shape)
        return {"u": Dataset(xu, u, self.noise_std, "u"), "f": Dataset(xf, f, self.noise_std, "f")}

    def default_surrogates(self):
        return {**super().default_surrogates(), "k_r": IdentitySpec(1)}

    def priors(self):
        return {"k_r": DR_PRIORS[self.prior]}

    def terms(self, data):
        return [Term(data["u"], Direct("u")),
                Term(data["f"], diffusion_reaction_residual(self.D))]

    def true_parameters(self):
        return {"k_r": self.k_r}


@dataclass
class DiffusionReactionForward(DiffusionReactionBase):
    id: ClassVar[str] = "diffusion_reaction_forward"
    description: ClassVar[str] = "solve D u_xx - k_r u^3 = f with u(-1) = u(1) = 0 from 10 f points"

    n_f: int = 10

    def make_dataset(self, seed):
        rng = np.random.default_rng(seed)
        xf = rng.uniform(-1.0, 1.0, (self.n_f, 1))
        f = self.exact_f(xf) + self.noise_std * rng.standard_normal(xf.shape)
        xb = np.array([[-1.0], [1.0]])
        ub = self.noise_std * rng.standard_normal(xb.shape)
        return {"f": Dataset(xf, f, self.noise_std, "f"), "b": Dataset(xb, ub, self.noise_std, "b")}

    def terms(self, data):
        return [Term(data["b"], Direct("u")),
                Term(data["f"], diffusion_reaction_residual(self.D, self.k_r))]


# ---------------------------------------------------------------------------


def antiderivative_coeffs(n_functions, rng, n_modes=3) -> np.ndarray:
    k = np.arange(1, n_modes + 1)
    return rng.standard_normal((n_functions, n_modes)) / k


def antiderivative_source(coeffs, x) -> np.ndarray:
    """lambda(x) = sum_k c_k sin(k pi x); one row per function."""
    k = np.arange(1, coeffs.shape[1] + 1)
    x = np.asarray(x, dtype=float).reshape(-1)
    return coeffs @ np.sin(np.pi * np.outer(k, x))


def antiderivative_solution(coeffs, x) -> np.ndarray:
    """u(x) = int_0^x lambda, in closed form."""
    k = np.arange(1, coeffs.shape[1] + 1)
    x = np.asarray(x, dtype=float).reshape(-1)
    return (coeffs / (np.pi * k)) @ (1.0 - np.cos(np.pi * np.outer(k, x)))


def antiderivative_data(n_functions, n_sensors, n_outputs, seed, noise_std=0.0,
                        n_modes=3) -> OperatorDataset:
    rng = np.random.default_rng(seed)
    coeffs = antiderivative_coeffs(n_functions, rng, n_modes)
    xs = np.linspace(0.0, 1.0, n_sensors)
    xo = np.linspace(0.0, 1.0, n_outputs)
    u = antiderivative_solution(coeffs, xo)
    if noise_std > 0:
        u = u + noise_std * rng.standard_normal(u.shape)
    return OperatorDataset(antiderivative_source(coeffs, xs), xs, xo, u,
                           noise_std if noise_std > 0 else 1.0, "u")


@dataclass
class AntiderivativeOperator(Problem):
    id: ClassVar[str] = "antiderivative_operator"
    description: ClassVar[str] = "DeepONet for u(x) = int_0^x lambda from sampled sine series"
    output_key: ClassVar[str] = "G"
    domain: ClassVar[tuple] = ((0.0, 1.0),)
    default_grid: ClassVar[int] = 101

    n_functions: int = 500
    n_test_functions: int = 100
    n_sensors: int = 20
    n_outputs: int = 20
    noise_std: float = 0.01
    latent: int = 20
    hidden: int = 40

    def make_dataset(self, seed):
        return {"u": antiderivative_data(self.n_functions, self.n_sensors, self.n_outputs,
                                         seed, self.noise_std)}

    def _heldout(self, seed):
        rng = np.random.default_rng([seed, 1])
        return antiderivative_coeffs(self.n_test_functions, rng)

    def default_surrogates(self):
        h, w = self.hidden, self.latent
        return {"G": DeepONetSpec(FnnSpec((self.n_sensors, h, h, w), "tanh"),
                                  FnnSpec((1, h, h, w), "tanh"))}

    def terms(self, data):
        return [Term(data["u"], OperatorTarget("G"))]

    def reference(self, grid, seed=0):
        """Held-out solutions stacked function by function."""
        return antiderivative_solution(self._heldout(seed), grid).reshape(-1, 1)

    def predict(self, model, theta, grid, seed=0):
        spec = model.process("G").surrogate
        sensors = antiderivative_source(self._heldout(seed), np.linspace(0, 1, self.n_sensors))
        out = spec.eval(np.asarray(model.params_of(theta, "G")), sensors, grid)
        return np.asarray(out).reshape(-1, 1)


# ---------------------------------------------------------------------------


def kdv_exact(x, t, a1=1.0, a2=2.0, mu=1.0, b1=math.log(3.0) / 2, b2=None):
    """Two-soliton solution ``u = 2 R_xx`` of ``u_t - 1.5 u u_x - 0.25 u_xxx = 0``."""
    b2 = b1 if b2 is None else b2
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    e1 = a1 * x + a1 ** 3 * mu * t + b1
    e2 = a2 * x + a2 ** 3 * mu * t + b2
    c = (a1 - a2) ** 2 / (a1 + a2) ** 2
    # S = sum_i c_i exp(s_i); pull out the largest exponent for stability
    expo = np.stack([-e1 - e2, e1 - e2, e2 - e1, e1 + e2])
    slope = np.array([-a1 - a2, a1 - a2, a2 - a1, a1 + a2]).reshape(4, *([1] * x.ndim))
    weight = np.array([1.0, 1.0, 1.0, c]).reshape(4, *([1] * x.ndim))
    w = weight * np.exp(expo - expo.max(axis=0))
    s0, s1, s2 = w.sum(0), (w * slope).sum(0), (w * slope ** 2).sum(0)
    return 2.0 * (s2 / s0 - (s1 / s0) ** 2)


def kdv_residual():
    def fn(x, fields):
        u, l1, l2 = fields["u"], fields["lambda_1"].value, fields["lambda_2"].value
        return u.d(1, axis=1) - l1 * u.value * u.d(1, axis=0) - l2 * u.d(3, axis=0)
    return ResidualFn(fn, {"u": 3, "lambda_1": 0, "lambda_2": 0}, name="kdv")


@dataclass
class KdV(Problem):
    id: ClassVar[str] = "kdv"
    description: ClassVar[str] = "inverse KdV: infer lambda_1, lambda_2 from two-soliton data"
    input_dim: ClassVar[int] = 2
    domain: ClassVar[tuple] = ((-10.0, 10.0), (-2.0, 2.0))
    default_grid: ClassVar[int] = 400

    lambda_1: float = 1.5
    lambda_2: float = 0.25
    n_u: int = 200
    n_f: int = 100
    noise_std: float = 0.05
    hidden: int = 50

    def _random_points(self, rng, n):
        lo = np.array([d[0] for d in self.domain])
        hi = np.array([d[1] for d in self.domain])
        return lo + (hi - lo) * rng.random((n, 2))

    def make_dataset(self, seed):
        rng = np.random.default_rng(seed)
        xu = self._random_points(rng, self.n_u)
        u = kdv_exact(xu[:, 0], xu[:, 1]).reshape(-1, 1)
        u = u + self.noise_std * rng.standard_normal(u.shape)
        xf = self._random_points(rng, self.n_f)
        f = self.noise_std * rng.standard_normal((self.n_f, 1))
        return {"u": Dataset(xu, u, self.noise_std, "u"), "f": Dataset(xf, f, self.noise_std, "f")}

    def default_surrogates(self):
        h = self.hidden
        return {"u": FnnSpec((2, h, h, h, 1), "tanh"),
                "lambda_1": IdentitySpec(1, input_dim=2), "lambda_2": IdentitySpec(1, input_dim=2)}

    def terms(self, data):
        return [Term(data["u"], Direct("u")), Term(data["f"], kdv_residual())]

    def true_parameters(self):
        return {"lambda_1": self.lambda_1, "lambda_2": self.lambda_2}

    def reference(self, grid, seed=0):
        grid = np.asarray(grid, dtype=float)
        return kdv_exact(grid[:, 0], grid[:, 1]).reshape(-1, 1)


# ---------------------------------------------------------------------------

CATALOG = {cls.id: cls for cls in (SineRegression, KraichnanOrszag, DiffusionReactionInverse,
                                   DiffusionReactionForward, AntiderivativeOperator, KdV)}


def get_problem(problem_id: str, **overrides) -> Problem:
    try:
        cls = CATALOG[problem_id]
    except KeyError:
        raise UnknownProblem(f"unknown problem {problem_id!r}; "
                             f"available: {', '.join(sorted(CATALOG))}") from None
    return cls(**overrides)


def make_dataset(problem_id: str, seed: int, **overrides) -> dict:
    return get_problem(problem_id, **overrides).make_dataset(seed)
