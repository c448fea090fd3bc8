import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from sciuq import autodiff as ad
from sciuq.errors import (EmptyDataset, FamilyMismatch, RaggedSensors, ShapeMismatch,
                          UnknownProcessKey)
from sciuq.likelihoods import (Dataset, Direct, OperatorDataset, ResidualFn, Term, UqModel,
                               deeponet_mse, log_posterior, mse_loss, normal_loglik,
                               read_dataset, residual_eval, write_dataset)
from sciuq.problems import diffusion_reaction_residual, ko_reference, ko_residual
from sciuq.processes import LOG_2PI, Normal, Process, VariableSpec
from sciuq.surrogates import DeepONetSpec, FnnSpec, IdentitySpec

from conftest import ManufacturedU, SplineTrajectory

HALF_LOG_2PI = 0.5 * LOG_2PI


def test_loglik_exact_fit():
    ds = Dataset([[0.0]], [[1.3]], 1.0)
    assert normal_loglik(ds, np.array([[1.3]])) == pytest.approx(-0.9189385, abs=1e-7)


@pytest.mark.parametrize("sigma", [0.1, 1.0, 2.5])
def test_loglik_one_sigma_off(sigma):
    ds = Dataset([[0.0]], [[1.0]], sigma)
    expected = -0.5 - 0.5 * math.log(2 * math.pi * sigma ** 2)
    assert normal_loglik(ds, np.array([[1.0 + sigma]])) == pytest.approx(expected, abs=1e-12)


def test_loglik_matches_pointwise_sum():
    rng = np.random.default_rng(0)
    n, d = 30, 2
    sigma = np.array([0.3, 1.4])
    ds = Dataset(rng.standard_normal((n, 1)), rng.standard_normal((n, d)), sigma)
    pred = rng.standard_normal((n, d))
    naive = 0.0
    for i in range(n):
        for k in range(d):
            r = ds.targets[i, k] - pred[i, k]
            naive += -r * r / (2 * sigma[k] ** 2) - 0.5 * math.log(2 * math.pi * sigma[k] ** 2)
    assert normal_loglik(ds, pred) == pytest.approx(naive, abs=1e-10)


def test_loglik_shape_mismatch():
    ds = Dataset(np.zeros((3, 1)), np.zeros((3, 1)))
    with pytest.raises(ShapeMismatch):
        normal_loglik(ds, np.zeros((2, 1)))


def test_dataset_rows_must_align():
    with pytest.raises(ShapeMismatch):
        Dataset(np.zeros((3, 1)), np.zeros((4, 1)))


@given(seed=st.integers(0, 2 ** 16), scale=st.floats(1e-3, 1.0))
def test_loglik_maximized_at_targets(seed, scale):
    rng = np.random.default_rng(seed)
    ds = Dataset(rng.standard_normal((5, 1)), rng.standard_normal((5, 1)), 0.5)
    best = normal_loglik(ds, ds.targets)
    assert normal_loglik(ds, ds.targets + scale * rng.standard_normal((5, 1))) < best


def test_dr_residual_of_zero_field_is_zero():
    net = FnnSpec((1, 8, 8, 1))
    model = UqModel([Process("u", net, VariableSpec.trainable()),
                     Process("k_r", IdentitySpec(1), VariableSpec.trainable())])
    theta = np.concatenate([np.zeros(net.n_params), [0.2]])
    r = residual_eval(diffusion_reaction_residual(0.01), model, theta, np.linspace(-1, 1, 9))
    np.testing.assert_array_equal(r, np.zeros((9, 1)))


def test_dr_residual_manufactured(oracles):
    case = oracles["manufactured_dr"]
    model = UqModel([Process("u", ManufacturedU(), VariableSpec.trainable()),
                     Process("k_r", IdentitySpec(1), VariableSpec.trainable())])
    r = residual_eval(diffusion_reaction_residual(0.01), model, np.array([0.2]),
                      np.array(case["points"]))
    np.testing.assert_allclose(r[:, 0], case["f"], atol=1e-8)


def test_ko_residual_at_reference_trajectory():
    ts, ys = ko_reference()
    x_proc = Process("x", SplineTrajectory(CubicSpline(ts[::10], ys[::10])),
                     VariableSpec.trainable())
    model = UqModel([x_proc,
                     Process("a", IdentitySpec(1), VariableSpec.trainable()),
                     Process("b", IdentitySpec(1), VariableSpec.trainable())])
    r = residual_eval(ko_residual(), model, np.array([1.0, 1.0]), np.linspace(0, 10, 101))
    assert r.shape == (101, 3)
    assert np.abs(r).max() <= 1e-3


def _small_model(family="samplable"):
    rng = np.random.default_rng(7)
    net = FnnSpec((1, 6, 1))
    var = VariableSpec.samplable() if family == "samplable" else VariableSpec.trainable()
    kvar = VariableSpec.samplable(Normal(0.5, 2.0)) if family == "samplable" else var
    procs = [Process("u", net, var), Process("k_r", IdentitySpec(1), kvar)]
    du = Dataset(rng.uniform(-1, 1, (4, 1)), rng.standard_normal((4, 1)), 0.1, "u")
    df = Dataset(np.linspace(-1, 1, 6), rng.standard_normal((6, 1)), 0.2, "f")
    db = Dataset([[-1.0], [1.0]], [[0.0], [0.0]], 0.05, "b")
    dl = Dataset([[0.0]], [[0.2]], 0.3, "lambda")
    terms = [Term(du, Direct("u")), Term(df, diffusion_reaction_residual(0.01)),
             Term(db, Direct("u")), Term(dl, Direct("k_r"))]
    return UqModel(procs, terms), rng.standard_normal(net.n_params + 1)


def test_log_posterior_is_prior_plus_likelihood():
    model, theta = _small_model()
    net_params, k = theta[:-1], theta[-1:]
    prior = (-0.5 * np.sum(net_params ** 2) - 0.5 * net_params.size * LOG_2PI
             - 0.5 * ((k[0] - 0.5) / 2.0) ** 2 - math.log(2.0) - HALF_LOG_2PI)
    lik = sum(normal_loglik(t.dataset, model.predictions(t, theta)) for t in model.terms)
    assert log_posterior(model, theta) == pytest.approx(prior + lik, abs=1e-10)


def test_log_posterior_empty_data():
    model, theta = _small_model()
    empty = [Term(Dataset(np.zeros((0, 1)), np.zeros((0, 1)), 0.1), Direct("u"))]
    bare = UqModel(model.processes, empty)
    assert log_posterior(bare, theta) == bare.log_prior(theta)


def test_log_posterior_rejects_trainable():
    model, theta = _small_model("trainable")
    with pytest.raises(FamilyMismatch):
        log_posterior(model, theta)


def test_log_posterior_gradient():
    model, theta = _small_model()
    assert ad.grad_check(model.log_posterior, theta) <= 1e-5


def test_conjugate_argmax(conjugate, oracles):
    model = conjugate()
    res = minimize_scalar(lambda t: -log_posterior(model, np.array([t])),
                          bracket=(0.0, 2.0), tol=1e-12)
    assert res.x == pytest.approx(oracles["conjugate"]["mean"], abs=1e-6)


def test_mse_exact_fit_is_zero():
    model = UqModel([Process("c", IdentitySpec(1), VariableSpec.trainable())],
                    [Term(Dataset(np.zeros((3, 1)), np.full((3, 1), 0.4)), Direct("c"))])
    assert mse_loss(model, np.array([0.4])) == 0.0


def test_mse_single_point_weighted():
    e = 0.3
    model = UqModel([Process("c", IdentitySpec(1), VariableSpec.trainable())],
                    [Term(Dataset([[0.0]], [[1.0]]), Direct("c"), weight=2.0)])
    assert mse_loss(model, np.array([1.0 + e])) == pytest.approx(2 * e * e, abs=1e-15)


def test_mse_matches_four_term_sum():
    model, theta = _small_model("trainable")
    w = {"u": 1.5, "f": 0.7, "b": 3.0, "lambda": 0.25}
    naive = 0.0
    for term in model.terms:
        pred = np.asarray(model.predictions(term, theta))
        n = len(term.dataset)
        naive += w[term.dataset.tag] / n * sum(
            float(np.sum((pred[i] - term.dataset.targets[i]) ** 2)) for i in range(n))
    assert mse_loss(model, theta, w) == pytest.approx(naive, abs=1e-12)


def test_mse_l2_penalty():
    model = UqModel([Process("c", IdentitySpec(2), VariableSpec.trainable(l2_weight=0.5))],
                    [Term(Dataset([[0.0]], [[0.0, 0.0]]), Direct("c"))])
    theta = np.array([1.0, 2.0])
    assert mse_loss(model, theta) == pytest.approx(5.0 + 0.5 * 5.0)


def test_mse_empty_dataset_with_weight():
    model = UqModel([Process("c", IdentitySpec(1), VariableSpec.trainable())],
                    [Term(Dataset(np.zeros((0, 1)), np.zeros((0, 1)), tag="b"), Direct("c"))])
    with pytest.raises(EmptyDataset):
        mse_loss(model, np.zeros(1))
    assert mse_loss(model, np.zeros(1), {"b": 0.0}) == 0.0


@given(c=st.floats(0.01, 100.0))
def test_weight_scaling(conjugate, c):
    model = conjugate("trainable")
    theta = np.array([0.37])
    assert mse_loss(model, theta, {"u": c}) == pytest.approx(c * mse_loss(model, theta), rel=1e-13)

    def argmin(weights):
        g0 = ad.grad(lambda t: mse_loss(model, t, weights), np.array([0.0]))[1][0]
        g1 = ad.grad(lambda t: mse_loss(model, t, weights), np.array([1.0]))[1][0]
        return -g0 / (g1 - g0)

    assert argmin({"u": c}) == pytest.approx(argmin({"u": 1.0}), abs=1e-8)


def test_residual_permutation_invariance():
    model, theta = _small_model("trainable")
    fn = diffusion_reaction_residual(0.01)
    pts = np.random.default_rng(3).uniform(-1, 1, (25, 1))
    perm = np.random.default_rng(4).permutation(25)
    r = residual_eval(fn, model, theta, pts)
    assert np.array_equal(residual_eval(fn, model, theta, pts[perm]), r[perm])


def test_unknown_process_key():
    with pytest.raises(UnknownProcessKey):
        UqModel([Process("u", IdentitySpec(1), VariableSpec.trainable())],
                [Term(Dataset([[0.0]], [[0.0]]), Direct("v"))])
    with pytest.raises(UnknownProcessKey):
        UqModel([Process("u", IdentitySpec(1), VariableSpec.trainable())],
                [Term(Dataset([[0.0]], [[0.0]]), ResidualFn(lambda x, f: 0, {"w": 1}))])


def test_residual_order_range():
    with pytest.raises(ValueError):
        ResidualFn(lambda x, f: 0, {"u": 4})


def test_undeclared_derivative():
    model = UqModel([Process("u", FnnSpec((1, 3, 1)), VariableSpec.trainable())])
    fn = ResidualFn(lambda x, f: f["u"].d(2), {"u": 1})
    with pytest.raises(ValueError):
        residual_eval(fn, model, np.zeros(10), np.zeros((2, 1)))


def _operator_case(rng, n=3, m=4, s=5):
    spec = DeepONetSpec(FnnSpec((s, 6, 3)), FnnSpec((1, 6, 3)))
    theta = spec.init_params(rng)
    sensors = rng.standard_normal((n, s))
    locs = np.linspace(0, 1, m)
    return spec, theta, sensors, np.linspace(0, 1, s), locs


def test_deeponet_mse_exact():
    rng = np.random.default_rng(0)
    spec, theta, sensors, sl, locs = _operator_case(rng)
    targets = spec.eval(theta, sensors, locs)
    ds = OperatorDataset(sensors, sl, locs, targets)
    assert deeponet_mse(ds, spec, theta) == 0.0


def test_deeponet_mse_single_error():
    rng = np.random.default_rng(1)
    spec, theta, sensors, sl, locs = _operator_case(rng, n=1, m=1)
    pred = spec.eval(theta, sensors, locs)
    ds = OperatorDataset(sensors, sl, locs, pred + 0.5)
    assert deeponet_mse(ds, spec, theta) == pytest.approx(0.25, abs=1e-14)


def test_deeponet_mse_double_loop():
    rng = np.random.default_rng(2)
    spec, theta, sensors, sl, locs = _operator_case(rng, n=4, m=6)
    targets = rng.standard_normal((4, 6))
    ds = OperatorDataset(sensors, sl, locs, targets)
    pb, pt = spec.split(theta)
    total = 0.0
    for i in range(4):
        b = spec.branch(pb, sensors[i:i + 1])[0]
        for j in range(6):
            t = spec.trunk(pt, locs[j:j + 1].reshape(1, 1))[0]
            total += (float(b @ t) - targets[i, j]) ** 2
    assert deeponet_mse(ds, spec, theta) == pytest.approx(total / 24, abs=1e-12)


def test_ragged_sensors():
    with pytest.raises(RaggedSensors):
        OperatorDataset([[0.0, 1.0], [0.0]], [0.0, 1.0], [0.5], [[0.0], [0.0]])


def test_dataset_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    ds = Dataset(rng.standard_normal((7, 2)), rng.standard_normal((7, 3)), 0.1, "f")
    write_dataset(tmp_path / "d.csv", ds)
    header = (tmp_path / "d.csv").read_text().splitlines()[0]
    assert header == "x_0,x_1,y_0,y_1,y_2"
    back = read_dataset(tmp_path / "d.csv", 0.1, "f")
    assert np.array_equal(back.inputs, ds.inputs)
    assert np.array_equal(back.targets, ds.targets)
