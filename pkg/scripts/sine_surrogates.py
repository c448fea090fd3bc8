"""Sine regression with three surrogates: a BNN, a fixed generator and a
hand-written two-parameter model.

All three are sampled with HMC from the same three noisy points.  The script
prints how much wider the predictive band is away from the data.

    python scripts/sine_surrogates.py
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from sciuq import autodiff as ad
from sciuq import cli
from sciuq import uq_stats as st
from sciuq.inference import InferenceConfig, run
from sciuq.likelihoods import UqModel
from sciuq.problems import get_problem
from sciuq.processes import LogNormal, Process, VariableSpec
from sciuq.surrogates import Surrogate

CONFIGS = Path(__file__).parents[1] / "configs"


@dataclass(frozen=True)
class AmplitudeSine(Surrogate):
    """u(x) = A sin(w x) with theta = (A, w)."""

    n_params: int = 2

    def __call__(self, params, x):
        return params[0] * ad.sin(params[1] * x)

    def init_params(self, rng):
        return np.array([1.0, 10.0]) + 0.1 * rng.standard_normal(2)


def band_ratio(grid, summary):
    x, std = grid[:, 0], summary.std_total[:, 0]
    far = std[(x >= 0.2) & (x <= 1.0)].mean()
    near = std[(x >= -0.7) & (x <= -0.3)].mean()
    return far / near


def custom_run(seed=7):
    problem = get_problem("sine_regression")
    data = problem.make_dataset(0)
    # positive amplitude and frequency, centred loosely on the truth
    prior = LogNormal(mu=float(np.log(5.0)), sigma=1.0)
    model = UqModel([Process("u", AmplitudeSine(), VariableSpec.samplable(prior))],
                    problem.terms(data))
    ps = run(model, InferenceConfig(n_samples=2000, step_size=0.002, leapfrog_steps=20,
                                    warm_start=2000, lr=0.01, seed=seed))
    grid = problem.test_grid()
    fs = st.function_samples(lambda th, g: problem.predict(model, th, g), ps.samples, grid)
    summary = st.predictive_summary(fs, problem.aleatoric_std)
    amp, freq = ps.samples.mean(axis=0)
    print(f"  A = {amp:.3f}, w = {freq:.3f}")
    return st.rl2e(summary.mean, problem.reference(grid)), band_ratio(grid, summary)


def main():
    print(f"{'surrogate':12s} {'rl2e':>8s} {'far/near std':>13s}")
    for name in ("sine_hmc", "sine_generator"):
        res = cli.run_pipeline(cli.load_config(CONFIGS / f"{name}.toml"))
        label = "bnn" if name == "sine_hmc" else "generator"
        print(f"{label:12s} {res.metrics['rl2e']:8.4f} {band_ratio(res.grid, res.summary):13.2f}")
    err, ratio = custom_run()
    print(f"{'A sin(wx)':12s} {err:8.4f} {ratio:13.2f}")


if __name__ == "__main__":
    main()
