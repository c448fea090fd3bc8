"""Function samples, predictive summaries, metrics and variance calibration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyCalibrationSet, EmptySamples, ZeroReference, ZeroVariance
from .processes import LOG_2PI


@dataclass
class FunctionSamples:
    """Surrogate outputs for each posterior draw: ``values[j, i, d]``."""

    values: np.ndarray
    grid: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 2:
            self.values = self.values[:, :, None]
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.ndim == 1:
            self.grid = self.grid.reshape(-1, 1)
        if self.values.shape[0] == 0:
            raise EmptySamples("no function samples")
        if not np.isfinite(self.values).all():
            raise ValueError("function samples contain NaN or Inf")

    @property
    def n_samples(self):
        return self.values.shape[0]


@dataclass
class PredictiveSummary:
    mean: np.ndarray
    var_aleatoric: np.ndarray
    var_epistemic: np.ndarray
    var_total: np.ndarray

    @property
    def std_aleatoric(self):
        return np.sqrt(self.var_aleatoric)

    @property
    def std_epistemic(self):
        return np.sqrt(self.var_epistemic)

    @property
    def std_total(self):
        return np.sqrt(self.var_total)

    def take(self, idx) -> PredictiveSummary:
        return PredictiveSummary(self.mean[idx], self.var_aleatoric[idx],
                                 self.var_epistemic[idx], self.var_total[idx])


def function_samples(evaluate, samples, grid) -> FunctionSamples:
    """Stack ``evaluate(theta, grid)`` over the rows of ``samples``."""
    samples = np.atleast_2d(samples)
    if samples.shape[0] == 0:
        raise EmptySamples("no posterior samples")
    return FunctionSamples(np.stack([np.asarray(evaluate(th, grid)) for th in samples]), grid)


def predictive_summary(fs: FunctionSamples, sigma_aleatoric) -> PredictiveSummary:
    """Sample mean and the aleatoric plus epistemic split of the variance.

    The epistemic part uses divisor M.  ``sigma_aleatoric`` may be a scalar
    or one value per output component.
    """
    vals = fs.values
    if vals.shape[0] == 0:
        raise EmptySamples("no function samples")
    sig = np.asarray(sigma_aleatoric, dtype=float)
    if np.any(sig < 0):
        raise ValueError("aleatoric std must be non-negative")
    # shifted two-pass: identical draws give exactly zero epistemic variance
    d = vals - vals[0]
    dbar = d.mean(axis=0)
    mean = vals[0] + dbar
    epi = ((d - dbar) ** 2).mean(axis=0)
    ale = np.broadcast_to(sig * sig, mean.shape).copy()
    return PredictiveSummary(mean, ale, epi, ale + epi)


def _flat(a):
    return np.asarray(a, dtype=float).ravel()


def rl2e(mean, ref) -> float:
    mean, ref = _flat(mean), _flat(ref)
    denom = np.linalg.norm(ref)
    if denom == 0:
        raise ZeroReference("reference has zero norm")
    return float(np.linalg.norm(mean - ref) / denom)


def mse(mean, ref) -> float:
    d = _flat(mean) - _flat(ref)
    return float(np.mean(d * d))


def nll(summary: PredictiveSummary, targets) -> float:
    """Mean Gaussian negative log-likelihood under the total variance."""
    var = _flat(summary.var_total)
    if np.any(var <= 0):
        raise ZeroVariance("total predictive variance must be positive")
    r = _flat(targets) - _flat(summary.mean)
    return float(np.mean(0.5 * r * r / var + 0.5 * np.log(var) + 0.5 * LOG_2PI))


def calibration_scale(summary: PredictiveSummary, targets) -> float:
    var = _flat(summary.var_total)
    if var.size == 0:
        raise EmptyCalibrationSet("calibration set is empty")
    if np.any(var <= 0):
        raise ZeroVariance("total predictive variance must be positive")
    r = _flat(targets) - _flat(summary.mean)
    return math.sqrt(float(np.mean(r * r / var)))


def rescale(summary: PredictiveSummary, s: float) -> PredictiveSummary:
    """Multiply every standard deviation by ``s``; the mean is untouched."""
    s2 = s * s
    ale = summary.var_aleatoric * s2
    epi = summary.var_epistemic * s2
    return PredictiveSummary(summary.mean.copy(), ale, epi, ale + epi)


def calibrate_variance(summary: PredictiveSummary, targets):
    """Optimal single-scale recalibration; returns ``(s, recalibrated summary)``."""
    s = calibration_scale(summary, targets)
    return s, rescale(summary, s)
