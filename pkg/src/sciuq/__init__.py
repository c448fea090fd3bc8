"""Uncertainty quantification for scientific machine learning.

Neural surrogates for ODE/PDE solutions and operators, a tape-based
autodiff engine with Taylor jets for residuals, and eight inference
methods producing posterior samples and predictive summaries.
"""

from .errors import UQError
from .inference import METHODS, InferenceConfig, PosteriorSamples, run
from .likelihoods import Dataset, Direct, OperatorDataset, ResidualFn, Term, UqModel
from .problems import CATALOG, get_problem
from .processes import HalfNormal, LogNormal, Normal, Process, VariableSpec
from .surrogates import DeepONetSpec, FnnSpec, GeneratorSpec, IdentitySpec, RescaledInput
from .uq_stats import PredictiveSummary, predictive_summary

__version__ = "0.1.0"

__all__ = [
    "CATALOG", "METHODS", "Dataset", "DeepONetSpec", "Direct", "FnnSpec", "GeneratorSpec",
    "HalfNormal", "IdentitySpec", "InferenceConfig", "LogNormal", "Normal", "OperatorDataset",
    "PosteriorSamples", "PredictiveSummary", "Process", "RescaledInput", "ResidualFn", "Term",
    "UQError", "UqModel", "VariableSpec", "get_problem", "predictive_summary", "run",
]
