"""Multiply-robust estimation of counterfactual outcome functionals and causal change attribution."""

from .attribution import AttributionReport, ChangeAttribution, attribute, path_values, shapley_values
from .core import CausalStructure, ChangeVector, Functional, TwoSampleDataset, enumerate_change_vectors
from .estimator import CounterfactualEstimator, ThetaEstimate, plan_estimation
from .exceptions import MRAttribError
from .inference import multiplier_bootstrap
from .simulation import run_monte_carlo

__all__ = [
    "AttributionReport",
    "CausalStructure",
    "ChangeAttribution",
    "ChangeVector",
    "CounterfactualEstimator",
    "Functional",
    "MRAttribError",
    "ThetaEstimate",
    "TwoSampleDataset",
    "attribute",
    "enumerate_change_vectors",
    "multiplier_bootstrap",
    "path_values",
    "plan_estimation",
    "run_monte_carlo",
    "shapley_values",
]
