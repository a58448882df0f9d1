"""Built-in regression and classification learners with a scikit-learn interface."""

from .calibration import (
    CalibratedClassifier,
    IsotonicCalibrator,
    SigmoidCalibrator,
    calibrate_probabilities,
    pool_adjacent_violators,
)
from .discrete import CellFrequencyClassifier, CellMeanRegressor
from .linear import LassoRegressor, LinearRegressor
from .logistic import L1LogisticClassifier, LogisticClassifier
from .precomputed import PrecomputedClassifier, PrecomputedRegressor, read_predictions
from .specs import ClassifierSpec, RegressorSpec, fit_linear_regressor, fit_logistic_classifier

__all__ = [
    "CalibratedClassifier",
    "CellFrequencyClassifier",
    "CellMeanRegressor",
    "ClassifierSpec",
    "IsotonicCalibrator",
    "L1LogisticClassifier",
    "LassoRegressor",
    "LinearRegressor",
    "LogisticClassifier",
    "PrecomputedClassifier",
    "PrecomputedRegressor",
    "RegressorSpec",
    "SigmoidCalibrator",
    "calibrate_probabilities",
    "fit_linear_regressor",
    "fit_logistic_classifier",
    "pool_adjacent_violators",
    "read_predictions",
]
