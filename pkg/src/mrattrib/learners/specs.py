"""Declarative learner specifications and their builders."""

from dataclasses import asdict, dataclass, field

import numpy as np

from ..exceptions import InputError
from .calibration import CAL_EPS, CalibratedClassifier
from .linear import LassoRegressor, LinearRegressor
from .logistic import L1LogisticClassifier, LogisticClassifier

REGRESSOR_FAMILIES = ("ols_poly", "ridge_poly", "lasso")
CLASSIFIER_FAMILIES = ("logistic_l2", "logistic_l1")
CALIBRATIONS = ("none", "isotonic", "sigmoid")


def _default_grid():
    return [float(v) for v in np.logspace(-4, 2, 20)]


def _check_common(family, families, degree, penalty, cv_grid, cv_folds):
    if family not in families:
        raise InputError(f"family must be one of {families}, got {family!r}")
    if int(degree) != degree or degree < 1:
        raise InputError(f"degree must be an integer >= 1, got {degree!r}")
    if isinstance(penalty, str):
        if penalty != "cv":
            raise InputError(f"penalty must be >= 0 or 'cv', got {penalty!r}")
        if not cv_grid or any(v < 0 for v in cv_grid):
            raise InputError("cv_grid must be nonempty with values >= 0")
    elif penalty < 0:
        raise InputError(f"penalty must be >= 0, got {penalty}")
    if cv_folds < 2:
        raise InputError("cv_folds must be >= 2")


@dataclass(frozen=True)
class RegressorSpec:
    family: str = "ols_poly"
    degree: int = None
    penalty: object = 0.0
    cv_grid: tuple = field(default_factory=lambda: tuple(_default_grid()))
    cv_folds: int = 5

    def __post_init__(self):
        if self.degree is None:
            object.__setattr__(self, "degree", 1 if self.family == "lasso" else 2)
        if self.family == "ols_poly" and self.penalty not in (0, 0.0):
            raise InputError("ols_poly takes no penalty; use ridge_poly")
        _check_common(self.family, REGRESSOR_FAMILIES, self.degree, self.penalty, self.cv_grid,
                      self.cv_folds)

    def build(self, random_state=0):
        if self.family == "lasso":
            return LassoRegressor(degree=self.degree, penalty=self.penalty, cv_grid=list(self.cv_grid),
                                  cv_folds=self.cv_folds, random_state=random_state)
        return LinearRegressor(degree=self.degree, penalty=self.penalty, cv_grid=list(self.cv_grid),
                               cv_folds=self.cv_folds, random_state=random_state)

    def to_dict(self):
        d = asdict(self)
        d["cv_grid"] = list(self.cv_grid)
        return d


@dataclass(frozen=True)
class ClassifierSpec:
    family: str = "logistic_l2"
    degree: int = None
    penalty: object = 0.0
    calibration: str = "none"
    calibration_fraction: float = 0.2
    cv_grid: tuple = field(default_factory=lambda: tuple(_default_grid()))
    cv_folds: int = 5
    eps: float = CAL_EPS

    def __post_init__(self):
        if self.degree is None:
            object.__setattr__(self, "degree", 1 if self.family == "logistic_l1" else 2)
        _check_common(self.family, CLASSIFIER_FAMILIES, self.degree, self.penalty, self.cv_grid,
                      self.cv_folds)
        if self.calibration not in CALIBRATIONS:
            raise InputError(f"calibration must be one of {CALIBRATIONS}")
        if not 0.0 < self.calibration_fraction < 1.0:
            raise InputError("calibration_fraction must lie in (0, 1)")

    def build(self, random_state=0):
        cls = L1LogisticClassifier if self.family == "logistic_l1" else LogisticClassifier
        base = cls(degree=self.degree, penalty=self.penalty, cv_grid=list(self.cv_grid),
                   cv_folds=self.cv_folds, random_state=random_state)
        if self.calibration == "none":
            return base
        return CalibratedClassifier(base, method=self.calibration,
                                    calibration_fraction=self.calibration_fraction, eps=self.eps,
                                    random_state=random_state)

    def to_dict(self):
        d = asdict(self)
        d["cv_grid"] = list(self.cv_grid)
        return d


def fit_linear_regressor(spec, features, targets, random_state=0):
    return spec.build(random_state).fit(features, targets)


def fit_logistic_classifier(spec, features, labels, random_state=0):
    return spec.build(random_state).fit(features, labels)
