"""Probability recalibration: isotonic (pool-adjacent-violators) and sigmoid (Platt)."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.utils.validation import check_array, check_is_fitted

from ..exceptions import InputError
from .logistic import LogisticClassifier, _check_labels

CAL_EPS = 1e-3


def pool_adjacent_violators(y, weights=None):
    """Nondecreasing least-squares fit to ``y`` in the given order."""
    y = np.asarray(y, dtype=np.float64)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=np.float64)
    vals, wts, sizes = [], [], []
    for yi, wi in zip(y, w):
        vals.append(yi)
        wts.append(wi)
        sizes.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            v2, w2, s2 = vals.pop(), wts.pop(), sizes.pop()
            v1, w1, s1 = vals.pop(), wts.pop(), sizes.pop()
            wt = w1 + w2
            vals.append((v1 * w1 + v2 * w2) / wt)
            wts.append(wt)
            sizes.append(s1 + s2)
    return np.repeat(vals, sizes)


class IsotonicCalibrator(BaseEstimator):
    """Monotone map from raw scores to probabilities fit by PAV.

    Tied scores are pooled before PAV; predictions interpolate linearly between
    the fitted points and are flat beyond the observed score range.
    """

    def __init__(self, eps=CAL_EPS):
        self.eps = eps

    def fit(self, scores, labels):
        scores = np.asarray(scores, dtype=np.float64).ravel()
        labels = np.asarray(labels, dtype=np.float64).ravel()
        ux, inv = np.unique(scores, return_inverse=True)
        counts = np.bincount(inv).astype(np.float64)
        means = np.bincount(inv, weights=labels) / counts
        self.x_ = ux
        self.y_ = pool_adjacent_violators(means, counts)
        return self

    def transform(self, scores):
        check_is_fitted(self, "x_")
        out = np.interp(np.asarray(scores, dtype=np.float64).ravel(), self.x_, self.y_)
        return np.clip(out, self.eps, 1.0 - self.eps)

    predict = transform


class SigmoidCalibrator(BaseEstimator):
    """Two-parameter logistic map on the log-odds of the raw score."""

    def __init__(self, eps=CAL_EPS):
        self.eps = eps

    @staticmethod
    def _logit(scores):
        s = np.clip(np.asarray(scores, dtype=np.float64).ravel(), 1e-12, 1 - 1e-12)
        return np.log(s / (1 - s))

    def fit(self, scores, labels):
        z = self._logit(scores)[:, None]
        self.model_ = LogisticClassifier(degree=1, penalty=0.0).fit(z, labels)
        return self

    def transform(self, scores):
        check_is_fitted(self, "model_")
        p = self.model_.predict_proba(self._logit(scores)[:, None])[:, 1]
        return np.clip(p, self.eps, 1.0 - self.eps)

    predict = transform


_CALIBRATORS = {"isotonic": IsotonicCalibrator, "sigmoid": SigmoidCalibrator}


def _stratified_holdout(y, fraction, rng):
    hold = np.zeros(len(y), dtype=bool)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        k = int(round(fraction * len(idx)))
        k = min(max(k, 1), len(idx) - 1)
        hold[rng.choice(idx, size=k, replace=False)] = True
    return hold


class CalibratedClassifier(ClassifierMixin, BaseEstimator):
    """Fit ``base`` on part of the data and recalibrate it on a held-out slice.

    ``calibration_fraction`` of each class is held out (seeded by
    ``random_state``). With ``prefit=True`` the base estimator is assumed fitted
    and all rows passed to ``fit`` are used for calibration.
    """

    def __init__(self, base=None, method="isotonic", calibration_fraction=0.2, eps=CAL_EPS,
                 random_state=0, prefit=False):
        self.base = base
        self.method = method
        self.calibration_fraction = calibration_fraction
        self.eps = eps
        self.random_state = random_state
        self.prefit = prefit

    def fit(self, X, y):
        if self.method not in _CALIBRATORS:
            raise InputError(f"unknown calibration method {self.method!r}")
        if not 0.0 < self.calibration_fraction < 1.0:
            raise InputError("calibration_fraction must lie in (0, 1)")
        X, y = _check_labels(X, y)
        self.classes_ = np.array([0, 1])
        if self.prefit:
            self.base_ = self.base
            Xc, yc = X, y
        else:
            rng = np.random.default_rng(self.random_state)
            hold = _stratified_holdout(y, self.calibration_fraction, rng)
            base = LogisticClassifier() if self.base is None else self.base
            self.base_ = clone(base).fit(X[~hold], y[~hold])
            Xc, yc = X[hold], y[hold]
        raw = self.base_.predict_proba(Xc)[:, 1]
        self.calibrator_ = _CALIBRATORS[self.method](eps=self.eps).fit(raw, yc)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "calibrator_")
        X = check_array(X, dtype=np.float64)
        p1 = self.calibrator_.transform(self.base_.predict_proba(X)[:, 1])
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(int)


def calibrate_probabilities(model, holdout_features, holdout_labels, method="isotonic", eps=CAL_EPS):
    """Recalibrate an already fitted classifier on a holdout set."""
    if not hasattr(model, "predict_proba"):
        raise InputError("model must be a fitted probabilistic classifier")
    return CalibratedClassifier(model, method=method, eps=eps, prefit=True).fit(
        holdout_features, holdout_labels
    )


__all__ = [
    "CalibratedClassifier",
    "IsotonicCalibrator",
    "SigmoidCalibrator",
    "calibrate_probabilities",
    "pool_adjacent_violators",
]
