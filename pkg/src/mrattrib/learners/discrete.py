"""Saturated learners for discrete features: per-cell means and frequencies.

On finite-support data these reproduce empirical conditional expectations and
empirical probability-mass ratios exactly, which makes them the reference
nuisances for brute-force checks.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted


def _cell_codes(X, cells=None):
    X = check_array(X, dtype=np.float64)
    if cells is None:
        cells, inv = np.unique(X, axis=0, return_inverse=True)
        return cells, inv.ravel()
    lookup = {tuple(row): i for i, row in enumerate(cells)}
    return cells, np.array([lookup.get(tuple(row), -1) for row in X], dtype=np.int64)


class CellMeanRegressor(RegressorMixin, BaseEstimator):
    """Predict the training mean of ``y`` within each distinct feature row.

    Unseen rows fall back to the overall training mean.
    """

    def fit(self, X, y):
        self.cells_, inv = _cell_codes(X)
        y = np.asarray(y, dtype=np.float64)
        self.means_ = np.bincount(inv, weights=y) / np.bincount(inv)
        self.fallback_ = float(y.mean())
        return self

    def predict(self, X):
        check_is_fitted(self, "means_")
        _, codes = _cell_codes(X, self.cells_)
        return np.where(codes >= 0, self.means_[np.maximum(codes, 0)], self.fallback_)


class CellFrequencyClassifier(ClassifierMixin, BaseEstimator):
    """Empirical ``Pr(label = 1 | cell)``; unseen cells get the base rate."""

    def fit(self, X, y):
        self.classes_ = np.array([0, 1])
        self.cells_, inv = _cell_codes(X)
        y = np.asarray(y, dtype=np.float64)
        self.p1_ = np.bincount(inv, weights=y) / np.bincount(inv)
        self.fallback_ = float(y.mean())
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "p1_")
        _, codes = _cell_codes(X, self.cells_)
        p1 = np.where(codes >= 0, self.p1_[np.maximum(codes, 0)], self.fallback_)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(int)
