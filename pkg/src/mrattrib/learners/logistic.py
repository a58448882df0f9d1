"""Logistic classifiers on polynomial features (ridge/IRLS and l1/proximal Newton)."""

import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..exceptions import InputError, SeparationWarning
from ._features import PolynomialStandardizer, content_folds, default_grid
from ._solvers import expit, logistic_l1, logistic_l2, logistic_loss
from .linear import _check_penalty


def _check_labels(X, y):
    try:
        X, y = check_X_y(X, y, dtype=np.float64)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0, 1))):
        raise InputError("labels must be binary 0/1")
    if len(classes) < 2:
        raise InputError("labels contain a single class; both 0 and 1 are required")
    return X, y.astype(np.float64)


class _LogisticBase(ClassifierMixin, BaseEstimator):
    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return self.features_.expand(X) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p1 = expit(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(int)

    def _setup(self, X, y):
        X, y = _check_labels(X, y)
        if self.degree < 1:
            raise InputError("degree must be >= 1")
        self.classes_ = np.array([0, 1])
        self.features_ = PolynomialStandardizer(self.degree).fit(X)
        return self.features_.transform(X)[:, self.features_.active_], y

    def _finish(self, theta):
        b = np.zeros(self.features_.n_output_features)
        b[self.features_.active_] = theta[1:]
        self.intercept_, self.coef_ = self.features_.to_original(theta[0], b)
        return self

    def _cv(self, Z, y, grid):
        folds = content_folds(Z, y, self.cv_folds, self.random_state)
        self.cv_fold_assignment_ = folds
        loss = np.zeros(len(grid))
        for f in range(self.cv_folds):
            tr, va = folds != f, folds == f
            if len(np.unique(y[tr])) < 2:
                continue
            warm = None
            for i, lam in enumerate(grid):
                theta, warm = self._solve(Z[tr], y[tr], lam, warm)
                loss[i] += logistic_loss(theta[0] + Z[va] @ theta[1:], y[va])
        self.cv_loss_ = loss / self.cv_folds
        return float(grid[np.argmin(self.cv_loss_)])


class LogisticClassifier(_LogisticBase):
    """Ridge-penalized logistic regression fit by iteratively reweighted least squares.

    Objective on standardized features: mean log-loss plus
    ``(penalty/2) ||b||^2`` (intercept free). Newton steps stop once the
    gradient norm is below ``gtol`` or after ``max_iter`` iterations.
    """

    def __init__(self, degree=2, penalty=0.0, cv_grid=None, cv_folds=5, random_state=0,
                 gtol=1e-8, max_iter=100):
        self.degree = degree
        self.penalty = penalty
        self.cv_grid = cv_grid
        self.cv_folds = cv_folds
        self.random_state = random_state
        self.gtol = gtol
        self.max_iter = max_iter

    def _solve(self, Z, y, lam, warm=None):
        A = np.column_stack([np.ones(len(y)), Z])
        pen = np.ones(A.shape[1])
        pen[0] = 0.0
        theta, n_iter, converged = logistic_l2(A, y, lam, pen, self.max_iter, self.gtol)
        return theta, (n_iter, converged)

    def fit(self, X, y):
        Z, y = self._setup(X, y)
        lam, grid = _check_penalty(self.penalty, self.cv_grid)
        if grid is not None:
            lam = self._cv(Z, y, grid)
        theta, (self.n_iter_, self.converged_) = self._solve(Z, y, lam)
        # A hyperplane classifying every training row correctly means the data
        # are separable and the unpenalized optimum does not exist.
        margin = (2 * y - 1) * (theta[0] + Z @ theta[1:])
        separated = bool(np.all(margin > 0))
        if lam == 0.0 and (separated or not self.converged_ or np.max(np.abs(theta[1:]), initial=0.0) > 1e4):
            warnings.warn(
                "unpenalized logistic fit did not converge or coefficients diverge "
                "(possible separation); consider penalty > 0",
                SeparationWarning,
                stacklevel=2,
            )
        self.penalty_ = lam
        return self._finish(theta)


class L1LogisticClassifier(_LogisticBase):
    """Logistic regression with an l1 penalty (Logit-LASSO).

    Minimizes mean log-loss plus ``penalty * ||b||_1`` by proximal Newton steps,
    each solved with coordinate descent on the weighted quadratic model.
    """

    def __init__(self, degree=1, penalty="cv", cv_grid=None, cv_folds=5, random_state=0,
                 tol=1e-7, max_iter=100):
        self.degree = degree
        self.penalty = penalty
        self.cv_grid = cv_grid
        self.cv_folds = cv_folds
        self.random_state = random_state
        self.tol = tol
        self.max_iter = max_iter

    def _solve(self, Z, y, lam, warm=None):
        theta, _ = logistic_l1(Z, y, lam, warm, max_iter=self.max_iter, tol=self.tol)
        return theta, theta

    def fit(self, X, y):
        Z, y = self._setup(X, y)
        lam, grid = _check_penalty(self.penalty, self.cv_grid)
        if grid is not None:
            lam = self._cv(Z, y, grid)
            theta = None
            for g in grid[grid >= lam]:
                theta, _ = self._solve(Z, y, g, theta)
        else:
            theta, _ = self._solve(Z, y, lam)
        self.penalty_ = lam
        return self._finish(theta)
