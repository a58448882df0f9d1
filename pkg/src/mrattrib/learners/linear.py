"""Polynomial least-squares regressors: OLS, ridge and LASSO."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..exceptions import InputError, NumericalError
from ._features import PolynomialStandardizer, content_folds, default_grid
from ._solvers import coordinate_descent, quadratic_objective


def _check_xy(X, y):
    try:
        return check_X_y(X, y, dtype=np.float64, y_numeric=True, ensure_min_samples=2)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _check_penalty(penalty, grid):
    if isinstance(penalty, str):
        if penalty != "cv":
            raise InputError(f"penalty must be a number >= 0 or 'cv', got {penalty!r}")
        grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
        if grid.size == 0 or np.any(grid < 0):
            raise InputError("cv_grid must be a nonempty list of penalties >= 0")
        return None, np.sort(grid)[::-1]
    if not np.isfinite(penalty) or penalty < 0:
        raise InputError(f"penalty must be >= 0, got {penalty}")
    return float(penalty), None


class _PolynomialRegressor(RegressorMixin, BaseEstimator):
    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return self.features_.expand(X) @ self.coef_ + self.intercept_

    def _finish(self, b0, b):
        self.intercept_, self.coef_ = self.features_.to_original(b0, b)
        self.coef_std_ = b
        return self


class LinearRegressor(_PolynomialRegressor):
    """Least squares on a polynomial expansion, optionally ridge-penalized.

    The objective on standardized features is
    ``(1/2n) ||y - b0 - Z b||^2 + (penalty/2) ||b||^2`` with the intercept
    unpenalized. ``penalty="cv"`` picks the penalty from ``cv_grid`` by k-fold
    mean squared error.
    """

    def __init__(self, degree=2, penalty=0.0, cv_grid=None, cv_folds=5, random_state=0):
        self.degree = degree
        self.penalty = penalty
        self.cv_grid = cv_grid
        self.cv_folds = cv_folds
        self.random_state = random_state

    @staticmethod
    def _solve(G, c, lam):
        p = G.shape[0]
        M = G + lam * np.eye(p)
        if lam == 0.0 and p > 0:
            cond = np.linalg.cond(M) if p else 1.0
            if not np.isfinite(cond) or cond > 1e12:
                raise NumericalError(
                    "singular unpenalized design (collinear expanded features); use a ridge penalty > 0"
                )
        return np.linalg.solve(M, c) if p else np.zeros(0)

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        if self.degree < 1:
            raise InputError("degree must be >= 1")
        lam, grid = _check_penalty(self.penalty, self.cv_grid)
        self.features_ = PolynomialStandardizer(self.degree).fit(X)
        Z = self.features_.transform(X)[:, self.features_.active_]
        if grid is not None:
            lam = self._cv(Z, y, grid)
        ybar = y.mean()
        G = Z.T @ Z / len(y)
        c = Z.T @ (y - ybar) / len(y)
        b_active = self._solve(G, c, lam)
        b = np.zeros(self.features_.n_output_features)
        b[self.features_.active_] = b_active
        self.penalty_ = lam
        return self._finish(ybar, b)

    def _cv(self, Z, y, grid):
        folds = content_folds(Z, y, self.cv_folds, self.random_state)
        self.cv_fold_assignment_ = folds
        mse = np.zeros(len(grid))
        for f in range(self.cv_folds):
            tr, va = folds != f, folds == f
            ybar = y[tr].mean()
            G = Z[tr].T @ Z[tr] / tr.sum()
            c = Z[tr].T @ (y[tr] - ybar) / tr.sum()
            for i, lam in enumerate(grid):
                b = np.linalg.solve(G + lam * np.eye(G.shape[0]), c) if lam > 0 else np.linalg.lstsq(G, c, rcond=None)[0]
                mse[i] += np.mean((y[va] - ybar - Z[va] @ b) ** 2)
        self.cv_mse_ = mse / self.cv_folds
        return float(grid[np.argmin(self.cv_mse_)])


class LassoRegressor(_PolynomialRegressor):
    """LASSO by coordinate descent on a polynomial expansion.

    Minimizes ``(1/2n) ||y - b0 - Z b||^2 + penalty * ||b||_1`` over
    standardized features ``Z``; coefficients are reported on the original
    scale. With ``penalty="cv"`` the path over ``cv_grid`` is traced with warm
    starts and the penalty with the lowest k-fold MSE is refit on all rows.
    """

    def __init__(self, degree=1, penalty="cv", cv_grid=None, cv_folds=5, random_state=0,
                 tol=1e-10, max_iter=10_000):
        self.degree = degree
        self.penalty = penalty
        self.cv_grid = cv_grid
        self.cv_folds = cv_folds
        self.random_state = random_state
        self.tol = tol
        self.max_iter = max_iter

    def _gram(self, Z, y):
        ybar = y.mean()
        return ybar, Z.T @ Z / len(y), Z.T @ (y - ybar) / len(y)

    def fit(self, X, y, coef_init=None):
        X, y = _check_xy(X, y)
        if self.degree < 1:
            raise InputError("degree must be >= 1")
        lam, grid = _check_penalty(self.penalty, self.cv_grid)
        self.features_ = PolynomialStandardizer(self.degree).fit(X)
        Z = self.features_.transform(X)
        ybar, G, c = self._gram(Z, y)
        if grid is not None:
            lam = self._cv(Z, y, grid)
            b = np.zeros(Z.shape[1])
            for g in grid[grid >= lam]:
                b, _, _ = coordinate_descent(G, c, g, b0=b, max_iter=self.max_iter, tol=self.tol)
        else:
            b, self.n_iter_, self.objective_path_ = coordinate_descent(
                G, c, lam, b0=coef_init, max_iter=self.max_iter, tol=self.tol, record=True
            )
        self.penalty_ = lam
        self.objective_ = quadratic_objective(G, c, lam, np.ones(len(c)), b)
        return self._finish(ybar, b)

    def _cv(self, Z, y, grid):
        folds = content_folds(Z, y, self.cv_folds, self.random_state)
        self.cv_fold_assignment_ = folds
        mse = np.zeros(len(grid))
        for f in range(self.cv_folds):
            tr, va = folds != f, folds == f
            ybar, G, c = self._gram(Z[tr], y[tr])
            b = np.zeros(Z.shape[1])
            for i, lam in enumerate(grid):
                b, _, _ = coordinate_descent(G, c, lam, b0=b, max_iter=self.max_iter, tol=self.tol)
                mse[i] += np.mean((y[va] - ybar - Z[va] @ b) ** 2)
        self.cv_mse_ = mse / self.cv_folds
        # grid is descending: argmin keeps the largest penalty among ties
        return float(grid[np.argmin(self.cv_mse_)])
