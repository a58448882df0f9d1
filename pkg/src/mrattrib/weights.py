"""Radon-Nikodym weights between the two samples' laws of a variable prefix.

Two routes are provided. The classification route trains a probabilistic
classifier of the sample label and converts posterior odds into a density
ratio. The automatic route minimizes ``E_den[m^2] - 2 E_num[m]`` over a
linear-in-features class, whose minimizer is the density ratio itself.
Conditional ratios for ``X_j | X_1..X_{j-1}`` are formed as the ratio of two
prefix weights.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import InputError, NumericalError
from .learners import LogisticClassifier
from .learners._features import PolynomialStandardizer

PROB_CLIP = 1e-3
WEIGHT_BOUNDS = (1e-3, 1e3)


def bayes_weight(beta, n0, n1):
    """Density ratio dP1/dP0 from the posterior ``beta = Pr(T=1 | x)``."""
    b = np.asarray(beta, dtype=np.float64)
    if np.any((b <= 0) | (b >= 1)) or not np.all(np.isfinite(b)):
        raise InputError("posterior probabilities must lie strictly inside (0, 1)")
    if n0 < 1 or n1 < 1:
        raise InputError("sample sizes must be >= 1")
    out = b / (1.0 - b) * (n0 / n1)
    return float(out) if out.ndim == 0 else out


def _check_samples(X, t):
    X = check_array(X, dtype=np.float64, ensure_min_features=0)
    t = np.asarray(t).ravel()
    if len(t) != len(X):
        raise InputError("X and t have different numbers of rows")
    if not (np.any(t == 0) and np.any(t == 1)):
        raise InputError("both samples must be nonempty")
    return X, t.astype(np.int64)


class ClassifierDensityRatio(BaseEstimator):
    """``dP(numerator)/dP(1 - numerator)`` of ``X`` via a probabilistic classifier.

    Posterior probabilities are clipped to ``[prob_clip, 1 - prob_clip]``
    before the odds conversion, and the resulting weights to
    ``weight_bounds``. With zero columns the ratio is identically 1.
    """

    def __init__(self, classifier=None, numerator=1, prob_clip=PROB_CLIP, weight_bounds=WEIGHT_BOUNDS):
        self.classifier = classifier
        self.numerator = numerator
        self.prob_clip = prob_clip
        self.weight_bounds = weight_bounds

    def fit(self, X, t):
        X, t = _check_samples(X, t)
        self.n0_, self.n1_ = int(np.sum(t == 0)), int(np.sum(t == 1))
        self.n_features_in_ = X.shape[1]
        if X.shape[1] == 0:
            self.classifier_ = None
            return self
        clf = LogisticClassifier() if self.classifier is None else self.classifier
        self.classifier_ = clone(clf).fit(X, t)
        return self

    def posterior(self, X):
        check_is_fitted(self, "n0_")
        X = check_array(X, dtype=np.float64, ensure_min_features=0)
        if self.classifier_ is None:
            return np.full(len(X), self.n1_ / (self.n0_ + self.n1_))
        return self.classifier_.predict_proba(X)[:, 1]

    def clipped_fraction(self, X):
        """Share of rows whose posterior falls outside the probability clip."""
        p = self.posterior(X)
        lo = self.prob_clip
        return float(np.mean((p < lo) | (p > 1.0 - lo))) if len(p) else 0.0

    def predict(self, X):
        lo = self.prob_clip
        pc = np.clip(self.posterior(X), lo, 1.0 - lo)
        w = bayes_weight(pc, self.n0_, self.n1_)
        if self.numerator == 0:
            w = 1.0 / w
        return np.clip(w, *self.weight_bounds)


class AutomaticDensityRatio(BaseEstimator):
    """Density ratio by minimizing ``E_den[m^2] - 2 E_num[m]`` over ``m = b' phi(x)``.

    ``phi`` is a polynomial expansion plus an intercept. The ridge penalty acts
    on the non-intercept coefficients:
    ``b = (E_den[phi phi'] + penalty * D)^{-1} E_num[phi]``.
    """

    def __init__(self, degree=2, penalty=0.0, numerator=1, weight_bounds=WEIGHT_BOUNDS, features="poly"):
        self.degree = degree
        self.penalty = penalty
        self.numerator = numerator
        self.weight_bounds = weight_bounds
        self.features = features

    def _phi(self, X):
        if self.features == "intercept" or X.shape[1] == 0:
            return np.ones((len(X), 1))
        if self.features == "raw":
            return np.column_stack([np.ones(len(X)), X])
        return np.column_stack([np.ones(len(X)), self.map_.expand(X)])

    def fit(self, X, t):
        X, t = _check_samples(X, t)
        if self.penalty < 0:
            raise InputError("penalty must be >= 0")
        if self.features == "poly" and X.shape[1] > 0:
            self.map_ = PolynomialStandardizer(self.degree, standardize=False).fit(X)
        num, den = (t == self.numerator), (t != self.numerator)
        Phi_num, Phi_den = self._phi(X[num]), self._phi(X[den])
        M = Phi_den.T @ Phi_den / len(Phi_den)
        D = np.eye(M.shape[0])
        D[0, 0] = 0.0
        A = M + self.penalty * D
        if self.penalty == 0 and np.linalg.cond(A) > 1e12:
            raise NumericalError("singular Gram matrix for automatic weights; use penalty > 0")
        self.coef_ = np.linalg.solve(A, Phi_num.mean(axis=0))
        self.n_features_in_ = X.shape[1]
        return self

    def predict_raw(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64, ensure_min_features=0)
        return self._phi(X) @ self.coef_

    def predict(self, X):
        return np.clip(self.predict_raw(X), *self.weight_bounds)


def conditional_ratio(joint, previous, weight_bounds=WEIGHT_BOUNDS):
    """Ratio of a prefix-j weight to a prefix-(j-1) weight, denominator floored."""
    lo, hi = weight_bounds
    return np.clip(np.asarray(joint) / np.maximum(np.asarray(previous), lo), lo, hi)


@dataclass(frozen=True, eq=False)
class WeightModel:
    """Weights for the prefix ``X_1..X_j`` and the conditional ``X_j | X_1..X_{j-1}``.

    ``joint`` and ``previous`` are fitted ratio estimators (``previous`` is
    ``None`` when ``j == 1``). Columns passed to the evaluators are the full
    ``X`` matrix; slicing to the prefix happens here.
    """

    route: str
    numerator_sample: int
    denominator_sample: int
    feature_scope: int
    joint: object
    previous: object
    clip: tuple

    def joint_weight(self, X):
        X = np.asarray(X, dtype=np.float64)
        if self.feature_scope == 0:
            return np.ones(len(X))
        return self.joint.predict(X[:, : self.feature_scope])

    def conditional_weight(self, X):
        X = np.asarray(X, dtype=np.float64)
        if self.feature_scope == 0:
            return np.ones(len(X))
        joint = self.joint_weight(X)
        if self.previous is None:
            return joint
        prev = self.previous.predict(X[:, : self.feature_scope - 1])
        return conditional_ratio(joint, prev, self.clip)


def _prefix_models(make, X, t, j):
    if not 0 <= j <= X.shape[1]:
        raise InputError(f"prefix index must lie in 0..{X.shape[1]}, got {j}")
    if j == 0:
        return None, None
    joint = make().fit(X[:, :j], t)
    prev = make().fit(X[:, : j - 1], t) if j > 1 else None
    return joint, prev


def fit_rn_classification(data, j, direction=(1, 0), spec=None, prob_clip=PROB_CLIP,
                          weight_bounds=WEIGHT_BOUNDS, random_state=0):
    """Classification-route weights for prefix ``j`` of a validated model.

    ``direction`` is ``(numerator, denominator)`` sample labels. ``spec`` is a
    :class:`ClassifierSpec` or any scikit-learn classifier.
    """
    num, den = direction
    if {num, den} != {0, 1}:
        raise InputError("direction must be (1, 0) or (0, 1)")
    clf = spec.build(random_state) if hasattr(spec, "build") else spec

    def make():
        return ClassifierDensityRatio(clf, numerator=num, prob_clip=prob_clip, weight_bounds=weight_bounds)

    joint, prev = _prefix_models(make, data.X, data.t, j)
    return WeightModel("classification", num, den, j, joint, prev, tuple(weight_bounds))


def fit_rn_automatic(features0, features1, penalty=0.0, degree=2, weight_bounds=WEIGHT_BOUNDS,
                     features="poly"):
    """Automatic-route weights ``dP1/dP0`` from the two samples' feature matrices."""
    f0 = check_array(features0, dtype=np.float64, ensure_min_features=0)
    f1 = check_array(features1, dtype=np.float64, ensure_min_features=0)
    if len(f0) == 0 or len(f1) == 0:
        raise InputError("both feature sets must be nonempty")
    if f0.shape[1] != f1.shape[1]:
        raise InputError("feature sets have different widths")
    X = np.vstack([f0, f1])
    t = np.r_[np.zeros(len(f0), dtype=int), np.ones(len(f1), dtype=int)]
    model = AutomaticDensityRatio(degree=degree, penalty=penalty, numerator=1,
                                  weight_bounds=weight_bounds, features=features).fit(X, t)
    return WeightModel("automatic", 1, 0, X.shape[1], model, None, tuple(weight_bounds))
