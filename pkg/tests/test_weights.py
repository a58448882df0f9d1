import numpy as np
import pytest

from mrattrib.core import TwoSampleDataset, validate_structure
from mrattrib.exceptions import InputError, NumericalError
from mrattrib.learners import ClassifierSpec, LogisticClassifier
from mrattrib.weights import (
    AutomaticDensityRatio,
    ClassifierDensityRatio,
    bayes_weight,
    conditional_ratio,
    fit_rn_automatic,
    fit_rn_classification,
)


@pytest.mark.parametrize("beta, n0, n1, expected", [(0.5, 500, 500, 1.0), (2 / 3, 500, 500, 2.0), (0.9, 300, 100, 27.0)])
def test_bayes_weight(beta, n0, n1, expected):
    assert bayes_weight(beta, n0, n1) == pytest.approx(expected, rel=1e-12)


def test_bayes_weight_rejects_boundary():
    for beta in (0.0, 1.0, 1.2):
        with pytest.raises(InputError):
            bayes_weight(beta, 10, 10)


def _two_gaussians(n, shift, seed):
    rng = np.random.default_rng(seed)
    x = np.r_[rng.normal(size=n), rng.normal(shift, 1.0, size=n)][:, None]
    t = np.r_[np.zeros(n, dtype=int), np.ones(n, dtype=int)]
    return x, t


def test_identical_samples_give_unit_weights():
    n = 5000
    x, t = _two_gaussians(n, 0.0, 0)
    w = ClassifierDensityRatio(LogisticClassifier(degree=1)).fit(x, t).predict(x)
    assert abs(w.mean() - 1.0) <= 3 / np.sqrt(2 * n)


def test_gaussian_shift_weights_match_analytic_ratio():
    n = 10_000
    x, t = _two_gaussians(n // 2, 0.2, 1)
    w = ClassifierDensityRatio(LogisticClassifier(degree=1)).fit(x, t).predict(x)
    truth = np.exp(0.2 * x[:, 0] - 0.02)
    assert np.sqrt(np.mean((w - truth) ** 2)) <= 0.1


def test_conditional_weight_cancels_when_only_x1_shifts():
    n = 10_000
    rng = np.random.default_rng(2)
    x1 = np.r_[rng.normal(size=n), rng.normal(0.5, 1.0, size=n)]
    x2 = 0.5 * x1 + rng.normal(size=2 * n)
    t = np.r_[np.zeros(n, dtype=int), np.ones(n, dtype=int)]
    model = validate_structure(TwoSampleDataset(t, np.column_stack([x1, x2]), rng.normal(size=2 * n)))
    wm = fit_rn_classification(model, 2, spec=ClassifierSpec("logistic_l2", degree=1))
    cond = wm.conditional_weight(model.X)
    assert abs(cond.mean() - 1.0) <= 5 / np.sqrt(2 * n)
    assert np.all(np.abs(cond - 1.0) < 0.2)


def test_prefix_zero_is_constant_one():
    rng = np.random.default_rng(3)
    model = validate_structure(TwoSampleDataset(np.r_[0, 0, 1, 1], rng.normal(size=(4, 1)), np.zeros(4)))
    wm = fit_rn_classification(model, 0)
    np.testing.assert_array_equal(wm.conditional_weight(model.X), 1.0)


def test_weights_are_clipped():
    x, t = _two_gaussians(2000, 4.0, 4)
    w = ClassifierDensityRatio(LogisticClassifier(degree=1), weight_bounds=(0.01, 100)).fit(x, t).predict(x)
    assert w.min() >= 0.01 and w.max() <= 100
    assert conditional_ratio(np.array([1.0]), np.array([0.0]), (1e-3, 1e3))[0] == 1e3


def test_reciprocal_direction_consistency():
    n = 5000
    x, t = _two_gaussians(n, 0.2, 5)
    hold, _ = _two_gaussians(1000, 0.2, 6)
    fwd = ClassifierDensityRatio(LogisticClassifier(degree=1), numerator=1).fit(x, t).predict(hold)
    rev = ClassifierDensityRatio(LogisticClassifier(degree=1), numerator=0).fit(x, t).predict(hold)
    assert 0.5 <= np.median(fwd * rev) <= 2.0


def test_rn_transfer_property():
    n = 20_000
    x, t = _two_gaussians(n, 0.3, 7)
    w = ClassifierDensityRatio(LogisticClassifier(degree=1)).fit(x, t).predict(x)
    for g in (lambda v: v, lambda v: v**2, lambda v: 1 + 0.5 * v - 0.2 * v**2):
        g1 = g(x[t == 1, 0])
        lhs, rhs = g1.mean(), np.mean(w[t == 0] * g(x[t == 0, 0]))
        assert abs(lhs - rhs) <= 5 * g1.std() / np.sqrt(n)


def test_automatic_intercept_only_gives_one():
    x, t = _two_gaussians(500, 1.0, 8)
    m = AutomaticDensityRatio(features="intercept").fit(x, t)
    np.testing.assert_allclose(m.predict(x), 1.0)


def test_automatic_binary_indicator_solution():
    f0 = np.r_[np.ones(500), np.zeros(500)][:, None]
    f1 = np.r_[np.ones(800), np.zeros(200)][:, None]
    wm = fit_rn_automatic(f0, f1, penalty=0.0, features="raw")
    np.testing.assert_allclose(wm.joint_weight(np.array([[1.0], [0.0]])), [1.6, 0.4], atol=1e-12)


def test_automatic_identical_samples():
    x, t = _two_gaussians(4000, 0.0, 9)
    m = fit_rn_automatic(x[t == 0], x[t == 1], degree=2)
    w = m.joint_weight(x)
    assert abs(w.mean() - 1.0) <= 3 / np.sqrt(len(x))


def test_automatic_matches_empirical_pmf_ratio_on_discrete_support():
    rng = np.random.default_rng(10)
    f0 = rng.choice(3, size=900, p=[0.2, 0.3, 0.5]).astype(float)
    f1 = rng.choice(3, size=700, p=[0.5, 0.3, 0.2]).astype(float)
    onehot = lambda v: np.column_stack([v == 1, v == 2]).astype(float)  # noqa: E731
    wm = fit_rn_automatic(onehot(f0), onehot(f1), features="raw")
    for k in range(3):
        ratio = np.mean(f1 == k) / np.mean(f0 == k)
        assert wm.joint_weight(onehot(np.array([float(k)])))[0] == pytest.approx(ratio, abs=1e-10)


def test_automatic_singular_gram_raises():
    f = np.ones((10, 1))
    with pytest.raises(NumericalError):
        fit_rn_automatic(f, f, features="raw")
