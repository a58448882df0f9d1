import numpy as np
import pytest
from scipy.stats import norm

from mrattrib.core import ChangeVector
from mrattrib.estimator import CounterfactualEstimator, ThetaEstimate
from mrattrib.exceptions import InputError
from mrattrib.inference import estimate_variance_ci, multiplier_bootstrap, recentered, two_sided_p
from mrattrib.simulation import Design1Params, simulate_design1

C = ChangeVector.parse("100")


def _est(psi0, psi1):
    return ThetaEstimate.from_psi(C, psi0, psi1, "MR")


def test_constant_psi_gives_degenerate_interval():
    ci = estimate_variance_ci(_est(np.full(10, 0.5), np.full(8, 1.5)))
    assert ci.se == 0.0 and ci.lo == ci.hi == 2.0


def test_balanced_variance_formula():
    rng = np.random.default_rng(0)
    a = rng.normal(size=500)
    b = rng.permutation(a) * 1.0 + 3.0
    est = _est(a, b)
    v = np.var(a, ddof=1)
    assert est.v_hat == pytest.approx(4 * v, rel=1e-12)
    ci = estimate_variance_ci(est, 0.9)
    assert ci.hi - ci.lo == pytest.approx(2 * norm.ppf(0.95) * ci.se, rel=1e-12)
    assert ci.se == pytest.approx(np.sqrt(4 * v / 1000), rel=1e-12)


def test_interval_rejects_bad_level():
    with pytest.raises(InputError):
        estimate_variance_ci(_est(np.ones(3), np.ones(3)), 1.5)


def test_recentering_gives_zero_mean():
    rng = np.random.default_rng(1)
    psi = rng.normal(3.0, 2.0, size=1001)
    assert abs(np.mean(recentered(psi))) <= 1e-15 * np.max(np.abs(psi))


@pytest.fixture(scope="module")
def design1_estimate():
    est = CounterfactualEstimator("100").fit(simulate_design1(Design1Params(seed=2)))
    return est.estimate_


def test_bootstrap_mean_and_sd(design1_estimate):
    e = design1_estimate
    B = 2000
    boot = multiplier_bootstrap([e], B, seed=3)
    assert abs(boot.draws[:, 0].mean() - e.theta_hat) <= 3 * e.se / np.sqrt(B)
    assert boot.se()[0] == pytest.approx(e.se, rel=0.10)
    g = multiplier_bootstrap([e], B, multiplier="gaussian", seed=3)
    assert g.se()[0] == pytest.approx(e.se, rel=0.10)


def test_bootstrap_is_seed_deterministic(design1_estimate):
    a = multiplier_bootstrap([design1_estimate], 50, seed=11)
    b = multiplier_bootstrap([design1_estimate], 50, seed=11)
    assert np.array_equal(a.draws, b.draws)
    assert not np.array_equal(a.draws, multiplier_bootstrap([design1_estimate], 50, seed=12).draws)


def test_joint_draws_preserve_dependence():
    rng = np.random.default_rng(4)
    psi0, psi1 = rng.normal(size=200), rng.normal(size=150)
    e1, e2 = _est(psi0, psi1), _est(psi0.copy(), psi1.copy())
    boot = multiplier_bootstrap([e1, e2], 300, seed=5)
    assert np.all(boot.draws[:, 0] - boot.draws[:, 1] == 0.0)


def test_bootstrap_se_invariant_to_target_order():
    rng = np.random.default_rng(6)
    es = [_est(rng.normal(size=100) * s, rng.normal(size=80)) for s in (1.0, 2.0, 3.0)]
    a = multiplier_bootstrap(es, 200, seed=7).se()
    b = multiplier_bootstrap(es[::-1], 200, seed=7).se()
    np.testing.assert_allclose(a, b[::-1], rtol=0, atol=1e-14)


def test_misaligned_psi_rejected():
    with pytest.raises(InputError):
        multiplier_bootstrap([_est(np.ones(5), np.ones(4)), _est(np.ones(6), np.ones(4))], 10)
    with pytest.raises(InputError):
        multiplier_bootstrap([_est(np.ones(5), np.ones(4))], 0)
    with pytest.raises(InputError):
        multiplier_bootstrap([_est(np.ones(5), np.ones(4))], 10, multiplier="rademacher")


def test_se_shrinks_under_duplication():
    rng = np.random.default_rng(8)
    psi0, psi1 = rng.normal(size=50), rng.normal(size=40)
    ses = [_est(np.tile(psi0, r), np.tile(psi1, r)).se for r in (1, 2, 4)]
    assert ses[0] >= ses[1] >= ses[2]


def test_two_sided_p_values():
    assert two_sided_p(0.0, 1.0) == 1.0
    assert two_sided_p(1.96, 1.0) == pytest.approx(0.05, abs=1e-3)
    np.testing.assert_array_equal(two_sided_p(np.array([0.0, 1.0]), np.array([0.0, 0.0])), [1.0, 0.0])
