import itertools
import json

import numpy as np
import pytest

from mrattrib.attribution import (
    ChangeAttribution,
    attribute,
    path_values,
    permutation_shapley,
    shapley_values,
    shapley_weights,
)
from mrattrib.core import ChangeVector, TwoSampleDataset, enumerate_change_vectors
from mrattrib.exceptions import CapacityError, InputError
from mrattrib.simulation import Design1Params, simulate_design1


def _table(K, f):
    return {c: f(np.array(c.bits)) for c in enumerate_change_vectors(K)}


def test_k1_shapley_expansion():
    th = {"00": 1.0, "10": 1.7, "01": 2.5, "11": 2.9}
    shap = shapley_values(th)
    assert shap[0] == pytest.approx(0.5 * (1.7 - 1.0) + 0.5 * (2.9 - 2.5), abs=1e-15)
    assert shap.sum() == pytest.approx(1.9, abs=1e-15)


def test_dummy_mechanism_gets_zero():
    table = _table(3, lambda b: 0.3 * b[0] + 1.1 * b[1] * b[3] - 0.2 * b[3])
    shap = shapley_values(table)
    assert shap[2] == 0.0
    assert sum(shap) == pytest.approx(table[ChangeVector((1,) * 4)] - table[ChangeVector((0,) * 4)], abs=1e-12)


def test_constant_table_gives_zero_shapley():
    np.testing.assert_allclose(shapley_values(_table(2, lambda b: 4.2)), 0.0, atol=1e-14)


def test_symmetric_mechanisms_share_credit():
    table = _table(3, lambda b: (b[0] + b[2]) ** 2 + 0.3 * b[1])
    shap = shapley_values(table)
    assert abs(shap[0] - shap[2]) <= 1e-12


def test_missing_table_entries_listed():
    table = _table(2, lambda b: b.sum())
    del table[ChangeVector.parse("011")]
    with pytest.raises(InputError, match="011"):
        shapley_values(table)


def test_path_values():
    np.testing.assert_allclose(path_values([1.0, 1.4, 1.4, 2.0]), [0.4, 0.0, 0.6], atol=1e-15)
    np.testing.assert_array_equal(path_values([3.0] * 5), 0.0)
    with pytest.raises(InputError):
        path_values([1.0])


def test_exhaustive_permutations_reproduce_exact_shapley():
    rng = np.random.default_rng(0)
    for K in (1, 2, 3):
        vals = {c: rng.normal() for c in enumerate_change_vectors(K)}
        exact = shapley_values(vals)
        approx = permutation_shapley(vals, K, exhaustive=True)
        np.testing.assert_allclose(approx, exact, rtol=0, atol=1e-12)


def test_sampled_shapley_is_efficient_and_close():
    K = 3
    table = _table(K, lambda b: b @ np.array([0.1, 0.4, -0.2, 0.7]) + 0.3 * b[0] * b[3])
    approx = permutation_shapley(lambda c: table[c], K, M=400, seed=1)
    assert approx.sum() == pytest.approx(table[ChangeVector((1,) * 4)] - table[ChangeVector((0,) * 4)], abs=1e-12)
    np.testing.assert_allclose(approx, shapley_values(table), atol=0.05)


def test_shapley_weight_rows_sum_to_endpoint_difference():
    W, vectors = shapley_weights(3)
    total = W.sum(axis=0)
    expected = np.zeros(len(vectors))
    expected[0], expected[-1] = -1.0, 1.0
    np.testing.assert_allclose(total, expected, atol=1e-15)


@pytest.fixture(scope="module")
def design1_report():
    return attribute(simulate_design1(Design1Params(n0=500, n1=500, seed=3)), B=200, seed=4)


def test_report_identities_and_schema(design1_report):
    r = design1_report
    ones, zeros = ChangeVector.parse("111"), ChangeVector.parse("000")
    total = r.theta_table[ones].theta_hat - r.theta_table[zeros].theta_hat
    assert abs(r.shap.sum() - total) <= 1e-12 and abs(r.path.sum() - total) <= 1e-12
    d = json.loads(r.to_json())
    assert list(d) == ["theta", "shap", "path", "se", "p", "meta"]
    assert len(d["shap"]) == 3 and len(d["path"]) == 3 and len(d["theta"]) == 8
    assert d["meta"]["seed"] == 4 and d["meta"]["mode"] == "both"
    assert np.all(r.shap_se > 0) and np.all((r.path_p >= 0) & (r.path_p <= 1))
    lines = r.to_csv().strip().splitlines()
    assert lines[0] == "kind,name,estimate,se,p" and len(lines) == 1 + 8 + 3 + 3


def test_endpoints_are_raw_sample_means(design1_report):
    r = design1_report
    assert r.theta_table[ChangeVector.parse("000")].theta_hat == pytest.approx(
        np.mean(r.theta_table[ChangeVector.parse("000")].psi0), abs=0)


def test_identical_samples_attribute_nothing():
    rng = np.random.default_rng(5)
    p = Design1Params(n0=800, n1=800, mu1=Design1Params().mu0)
    data = simulate_design1(p, rng)
    r = attribute(data, B=300, seed=6)
    assert np.all(np.abs(r.shap) <= 3 * r.shap_se)
    assert np.all(np.abs(r.path) <= 3 * r.path_se)


def test_path_mode_estimates_only_path_vectors():
    r = attribute(simulate_design1(Design1Params(n0=300, n1=300, seed=7)), mode="path", B=50)
    assert sorted(str(c) for c in r.theta_table) == ["000", "100", "110", "111"]
    assert r.shap is None and r.to_dict()["shap"] is None


def test_capacity_and_sampling_mode():
    rng = np.random.default_rng(8)
    K = 12
    n = 300
    x = rng.normal(size=(2 * n, K))
    data = TwoSampleDataset(np.r_[np.zeros(n, int), np.ones(n, int)], x, x[:, -1] + rng.normal(size=2 * n))
    with pytest.raises(CapacityError):
        attribute(data, mode="shapley", B=10)
    from mrattrib.learners import LogisticClassifier, LinearRegressor

    r = attribute(data, mode="shapley", B=10, sampling=True, permutations=3, regressor=LinearRegressor(degree=1),
                  classifier=LogisticClassifier(degree=1))
    assert r.approximate and r.to_dict()["meta"]["approximate"] is True
    assert r.shap.sum() == pytest.approx(r.total_change, abs=1e-12)


def test_change_attribution_estimator():
    data = simulate_design1(Design1Params(n0=300, n1=300, seed=9))
    est = ChangeAttribution(B=20, mode="shapley").fit(data)
    assert est.shap_.shape == (3,) and est.path_ is None
    assert est.get_params()["mode"] == "shapley"


def test_threaded_table_matches_serial():
    data = simulate_design1(Design1Params(n0=300, n1=300, seed=10))
    a = attribute(data, B=20, threads=1)
    b = attribute(data, B=20, threads=4)
    assert a.to_json() == b.to_json()


def test_named_three_mechanism_schema():
    rng = np.random.default_rng(11)
    n = 400
    edu = rng.normal(size=2 * n)
    occ = 0.5 * edu + rng.normal(size=2 * n)
    t = np.r_[np.zeros(n, int), np.ones(n, int)]
    wage = edu + occ + 0.3 * t + rng.normal(size=2 * n)
    data = TwoSampleDataset(t, np.column_stack([edu, occ]), wage, names=("education", "occupation"),
                            outcome_name="wage")
    d = attribute(data, B=20).to_dict()
    assert d["meta"]["mechanisms"] == ["education", "occupation", "wage"]
    assert len(d["shap"]) == 3 and len(d["path"]) == 3 and len(d["theta"]) == 8


def test_permutation_exhaustive_count():
    assert len(list(itertools.permutations(range(4)))) == 24
