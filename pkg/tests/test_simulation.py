import numpy as np
import pytest

from mrattrib.core import ChangeVector, enumerate_change_vectors
from mrattrib.exceptions import InputError
from mrattrib.simulation import (
    Design1Params,
    Design2Params,
    MCResult,
    draw_shifted_set,
    oracle_path_design2,
    oracle_table_design1,
    oracle_theta_design1,
    run_monte_carlo,
    simulate_design1,
    simulate_design2,
)


def test_design1_moments():
    p = Design1Params(n0=20_000, n1=20_000, seed=1)
    d = simulate_design1(p)
    x0 = d.x[d.t == 0]
    n = len(x0)
    assert abs(x0[:, 0].mean() - 1.0) <= 4 / np.sqrt(n)
    y0 = d.y[d.t == 0]
    assert abs(y0.mean() - 2.375) <= 4 * y0.std() / np.sqrt(n)
    assert abs(x0[:, 0].var() - 1.0) <= 0.05


def test_design1_is_deterministic_given_seed():
    a, b = simulate_design1(Design1Params(seed=2)), simulate_design1(Design1Params(seed=2))
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
    assert not np.array_equal(a.y, simulate_design1(Design1Params(seed=3)).y)


def test_design1_oracle_endpoints():
    table = oracle_table_design1()
    assert table[ChangeVector.parse("000")] == pytest.approx(2.375, abs=1e-12)
    assert table[ChangeVector.parse("111")] == pytest.approx(1.0 + 0.2 + 0.25 * 2.21 - 0.25 * (0.04 * 2.21 + 1), abs=1e-12)
    assert table[ChangeVector.parse("111")] == pytest.approx(1.4804, abs=1e-4)


def test_design1_analytic_and_simulated_oracles_agree():
    for c in enumerate_change_vectors(2):
        a = oracle_theta_design1(c)
        s = oracle_theta_design1(c, method="simulation", draws=1_000_000, seed=7)
        assert abs(a - s) <= 4 * 2.0 / np.sqrt(1_000_000)


def test_design1_oracle_rejects_wrong_size():
    with pytest.raises(InputError):
        oracle_theta_design1("0101")


def test_design2_shifted_count_and_zero_fraction():
    assert Design2Params(K=10, shift_fraction=0.1).n_shifted == 1
    assert Design2Params(K=10, shift_fraction=0.5).n_shifted == 6
    p = Design2Params(K=5, n=500, shift_fraction=0.0, seed=4)
    data, shifted = simulate_design2(p)
    assert shifted == ()
    np.testing.assert_array_equal(oracle_path_design2(p, shifted), 0.0)


def test_design2_single_shift_oracle():
    p = Design2Params(K=4, shift_size=0.2)
    np.testing.assert_allclose(oracle_path_design2(p, (2,)), [0, 0, 0.05, 0, 0])
    np.testing.assert_allclose(oracle_path_design2(p, (4,)), [0, 0, 0, 0, 0.2])
    rng = np.random.default_rng(0)
    s = draw_shifted_set(Design2Params(K=10, shift_fraction=0.3), rng)
    assert len(s) == 3 and len(set(s)) == 3 and all(0 <= k <= 10 for k in s)


def test_design2_stationary_moments_and_mean_shift():
    p = Design2Params(K=3, n=50_000, shift_fraction=0.0, seed=5)
    data, _ = simulate_design2(p)
    x = data.x[data.t == 0]
    np.testing.assert_allclose(x.var(axis=0), 1.0, atol=0.03)
    assert np.corrcoef(x[:, 0], x[:, 1])[0, 1] == pytest.approx(0.5, abs=0.02)
    p = Design2Params(K=3, n=50_000, shift_fraction=0.25, seed=6)
    data, shifted = simulate_design2(p)
    gap = data.y[data.t == 1].mean() - data.y[data.t == 0].mean()
    assert gap == pytest.approx(oracle_path_design2(p, shifted).sum(), abs=0.03)


def test_monte_carlo_is_thread_invariant_and_seeded():
    kw = dict(design=1, draws=4, seed=11, params=Design1Params(n0=200, n1=200))
    a = run_monte_carlo(threads=1, **kw)
    b = run_monte_carlo(threads=3, **kw)
    assert a.to_csv() == b.to_csv()
    assert a.draws == 4 and a.failures == 0
    assert a.errors["MR"].shape == (4, 9)


def test_mc_result_csv_format():
    r = MCResult(1, ("a", "b"), ("MR",), {"MR": np.array([[1.0, 2.0], [3.0, 2.0]])})
    lines = r.to_csv().splitlines()
    assert lines[0] == "target,MR"
    assert lines[1] == "a,2 ± 1"
    assert lines[2] == "b,2 ± 0"
    assert r.summary()["a"]["MR"] == (2.0, 1.0)


def test_design2_runner_reports_worst_case():
    r = run_monte_carlo(2, methods=("MR",), draws=2, seed=1, params=Design2Params(K=3, n=400))
    assert r.targets == ("worst_case_AE",) and r.errors["MR"].shape == (2, 1)


def test_runner_validation():
    with pytest.raises(InputError):
        run_monte_carlo(3, draws=2)
    with pytest.raises(InputError):
        run_monte_carlo(1, draws=1)
    with pytest.raises(InputError):
        run_monte_carlo(1, draws=2, misspecified="both")
