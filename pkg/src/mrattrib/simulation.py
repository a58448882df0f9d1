"""Monte Carlo designs with known ground truth and a seeded replication runner."""

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .attribution import estimate_theta_table, path_weights, shapley_weights
from .core import ChangeVector, Functional, TwoSampleDataset, enumerate_change_vectors, path_vectors
from .estimator import METHODS, canonical_method
from .exceptions import InputError, MRAttribError
from .learners import ClassifierSpec, RegressorSpec

DESIGN1_TARGETS = ("001", "010", "011", "100", "101", "110")


# ------------------------------------------------------------------- Design 1


@dataclass(frozen=True)
class Design1Params:
    """Two Gaussian samples with a quadratic outcome; ``mu_t = (sigma2, beta, delta)``."""

    n0: int = 1000
    n1: int = 1000
    mu0: tuple = (1.0, 0.5, 0.25)
    mu1: tuple = (1.21, 0.2, -0.25)
    seed: int = 0

    def __post_init__(self):
        for mu in (self.mu0, self.mu1):
            if len(mu) != 3 or mu[0] <= 0:
                raise InputError("mu must be (sigma2 > 0, beta, delta)")
        if self.n0 < 1 or self.n1 < 1:
            raise InputError("n0 and n1 must be >= 1")

    def mu(self, t):
        return self.mu1 if t == 1 else self.mu0


def _design1_draw(rng, n, mu_x1, mu_x2, mu_y):
    x1 = 1.0 + np.sqrt(mu_x1[0]) * rng.standard_normal(n)
    x2 = mu_x2[1] * x1 + rng.standard_normal(n)
    y = x1 + x2 + 0.25 * x1**2 + mu_y[2] * x2**2 + rng.standard_normal(n)
    return np.column_stack([x1, x2]), y


def simulate_design1(p=None, rng=None):
    """Draw both samples; ``rng`` overrides the generator seeded from ``p.seed``."""
    p = Design1Params() if p is None else p
    rng = np.random.default_rng(p.seed) if rng is None else rng
    x0, y0 = _design1_draw(rng, p.n0, p.mu0, p.mu0, p.mu0)
    x1, y1 = _design1_draw(rng, p.n1, p.mu1, p.mu1, p.mu1)
    t = np.concatenate([np.zeros(p.n0, dtype=np.int64), np.ones(p.n1, dtype=np.int64)])
    return TwoSampleDataset(t, np.vstack([x0, x1]), np.concatenate([y0, y1]))


def oracle_theta_design1(c, p=None, method="analytic", h="mean", draws=1_000_000, seed=12345):
    """Counterfactual value of ``E[h(Y)]`` with mechanism k drawn from sample ``c_k``.

    The analytic route uses Gaussian moments and only supports the mean; other
    functionals fall back to simulation.
    """
    p = Design1Params() if p is None else p
    c = ChangeVector.parse(c)
    if c.K != 2:
        raise InputError("Design 1 has K = 2 explanatory variables")
    h = Functional.parse(h)
    sigma2 = p.mu(c[0])[0]
    beta = p.mu(c[1])[1]
    delta = p.mu(c[2])[2]
    if method == "analytic" and h.kind == "mean":
        return 1.0 + beta + 0.25 * (1.0 + sigma2) + delta * (beta**2 * (1.0 + sigma2) + 1.0)
    if method not in ("analytic", "simulation"):
        raise InputError(f"method must be 'analytic' or 'simulation', got {method!r}")
    rng = np.random.default_rng(seed)
    _, y = _design1_draw(rng, draws, p.mu(c[0]), p.mu(c[1]), p.mu(c[2]))
    return float(np.mean(h(y)))


def oracle_table_design1(p=None):
    return {c: oracle_theta_design1(c, p) for c in enumerate_change_vectors(2)}


# ------------------------------------------------------------------- Design 2


@dataclass(frozen=True)
class Design2Params:
    """Gaussian line DAG ``X_1 -> ... -> X_K -> Y`` with a few mean-shifted mechanisms."""

    K: int = 10
    n: int = 2000
    shift_fraction: float = 0.1
    shift_size: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.K < 2:
            raise InputError("Design 2 needs K >= 2")
        if not 0.0 <= self.shift_fraction <= 1.0:
            raise InputError("shift_fraction must lie in [0, 1]")
        if self.n < 2:
            raise InputError("n must be >= 2")

    @property
    def n_shifted(self):
        if self.shift_fraction == 0.0:
            return 0
        return max(1, int(round(self.shift_fraction * (self.K + 1))))


def draw_shifted_set(p, rng):
    """0-based mechanism indices (``K`` is the outcome) whose mean moves in sample 1."""
    return tuple(sorted(int(v) for v in rng.choice(p.K + 1, size=p.n_shifted, replace=False)))


def _line_draw(rng, n, K, shift):
    nodes = np.empty((n, K + 1))
    nodes[:, 0] = shift[0] + rng.standard_normal(n)
    sd = np.sqrt(0.75)
    for k in range(1, K + 1):
        nodes[:, k] = 0.5 * nodes[:, k - 1] + shift[k] + sd * rng.standard_normal(n)
    return nodes[:, :K], nodes[:, K]


def simulate_design2(p=None, rng=None):
    """Returns ``(dataset, shifted)`` with ``shifted`` the 0-based moved mechanisms."""
    p = Design2Params() if p is None else p
    rng = np.random.default_rng(p.seed) if rng is None else rng
    shifted = draw_shifted_set(p, rng)
    shift = np.zeros(p.K + 1)
    shift[list(shifted)] = p.shift_size
    x0, y0 = _line_draw(rng, p.n, p.K, np.zeros(p.K + 1))
    x1, y1 = _line_draw(rng, p.n, p.K, shift)
    t = np.concatenate([np.zeros(p.n, dtype=np.int64), np.ones(p.n, dtype=np.int64)])
    return TwoSampleDataset(t, np.vstack([x0, x1]), np.concatenate([y0, y1])), shifted


def oracle_path_design2(p, shifted):
    """A shift ``s`` in mechanism ``k`` moves the mean of Y by ``s * 0.5**(K - k)`` (0-based ``k``)."""
    path = np.zeros(p.K + 1)
    for k in shifted:
        path[k] = p.shift_size * 0.5 ** (p.K - k)
    return path


# ------------------------------------------------------------------ MC runner


def design1_learners(misspecified=None):
    """Learner specs for Design 1; ``misspecified`` is None, "regression" or "weights"."""
    if misspecified not in (None, "none", "regression", "weights"):
        raise InputError(f"misspecified must be None, 'regression' or 'weights', got {misspecified!r}")
    reg = RegressorSpec("ols_poly", degree=1 if misspecified == "regression" else 2)
    clf = ClassifierSpec("logistic_l2", degree=1 if misspecified == "weights" else 2)
    return reg, clf


def design2_learners():
    return RegressorSpec("lasso", degree=1, penalty="cv"), ClassifierSpec("logistic_l1", degree=1, penalty="cv")


@dataclass(frozen=True, eq=False)
class MCResult:
    """Absolute errors by draw for each method and target.

    ``errors[method]`` has shape ``(draws, len(targets))``.
    """

    design: int
    targets: tuple
    methods: tuple
    errors: dict
    failures: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def draws(self):
        return next(iter(self.errors.values())).shape[0]

    def mae(self, method):
        return self.errors[canonical_method(method)].mean(axis=0)

    def se(self, method):
        e = self.errors[canonical_method(method)]
        return e.std(axis=0, ddof=1) / np.sqrt(e.shape[0])

    def summary(self):
        """``{target: {method: (mae, se)}}``."""
        return {t: {m: (float(self.mae(m)[j]), float(self.se(m)[j])) for m in self.methods}
                for j, t in enumerate(self.targets)}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["target", *self.methods])
        for j, t in enumerate(self.targets):
            w.writerow([t, *(f"{self.mae(m)[j]:.6g} ± {self.se(m)[j]:.6g}" for m in self.methods)])
        return buf.getvalue()


def _draw_streams(seed, draws):
    return np.random.SeedSequence(int(seed)).spawn(int(draws))


def _design1_once(child, params, methods, reg, clf, estimator_params):
    rng = np.random.Generator(np.random.PCG64(child))
    data = simulate_design1(params, rng)
    split_seed = int(rng.integers(2**31))
    vectors = enumerate_change_vectors(2)
    tables, _ = estimate_theta_table(data, vectors, "mean", methods, regressor=reg, classifier=clf,
                                     random_state=split_seed, **estimator_params)
    W, sv = shapley_weights(2, vectors)
    truth = oracle_table_design1(params)
    true_theta = np.array([truth[ChangeVector.parse(c)] for c in DESIGN1_TARGETS])
    true_shap = W @ np.array([truth[c] for c in sv])
    out = {}
    for m in methods:
        theta = np.array([tables[m][ChangeVector.parse(c)].theta_hat for c in DESIGN1_TARGETS])
        shap = W @ np.array([tables[m][c].theta_hat for c in sv])
        out[m] = np.concatenate([np.abs(theta - true_theta), np.abs(shap - true_shap)])
    return out


def _design2_once(child, params, methods, reg, clf, estimator_params):
    rng = np.random.Generator(np.random.PCG64(child))
    data, shifted = simulate_design2(params, rng)
    split_seed = int(rng.integers(2**31))
    vectors = path_vectors(params.K)
    tables, _ = estimate_theta_table(data, vectors, "mean", methods, regressor=reg, classifier=clf,
                                     random_state=split_seed, **estimator_params)
    truth = oracle_path_design2(params, shifted)
    W = path_weights(params.K)
    out = {}
    for m in methods:
        path = W @ np.array([tables[m][c].theta_hat for c in vectors])
        out[m] = np.array([np.max(np.abs(path - truth))])
    return out


def run_monte_carlo(design=1, methods=METHODS, draws=100, seed=0, params=None, regressor=None,
                    classifier=None, misspecified=None, threads=1, **estimator_params):
    """Replicate a design ``draws`` times and collect absolute errors against the oracle.

    Draw ``d`` generates its data and fold assignment from the ``d``-th child
    of ``SeedSequence(seed)``, so results do not depend on ``threads``.
    Failed draws are counted and excluded.
    """
    if draws < 2:
        raise InputError("draws must be >= 2")
    methods = tuple(canonical_method(m) for m in methods)
    if design == 1:
        params = Design1Params() if params is None else params
        dreg, dclf = design1_learners(misspecified)
        once = _design1_once
        targets = DESIGN1_TARGETS + ("SHAP1", "SHAP2", "SHAP3")
    elif design == 2:
        params = Design2Params() if params is None else params
        dreg, dclf = design2_learners()
        once = _design2_once
        targets = ("worst_case_AE",)
    else:
        raise InputError(f"design must be 1 or 2, got {design!r}")
    reg = dreg if regressor is None else regressor
    clf = dclf if classifier is None else classifier

    def task(child):
        try:
            return once(child, params, methods, reg, clf, estimator_params)
        except MRAttribError:
            return None

    children = _draw_streams(seed, draws)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(task, children))
    else:
        results = [task(c) for c in children]
    ok = [r for r in results if r is not None]
    if not ok:
        raise InputError("every Monte Carlo draw failed")
    errors = {m: np.vstack([r[m] for r in ok]) for m in methods}
    meta = {"design": design, "draws": int(draws), "seed": int(seed), "params": asdict(params),
            "misspecified": misspecified}
    return MCResult(design, targets, methods, errors, len(results) - len(ok), meta)
