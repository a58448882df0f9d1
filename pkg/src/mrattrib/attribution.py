"""Shapley and along-the-path attribution of a distribution change to causal mechanisms."""

import csv
import io
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .core import (
    EXACT_ENUMERATION_CAP,
    CausalStructure,
    ChangeVector,
    Functional,
    TwoSampleDataset,
    ValidatedModel,
    enumerate_change_vectors,
    path_vectors,
)
from .estimator import CounterfactualEstimator, canonical_method, make_splits
from .exceptions import CapacityError, InputError
from .inference import multiplier_bootstrap, two_sided_p

MODES = ("shapley", "path", "both")
DEFAULT_PERMUTATIONS = 200


def _as_table(theta_table):
    out = {}
    for c, v in dict(theta_table).items():
        value = v.theta_hat if hasattr(v, "theta_hat") else float(v)
        out[ChangeVector.parse(c)] = value
    return out


def shapley_weights(K, vectors=None):
    """Matrix ``W`` with ``SHAP = W @ theta`` over ``vectors`` (default: all, lexicographic)."""
    vectors = enumerate_change_vectors(K, cap=None) if vectors is None else [ChangeVector.parse(c) for c in vectors]
    index = {c: i for i, c in enumerate(vectors)}
    missing = [str(c) for c in enumerate_change_vectors(K, cap=None) if c not in index]
    if missing:
        raise InputError(f"theta table is missing change vectors: {', '.join(missing)}")
    W = np.zeros((K + 1, len(vectors)))
    for c in vectors:
        size = sum(c.bits)
        for k in range(K + 1):
            if c[k] == 0:
                w = 1.0 / ((K + 1) * comb(K, size))
                W[k, index[c.with_bit(k, 1)]] += w
                W[k, index[c]] -= w
    return W, vectors


def shapley_values(theta_table):
    """Exact Shapley values from a complete ``{change vector: theta}`` map."""
    table = _as_table(theta_table)
    if not table:
        raise InputError("empty theta table")
    K = next(iter(table)).K
    W, vectors = shapley_weights(K, list(table))
    return W @ np.array([table[c] for c in vectors])


def path_weights(K):
    W = np.zeros((K + 1, K + 2))
    for k in range(K + 1):
        W[k, k + 1] = 1.0
        W[k, k] = -1.0
    return W


def path_values(theta_b):
    """Consecutive differences of ``theta^{b_0}, ..., theta^{b_{K+1}}``."""
    theta_b = np.asarray(theta_b, dtype=np.float64).ravel()
    if len(theta_b) < 2:
        raise InputError("need theta for b_0 .. b_{K+1} (at least two values)")
    return np.diff(theta_b)


def sample_permutations(n_players, M, seed=0):
    rng = np.random.default_rng(seed)
    return [tuple(int(v) for v in rng.permutation(n_players)) for _ in range(M)]


def permutation_weights(K, permutations):
    """Sparse linear map of permutation-averaged marginal contributions.

    Returns ``(W, vectors)`` where ``vectors`` are the change vectors visited
    by the permutations. With all ``(K+1)!`` orderings this reproduces the
    exact Shapley weights.
    """
    permutations = list(permutations)
    if not permutations:
        raise InputError("at least one permutation is required")
    index, coef = {}, {}
    for perm in permutations:
        bits = [0] * (K + 1)
        prev = tuple(bits)
        for k in perm:
            bits[k] = 1
            cur = tuple(bits)
            for v in (prev, cur):
                index.setdefault(v, len(index))
            coef[(k, cur)] = coef.get((k, cur), 0) + 1
            coef[(k, prev)] = coef.get((k, prev), 0) - 1
            prev = cur
    W = np.zeros((K + 1, len(index)))
    for (k, v), n in coef.items():
        W[k, index[v]] += n / len(permutations)
    vectors = [ChangeVector(v) for v in sorted(index, key=index.get)]
    return W, vectors


def permutation_shapley(value, K, M=DEFAULT_PERMUTATIONS, seed=0, exhaustive=False):
    """Shapley values from ``M`` sampled orderings (or all of them with ``exhaustive``)."""
    perms = itertools.permutations(range(K + 1)) if exhaustive else sample_permutations(K + 1, M, seed)
    W, vectors = permutation_weights(K, perms)
    table = _as_table(value) if isinstance(value, dict) else {c: float(value(c)) for c in vectors}
    return W @ np.array([table[c] for c in vectors])


@dataclass(frozen=True, eq=False)
class AttributionReport:
    """SHAP and PATH attributions with bootstrap standard errors.

    ``theta_table`` maps each estimated change vector to its ThetaEstimate.
    Entries not requested by ``mode`` are ``None``.
    """

    theta_table: dict
    names: tuple
    shap: np.ndarray = None
    path: np.ndarray = None
    shap_se: np.ndarray = None
    path_se: np.ndarray = None
    theta_se: dict = None
    total_change: float = 0.0
    approximate: bool = False
    meta: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def shap_p(self):
        return None if self.shap is None else two_sided_p(self.shap, self.shap_se)

    @property
    def path_p(self):
        return None if self.path is None else two_sided_p(self.path, self.path_se)

    @property
    def ses(self):
        return {"shap": self.shap_se, "path": self.path_se}

    @property
    def p_values(self):
        return {"shap": self.shap_p, "path": self.path_p}

    def _theta_rows(self):
        for c in sorted(self.theta_table, key=lambda v: v.bits):
            est = self.theta_table[c]
            yield str(c), est.theta_hat, est.se, (self.theta_se or {}).get(c)

    def to_dict(self):
        def vec(a):
            return None if a is None else [float(v) for v in a]

        return {
            "theta": [{"c": c, "estimate": float(v), "se": float(s),
                       "bootstrap_se": None if b is None else float(b)}
                      for c, v, s, b in self._theta_rows()],
            "shap": vec(self.shap),
            "path": vec(self.path),
            "se": {"shap": vec(self.shap_se), "path": vec(self.path_se)},
            "p": {"shap": vec(self.shap_p), "path": vec(self.path_p)},
            "meta": dict(self.meta, mechanisms=list(self.names), total_change=float(self.total_change),
                         approximate=self.approximate),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self, fmt="{:.6g}"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "name", "estimate", "se", "p"])

        def f(v):
            return "" if v is None else fmt.format(float(v))

        for c, v, s, _ in self._theta_rows():
            w.writerow(["theta", c, f(v), f(s), ""])
        for kind, vals, se, p in (("shap", self.shap, self.shap_se, self.shap_p),
                                  ("path", self.path, self.path_se, self.path_p)):
            if vals is None:
                continue
            for k, name in enumerate(self.names):
                w.writerow([kind, name, f(vals[k]), f(se[k]), f(p[k])])
        return buf.getvalue()


def required_vectors(K, mode="both", cap=EXACT_ENUMERATION_CAP, sampling=False, permutations=None):
    """Change vectors needed by ``mode``; also returns the Shapley map when relevant."""
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}, got {mode!r}")
    vectors, shap_map = [], None
    if mode in ("shapley", "both"):
        if cap is not None and K + 1 > cap:
            if not sampling:
                raise CapacityError(
                    f"exact Shapley needs 2^{K + 1} change vectors, above the cap of 2^{cap}; "
                    "enable permutation sampling"
                )
            W, sv = permutation_weights(K, permutations)
            shap_map = (W, sv, True)
        else:
            W, sv = shapley_weights(K)
            shap_map = (W, sv, False)
        vectors.extend(sv)
    if mode in ("path", "both"):
        vectors.extend(path_vectors(K))
    seen, unique = set(), []
    for c in vectors:
        if c not in seen:
            seen.add(c)
            unique.append(c)
    return unique, shap_map


def _dataset(data):
    if isinstance(data, ValidatedModel):
        return data.data, data.structure
    if isinstance(data, TwoSampleDataset):
        return data, None
    raise InputError("data must be a TwoSampleDataset or ValidatedModel")


def estimate_theta_table(data, vectors, functional="mean", methods=("MR",), structure=None, splits=None,
                         threads=1, cache=None, **estimator_params):
    """Fit every change vector once and report each requested method.

    Returns ``{method: {ChangeVector: ThetaEstimate}}``. All vectors share the
    same splits and a nuisance cache, so a regression chain or prefix weight
    model common to several vectors is fitted only once.
    """
    data, bound = _dataset(data)
    structure = structure if structure is not None else bound
    methods = [canonical_method(m) for m in methods]
    if splits is None:
        splits = make_splits(data.t, estimator_params.get("split", "crossfit"),
                             estimator_params.get("n_folds", 2), estimator_params.get("train_fraction", 0.5),
                             estimator_params.get("random_state", 0))
    cache = {} if cache is None else cache
    vectors = [ChangeVector.parse(c) for c in vectors]

    def one(c):
        est = CounterfactualEstimator(c, functional=functional, structure=structure, **estimator_params)
        est.fit(data, splits=splits, cache=cache)
        return est

    if threads > 1 and len(vectors) > 1:
        # Two workers may fit the same cached nuisance concurrently; both fits
        # are identical, so whichever lands in the cache is equivalent.
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fitted = list(pool.map(one, vectors))
    else:
        fitted = [one(c) for c in vectors]
    return {m: {c: f.estimate(m) for c, f in zip(vectors, fitted)} for m in methods}, fitted


def attribute(data, structure=None, h="mean", mode="both", method="MR", B=1000,
              multiplier="bayesian_exponential", seed=0, sampling=False, permutations=DEFAULT_PERMUTATIONS,
              cap=EXACT_ENUMERATION_CAP, threads=1, **estimator_params):
    """Estimate the θ table implied by ``mode`` and attribute the total change.

    Extra keyword arguments are passed to :class:`CounterfactualEstimator`
    (learners, split, clipping, ...).
    """
    ds, bound = _dataset(data)
    structure = structure if structure is not None else bound
    K = ds.K
    perms = sample_permutations(K + 1, permutations, seed) if sampling and (cap is not None and K + 1 > cap) else None
    vectors, shap_map = required_vectors(K, mode, cap, sampling, perms)
    estimator_params.setdefault("random_state", seed)
    tables, fitted = estimate_theta_table(ds, vectors, h, (method,), structure, threads=threads,
                                          **estimator_params)
    table = tables[canonical_method(method)]
    ests = [table[c] for c in vectors]
    boot = multiplier_bootstrap(ests, B, multiplier, seed) if B else None
    pos = {c: i for i, c in enumerate(vectors)}
    theta = np.array([e.theta_hat for e in ests])

    def linear(W, vs):
        M = np.zeros((W.shape[0], len(vectors)))
        for j, c in enumerate(vs):
            M[:, pos[c]] += W[:, j]
        est = M @ theta
        se = boot.transform(M).se() if boot is not None else np.full(W.shape[0], np.nan)
        return est, se

    shap = shap_se = path = path_se = None
    approximate = False
    if shap_map is not None:
        W, sv, approximate = shap_map
        shap, shap_se = linear(W, sv)
    if mode in ("path", "both"):
        path, path_se = linear(path_weights(K), path_vectors(K))
    ones, zeros = ChangeVector((1,) * (K + 1)), ChangeVector((0,) * (K + 1))
    total = float(table[ones].theta_hat - table[zeros].theta_hat)
    theta_se = None if boot is None else {c: float(s) for c, s in zip(vectors, boot.se())}
    diag = fitted[0].diagnostics_ if fitted else {}
    diagnostics = {str(c): dict(f.diagnostics_, order=list(f.plan_.order)) for c, f in zip(vectors, fitted)}
    meta = {
        "seed": int(seed),
        "mode": mode,
        "method": canonical_method(method),
        "functional": str(Functional.parse(h)),
        "B": int(B),
        "multiplier": multiplier,
        "learners": {
            "regressor": _describe(estimator_params.get("regressor")),
            "classifier": _describe(estimator_params.get("classifier")),
        },
        "split": diag.get("split", estimator_params.get("split", "crossfit")),
    }
    if approximate:
        meta["permutations"] = int(permutations)
    return AttributionReport(table, tuple(ds.names) + (ds.outcome_name,), shap, path, shap_se, path_se,
                             theta_se, total, approximate, meta, diagnostics)


def _describe(learner):
    if learner is None:
        return "default"
    if hasattr(learner, "to_dict"):
        return learner.to_dict()
    return repr(learner)


class ChangeAttribution:
    """Estimator-style wrapper around :func:`attribute`.

    ``fit(data)`` stores the report in ``report_`` along with ``shap_`` and
    ``path_``.
    """

    def __init__(self, functional="mean", mode="both", method="MR", B=1000, multiplier="bayesian_exponential",
                 seed=0, sampling=False, permutations=DEFAULT_PERMUTATIONS, structure=None, threads=1,
                 **estimator_params):
        self.functional = functional
        self.mode = mode
        self.method = method
        self.B = B
        self.multiplier = multiplier
        self.seed = seed
        self.sampling = sampling
        self.permutations = permutations
        self.structure = structure
        self.threads = threads
        self.estimator_params = estimator_params

    def get_params(self, deep=False):
        params = {k: getattr(self, k) for k in ("functional", "mode", "method", "B", "multiplier", "seed",
                                                    "sampling", "permutations", "structure", "threads")}
        params.update(self.estimator_params)
        return params

    def fit(self, data, y=None, t=None):
        if not isinstance(data, (TwoSampleDataset, ValidatedModel)):
            if y is None or t is None:
                raise InputError("pass a TwoSampleDataset or the arrays X, y, t")
            data = TwoSampleDataset(t, data, y)
        structure = self.structure
        if structure is not None and not isinstance(structure, CausalStructure):
            raise InputError("structure must be a CausalStructure")
        self.report_ = attribute(data, structure, self.functional, self.mode, self.method, self.B,
                                 self.multiplier, self.seed, self.sampling, self.permutations,
                                 threads=self.threads, **self.estimator_params)
        self.shap_ = self.report_.shap
        self.path_ = self.report_.path
        return self
