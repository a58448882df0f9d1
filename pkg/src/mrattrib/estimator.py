"""Counterfactual functionals under shifted mechanisms: planning and estimation.

The estimated quantity is ``theta^c = E[h(Y)]`` under the law in which
mechanism ``k`` follows sample ``c_k``. Three estimators share one set of
cross-fitted nuisances:

* ``regression``: average of the outermost nested regression,
* ``reweighting``: weighted average of ``h(Y)`` in the sample fixing ``Y | X``,
* ``MR``: the regression estimate plus weighted residual corrections, which
  stays consistent when, per stage, either the regression or the weight is
  correct.

Runs of consecutive mechanisms that follow the same sample are merged into a
single block before estimation (nested regressions on the same law collapse
by iterated expectations), so each surviving stage fits one regression and
one weight.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_array

from .core import (
    CausalStructure,
    ChangeVector,
    Functional,
    TwoSampleDataset,
    ValidatedModel,
)
from .exceptions import EstimationError, InputError, MRAttribError
from .learners import LinearRegressor, LogisticClassifier
from .weights import PROB_CLIP, WEIGHT_BOUNDS, AutomaticDensityRatio, ClassifierDensityRatio

METHODS = ("MR", "regression", "reweighting")
_METHOD_ALIASES = {
    "mr": "MR",
    "regression": "regression",
    "regression_only": "regression",
    "reweighting": "reweighting",
    "reweighting_only": "reweighting",
    "re-weighting": "reweighting",
}


def canonical_method(method):
    try:
        return _METHOD_ALIASES[str(method).lower()]
    except KeyError:
        raise InputError(f"method must be one of {METHODS}, got {method!r}") from None


# --------------------------------------------------------------------------- plans


@dataclass(frozen=True)
class Stage:
    """One surviving (regression, weight) pair of an estimation plan.

    ``k`` is the 1-based position, in plan order, of the last variable
    conditioned on. ``regression_sample`` is the sample on which the stage's
    regression is fit and its residual averaged. ``weight_blocks`` lists the
    blocks whose conditional law is transported from ``weight_pair[0]`` to
    ``weight_pair[1]``.
    """

    k: int
    regression_sample: int
    inputs: tuple
    weight_blocks: tuple
    weight_pair: tuple


@dataclass(frozen=True)
class EstimationPlan:
    change_vector: ChangeVector
    order: tuple
    blocks: tuple
    stages: tuple
    skipped: tuple
    collapsed: bool

    @property
    def outer_sample(self):
        return self.blocks[0][0]

    @property
    def outcome_sample(self):
        return self.blocks[-1][0]

    def prefix(self, j):
        """0-based column indices of blocks ``1..j``."""
        return tuple(i for _, idx in self.blocks[:j] for i in idx)

    @property
    def n_stages(self):
        return len(self.stages)


def _runs(bits_of, candidates_order, parents, start):
    emitted, runs = set(), []
    remaining = list(candidates_order)
    cur = start
    while remaining:
        run = []
        progress = True
        while progress:
            progress = False
            for v in list(remaining):
                if bits_of[v] == cur and parents[v] <= emitted:
                    run.append(v)
                    emitted.add(v)
                    remaining.remove(v)
                    progress = True
        if run:
            runs.append((cur, tuple(run)))
        cur = 1 - cur
    return runs


def plan_estimation(c, structure=None, simplify=True):
    """Build the minimal stage list for change vector ``c``.

    With ``simplify`` (default), explanatory variables are arranged in a
    topological order of the declared parent sets that groups equal bits into
    as few runs as possible, and each run becomes one block. Without it, every
    variable is its own block, in the given order.
    """
    c = ChangeVector.parse(c)
    K = c.K
    if structure is not None and structure.K != K:
        raise InputError(f"change vector has {K + 1} bits but the structure has K = {structure.K}")
    bits = c.bits
    if not simplify:
        blocks = tuple((bits[k], (k,)) for k in range(K)) + ((bits[K], ()),)
    else:
        if structure is None:
            parents = [frozenset(range(k)) for k in range(K)]
        else:
            parents = [structure.parent_indices(k) for k in range(K)]
        best = None
        for start in (bits[0], 1 - bits[0]):
            runs = _runs(bits, range(K), parents, start)
            if runs[-1][0] == bits[K]:
                blocks = tuple(runs)
            else:
                blocks = tuple(runs) + ((bits[K], ()),)
            key = (len(blocks), tuple(i for _, r in blocks for i in r))
            if best is None or key < best[0]:
                best = (key, blocks)
        blocks = best[1]
    order = tuple(i for _, idx in blocks for i in idx)
    stages = []
    for b in range(1, len(blocks)):
        s_next = blocks[b][0]
        inputs = tuple(i for _, idx in blocks[:b] for i in idx)
        wb = tuple(j for j in range(1, b + 1) if blocks[j - 1][0] != s_next)
        stages.append(Stage(len(inputs), s_next, inputs, wb, (1 - s_next, s_next)))
    kept = {s.k for s in stages}
    skipped = tuple(k for k in range(1, K + 1) if k not in kept)
    return EstimationPlan(c, order, blocks, tuple(stages), skipped, len(stages) == 0)


# ------------------------------------------------------------------- estimates


def _v_hat(psi0, psi1):
    n0, n1 = len(psi0), len(psi1)
    n = n0 + n1
    v0 = np.var(psi0, ddof=1) if n0 > 1 else 0.0
    v1 = np.var(psi1, ddof=1) if n1 > 1 else 0.0
    return float(n / n0 * v0 + n / n1 * v1)


@dataclass(frozen=True, eq=False)
class ThetaEstimate:
    """Point estimate with its per-observation contributions by sample.

    ``theta_hat == mean(psi0) + mean(psi1)``. ``rows0``/``rows1`` are the
    dataset row indices the contributions belong to.
    """

    c: ChangeVector
    theta_hat: float
    psi0: np.ndarray
    psi1: np.ndarray
    v_hat: float
    n0: int
    n1: int
    method: str
    rows0: np.ndarray = field(default=None, repr=False)
    rows1: np.ndarray = field(default=None, repr=False)

    @classmethod
    def from_psi(cls, c, psi0, psi1, method, rows0=None, rows1=None):
        psi0 = np.asarray(psi0, dtype=np.float64)
        psi1 = np.asarray(psi1, dtype=np.float64)
        if len(psi0) == 0 or len(psi1) == 0:
            raise InputError("evaluation data must contain both samples")
        theta = float(np.mean(psi0) + np.mean(psi1))
        return cls(ChangeVector.parse(c), theta, psi0, psi1, _v_hat(psi0, psi1), len(psi0), len(psi1),
                   method, rows0, rows1)

    @property
    def n(self):
        return self.n0 + self.n1

    @property
    def se(self):
        return float(np.sqrt(self.v_hat / self.n))

    def confidence_interval(self, level=0.95):
        from .inference import estimate_variance_ci

        return estimate_variance_ci(self, level)


# --------------------------------------------------------------------- nuisances


class _ConstantRegressor:
    def __init__(self, value):
        self.value = float(value)

    def predict(self, X):
        return np.full(len(X), self.value)


def _columns(X, idx):
    return X[:, list(idx)] if idx else np.zeros((len(X), 0))


def fit_nested_regressions(plan, h, train, regressor=None, rows=None, cache=None, cache_key=None):
    """Fit ``gamma_m, ..., gamma_1`` on the training rows, innermost first.

    Returns the fitted models ordered ``[gamma_1, ..., gamma_m]``. ``train``
    is a validated model or dataset; ``regressor`` a scikit-learn regressor or
    a :class:`RegressorSpec`.
    """
    if plan.collapsed:
        return []
    X, y, t = train.X if hasattr(train, "X") else train.x, train.y, train.t
    rows = np.arange(len(t)) if rows is None else np.asarray(rows)
    h = Functional.parse(h)
    base = _resolve_regressor(regressor)
    m = plan.n_stages
    models = [None] * m
    chain = ()
    for b in range(m, 0, -1):
        stage = plan.stages[b - 1]
        sel = rows[t[rows] == stage.regression_sample]
        if len(sel) < 2:
            raise EstimationError(f"fewer than 2 training rows in sample {stage.regression_sample}", stage.k)
        chain = chain + ((stage.regression_sample, stage.inputs),)
        key = None if cache is None else (cache_key, "g", str(h), chain)
        if key is not None and key in cache:
            models[b - 1] = cache[key]
            continue
        if b == m:
            target = h(y[sel])
        else:
            nxt = plan.stages[b]
            target = models[b].predict(_columns(X[sel], nxt.inputs))
        features = _columns(X[sel], stage.inputs)
        if np.ptp(target) == 0.0:
            model = _ConstantRegressor(target[0])
        else:
            try:
                model = clone(base).fit(features, target)
            except MRAttribError as exc:
                raise EstimationError(str(exc), stage.k) from exc
        models[b - 1] = model
        if key is not None:
            cache[key] = model
    return models


def _resolve_regressor(regressor):
    if regressor is None:
        return LinearRegressor(degree=2)
    if hasattr(regressor, "build"):
        return regressor.build()
    return regressor


def _resolve_classifier(classifier):
    if classifier is None:
        return LogisticClassifier(degree=2)
    if hasattr(classifier, "build"):
        return classifier.build()
    return classifier


def _needed_prefixes(plan):
    need = set()
    for s in plan.stages:
        for j in s.weight_blocks:
            need.add(j)
            if j > 1:
                need.add(j - 1)
    return sorted(need)


class _StageValues:
    """Nuisance evaluations on a set of evaluation rows."""

    def __init__(self, rows, t, hy, gammas, alphas):
        self.rows = rows
        self.t = t
        self.hy = hy
        self.gammas = gammas  # (m + 1, n_eval); last row is h(Y)
        self.alphas = alphas  # (m, n_eval)


def _evaluate_fold(plan, X, hy, t, rows, reg_models, mu_models, weight_bounds):
    lo, hi = weight_bounds
    m = plan.n_stages
    Xe = X[rows]
    gam = np.empty((m + 1, len(rows)))
    for b in range(1, m + 1):
        gam[b - 1] = reg_models[b - 1].predict(_columns(Xe, plan.stages[b - 1].inputs))
    gam[m] = hy[rows]
    mu = {0: np.ones(len(rows))}
    for j, model in mu_models.items():
        mu[j] = np.clip(model.predict(_columns(Xe, plan.prefix(j))), lo, hi)
    alpha = np.ones((m, len(rows)))
    for b, stage in enumerate(plan.stages):
        for j in stage.weight_blocks:
            if stage.weight_pair[0] == 1:
                r = mu[j] / np.maximum(mu[j - 1], lo)
            else:
                r = mu[j - 1] / np.maximum(mu[j], lo)
            alpha[b] *= np.clip(r, lo, hi)
        alpha[b] = np.clip(alpha[b], lo, hi)
    return _StageValues(rows, t[rows], hy[rows], gam, alpha)


def _fit_weights(plan, X, t, rows, make_ratio, cache=None, cache_key=None):
    models, clipped = {}, {}
    for j in _needed_prefixes(plan):
        cols = plan.prefix(j)
        key = None if cache is None else (cache_key, "w", cols)
        if key is not None and key in cache:
            models[j] = cache[key]
        else:
            try:
                models[j] = make_ratio().fit(_columns(X[rows], cols), t[rows])
            except MRAttribError as exc:
                raise EstimationError(f"weight model for prefix {cols}: {exc}") from exc
            if key is not None:
                cache[key] = models[j]
        if hasattr(models[j], "clipped_fraction"):
            clipped[j] = models[j].clipped_fraction(_columns(X[rows], cols))
    return models, clipped


def _psi(plan, values, method, sample):
    """Per-row contributions for rows of ``sample`` under ``method``."""
    sel = values.t == sample
    m = plan.n_stages
    if plan.collapsed:
        return values.hy[sel] if sample == plan.outer_sample else np.zeros(int(sel.sum()))
    out = np.zeros(int(sel.sum()))
    if method == "regression":
        if plan.outer_sample == sample:
            out += values.gammas[0][sel]
        return out
    if method == "reweighting":
        if plan.outcome_sample == sample:
            out += values.alphas[m - 1][sel] * values.hy[sel]
        return out
    if plan.outer_sample == sample:
        out += values.gammas[0][sel]
    for b, stage in enumerate(plan.stages):
        if stage.regression_sample == sample:
            out += values.alphas[b][sel] * (values.gammas[b + 1][sel] - values.gammas[b][sel])
    return out


def _estimate_from_values(plan, values, method):
    method = canonical_method(method)
    psi0 = _psi(plan, values, method, 0)
    psi1 = _psi(plan, values, method, 1)
    return ThetaEstimate.from_psi(plan.change_vector, psi0, psi1, method,
                                  values.rows[values.t == 0], values.rows[values.t == 1])


def _concat_values(parts):
    rows = np.concatenate([p.rows for p in parts])
    order = np.argsort(rows, kind="stable")
    return _StageValues(
        rows[order],
        np.concatenate([p.t for p in parts])[order],
        np.concatenate([p.hy for p in parts])[order],
        np.concatenate([p.gammas for p in parts], axis=1)[:, order],
        np.concatenate([p.alphas for p in parts], axis=1)[:, order],
    )


def crossfit_folds(t, n_folds=2, random_state=0):
    """Stratified fold assignment: ``[(train_rows, eval_rows), ...]``."""
    t = np.asarray(t)
    if n_folds < 2:
        raise InputError("n_folds must be >= 2")
    rng = np.random.default_rng(random_state)
    fold = np.empty(len(t), dtype=np.int64)
    for s in (0, 1):
        idx = np.flatnonzero(t == s)
        if len(idx) < n_folds:
            raise InputError(f"sample {s} has fewer rows than folds")
        perm = rng.permutation(idx)
        fold[perm] = np.arange(len(idx)) % n_folds
    return [(np.flatnonzero(fold != f), np.flatnonzero(fold == f)) for f in range(n_folds)]


def single_split(t, train_fraction=0.5, random_state=0):
    """One stratified train/eval split: ``[(train_rows, eval_rows)]``."""
    if not 0.0 < train_fraction < 1.0:
        raise InputError("train_fraction must lie in (0, 1)")
    t = np.asarray(t)
    rng = np.random.default_rng(random_state)
    train = np.zeros(len(t), dtype=bool)
    for s in (0, 1):
        idx = np.flatnonzero(t == s)
        k = int(round(train_fraction * len(idx)))
        if k < 1 or k >= len(idx):
            raise InputError(f"sample {s} too small for a train/eval split")
        train[rng.permutation(idx)[:k]] = True
    return [(np.flatnonzero(train), np.flatnonzero(~train))]


def make_splits(t, split="crossfit", n_folds=2, train_fraction=0.5, random_state=0):
    if split == "crossfit":
        return crossfit_folds(t, n_folds, random_state)
    if split == "single":
        return single_split(t, train_fraction, random_state)
    if split == "none":
        rows = np.arange(len(t))
        return [(rows, rows)]
    raise InputError(f"split must be 'crossfit', 'single' or 'none', got {split!r}")


def _ratio_factory(weight_route, classifier, prob_clip, weight_bounds, automatic_degree, automatic_penalty):
    if weight_route == "classification":
        clf = _resolve_classifier(classifier)

        def make():
            return ClassifierDensityRatio(clf, numerator=1, prob_clip=prob_clip, weight_bounds=weight_bounds)

    elif weight_route == "automatic":

        def make():
            return AutomaticDensityRatio(degree=automatic_degree, penalty=automatic_penalty, numerator=1,
                                         weight_bounds=weight_bounds)

    else:
        raise InputError(f"weight_route must be 'classification' or 'automatic', got {weight_route!r}")
    return make


def compute_stage_values(plan, h, X, y, t, splits, regressor=None, classifier=None,
                         weight_route="classification", prob_clip=PROB_CLIP, weight_bounds=WEIGHT_BOUNDS,
                         automatic_degree=2, automatic_penalty=0.0, cache=None, diagnostics=None):
    """Fit nuisances on each split's training rows and evaluate them on its eval rows."""
    h = Functional.parse(h)
    hy = h(y)
    make_ratio = _ratio_factory(weight_route, classifier, prob_clip, weight_bounds, automatic_degree,
                                automatic_penalty)
    data = TwoSampleDataset(t, X, y) if not plan.collapsed else None
    parts = []
    for f, (train_rows, eval_rows) in enumerate(splits):
        if plan.collapsed:
            parts.append(_StageValues(eval_rows, t[eval_rows], hy[eval_rows], np.zeros((1, len(eval_rows))),
                                      np.zeros((0, len(eval_rows)))))
            continue
        regs = fit_nested_regressions(plan, h, data, regressor, rows=train_rows, cache=cache, cache_key=f)
        mus, clipped = _fit_weights(plan, X, t, train_rows, make_ratio, cache=cache, cache_key=f)
        if diagnostics is not None:
            diagnostics.setdefault("folds", []).append(
                {"train": int(len(train_rows)), "eval": int(len(eval_rows)),
                 "clipped_fraction": {",".join(map(str, plan.prefix(j))): v for j, v in clipped.items()}}
            )
        parts.append(_evaluate_fold(plan, X, hy, t, eval_rows, regs, mus, weight_bounds))
    return _concat_values(parts) if len(parts) > 1 else parts[0]


def estimate_theta(plan, h, split_train, split_eval, regressor=None, classifier=None, method="MR", **kwargs):
    """Estimate ``theta^c`` with nuisances from ``split_train`` evaluated on ``split_eval``.

    Both splits are datasets (or validated models) over the same columns;
    they are stacked internally so that the evaluation rows keep their order.
    """
    tr = split_train.data if isinstance(split_train, ValidatedModel) else split_train
    ev = split_eval.data if isinstance(split_eval, ValidatedModel) else split_eval
    if ev.n0 < 1 or ev.n1 < 1:
        raise InputError("evaluation split must contain both samples")
    X = np.vstack([tr.x, ev.x])
    y = np.concatenate([tr.y, ev.y])
    t = np.concatenate([tr.t, ev.t])
    n_tr = len(tr)
    splits = [(np.arange(n_tr), np.arange(n_tr, n_tr + len(ev)))]
    values = compute_stage_values(plan, h, X, y, t, splits, regressor, classifier, **kwargs)
    values.rows = values.rows - n_tr
    return _estimate_from_values(plan, values, method)


# ------------------------------------------------------------------ estimator API


def _unpack(X, y=None, t=None):
    if isinstance(X, ValidatedModel):
        X = X.data
    if isinstance(X, TwoSampleDataset):
        return X.x, X.y, X.t
    if y is None or t is None:
        raise InputError("pass a TwoSampleDataset or the arrays X, y, t")
    X = check_array(X, dtype=np.float64)
    ds = TwoSampleDataset(np.asarray(t), X, y)
    return ds.x, ds.y, ds.t


class CounterfactualEstimator(BaseEstimator):
    """Estimate ``theta^c`` for one change vector from two-sample data.

    Parameters
    ----------
    change : str or sequence of 0/1
        Change vector ``(c_1..c_K, c_{K+1})``.
    functional : str or Functional
        ``"mean"``, ``"second_moment"`` or ``"cdf_at:<u>"``.
    regressor, classifier : estimator or spec, optional
        Any scikit-learn style regressor / probabilistic classifier, or a
        ``RegressorSpec`` / ``ClassifierSpec``. Defaults are degree-2
        polynomial OLS and logistic regression.
    method : {"MR", "regression", "reweighting"}
        Estimator reported by ``theta_``; all three are available afterwards
        through :meth:`estimate`.
    weight_route : {"classification", "automatic"}
    split : {"crossfit", "single", "none"}
        Cross-fitting over ``n_folds`` folds, one stratified split with
        ``train_fraction`` of each sample used for training, or in-sample.
    prob_clip, weight_bounds : float, (float, float)
        Overlap guards applied to posteriors and to every weight factor.
    simplify : bool
        Merge runs of mechanisms that follow the same sample.
    structure : CausalStructure, optional
        Parent sets used by the simplifier.
    random_state : int
        Seed for the fold assignment.
    """

    def __init__(self, change, functional="mean", regressor=None, classifier=None, method="MR",
                 weight_route="classification", split="crossfit", n_folds=2, train_fraction=0.5,
                 prob_clip=PROB_CLIP, weight_bounds=WEIGHT_BOUNDS, automatic_degree=2,
                 automatic_penalty=0.0, simplify=True, structure=None, random_state=0):
        self.change = change
        self.functional = functional
        self.regressor = regressor
        self.classifier = classifier
        self.method = method
        self.weight_route = weight_route
        self.split = split
        self.n_folds = n_folds
        self.train_fraction = train_fraction
        self.prob_clip = prob_clip
        self.weight_bounds = weight_bounds
        self.automatic_degree = automatic_degree
        self.automatic_penalty = automatic_penalty
        self.simplify = simplify
        self.structure = structure
        self.random_state = random_state

    def fit(self, X, y=None, t=None, splits=None, cache=None):
        X, y, t = _unpack(X, y, t)
        c = ChangeVector.parse(self.change)
        if c.K != X.shape[1]:
            raise InputError(f"change vector has {len(c)} bits but X has {X.shape[1]} columns")
        if self.structure is not None and not isinstance(self.structure, CausalStructure):
            raise InputError("structure must be a CausalStructure")
        self.method_ = canonical_method(self.method)
        self.functional_ = Functional.parse(self.functional)
        self.plan_ = plan_estimation(c, self.structure, self.simplify)
        if splits is None:
            splits = make_splits(t, self.split, self.n_folds, self.train_fraction, self.random_state)
        self.diagnostics_ = {"split": self.split, "stages": self.plan_.n_stages}
        self.values_ = compute_stage_values(
            self.plan_, self.functional_, X, y, t, splits, self.regressor, self.classifier,
            weight_route=self.weight_route, prob_clip=self.prob_clip, weight_bounds=tuple(self.weight_bounds),
            automatic_degree=self.automatic_degree, automatic_penalty=self.automatic_penalty, cache=cache,
            diagnostics=self.diagnostics_,
        )
        self.estimate_ = self.estimate(self.method_)
        self.theta_ = self.estimate_.theta_hat
        return self

    def estimate(self, method=None):
        """ThetaEstimate under ``method`` from the already fitted nuisances."""
        return _estimate_from_values(self.plan_, self.values_, self.method_ if method is None else method)

    def confidence_interval(self, level=0.95, method=None):
        return self.estimate(method).confidence_interval(level)
