"""Normal-approximation intervals and the multiplier bootstrap over ψ contributions."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .exceptions import InputError

MULTIPLIERS = ("bayesian_exponential", "gaussian")


@dataclass(frozen=True)
class ConfidenceInterval:
    level: float
    lo: float
    hi: float
    se: float
    estimate: float

    def __contains__(self, value):
        return self.lo <= value <= self.hi

    @property
    def width(self):
        return self.hi - self.lo


def _z(level):
    if not 0.0 < level < 1.0:
        raise InputError(f"level must lie in (0, 1), got {level}")
    return float(norm.ppf(0.5 + level / 2.0))


def normal_interval(estimate, se, level=0.95):
    z = _z(level)
    return ConfidenceInterval(level, estimate - z * se, estimate + z * se, float(se), float(estimate))


def estimate_variance_ci(est, level=0.95):
    """Interval ``theta_hat -/+ z * sqrt(V_hat / n)`` with ``V_hat`` built from both samples' ψ."""
    psi0 = np.asarray(est.psi0)
    psi1 = np.asarray(est.psi1)
    if len(psi0) == 0 or len(psi1) == 0:
        raise InputError("psi0 and psi1 must be nonempty")
    n0, n1 = len(psi0), len(psi1)
    n = n0 + n1
    v = n / n0 * (np.var(psi0, ddof=1) if n0 > 1 else 0.0) + n / n1 * (np.var(psi1, ddof=1) if n1 > 1 else 0.0)
    return normal_interval(est.theta_hat, np.sqrt(v / n), level)


def two_sided_p(estimate, se):
    """Normal-approximation p-value for ``H0: value = 0``; a zero ``se`` gives 1 or 0."""
    estimate = np.asarray(estimate, dtype=np.float64)
    se = np.asarray(se, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = 2.0 * norm.sf(np.abs(estimate) / se)
    p = np.where(se > 0, p, np.where(estimate == 0, 1.0, 0.0))
    return p if p.ndim else float(p)


@dataclass(frozen=True, eq=False)
class BootstrapDraws:
    """``draws[d, j]`` is the ``d``-th bootstrap value of target ``j``."""

    draws: np.ndarray
    estimates: np.ndarray
    multiplier: str
    seed: int

    @property
    def B(self):
        return self.draws.shape[0]

    def se(self):
        return np.std(self.draws, axis=0, ddof=1) if self.B > 1 else np.zeros(self.draws.shape[1])

    def transform(self, W):
        """Draws of the linear functionals ``W @ theta``; returns a new BootstrapDraws."""
        W = np.asarray(W, dtype=np.float64)
        return BootstrapDraws(self.draws @ W.T, W @ self.estimates, self.multiplier, self.seed)


def _stack(estimates, sample):
    psis = [np.asarray(e.psi0 if sample == 0 else e.psi1, dtype=np.float64) for e in estimates]
    lengths = {len(p) for p in psis}
    if len(lengths) != 1:
        raise InputError(f"misaligned psi{sample} lengths across targets: {sorted(lengths)}")
    rows = [getattr(e, f"rows{sample}") for e in estimates]
    ref = next((r for r in rows if r is not None), None)
    if ref is not None:
        for r in rows:
            if r is not None and not np.array_equal(r, ref):
                raise InputError(f"targets do not share the same sample-{sample} rows")
    return np.column_stack(psis)


def _draw_multipliers(rng, n, multiplier):
    if multiplier == "bayesian_exponential":
        return rng.standard_exponential(n) - 1.0
    return rng.standard_normal(n)


def multiplier_bootstrap(estimates, B=1000, multiplier="bayesian_exponential", seed=0):
    """Joint perturbation draws for a list of ThetaEstimate sharing row alignment.

    Every draw uses one multiplier vector per sample, independent across the
    two samples and shared across all targets, so cross-target dependence is
    preserved. Draw ``d`` takes its multipliers from the ``d``-th child of
    ``SeedSequence(seed)``; nothing is refit.
    """
    if multiplier not in MULTIPLIERS:
        raise InputError(f"multiplier must be one of {MULTIPLIERS}, got {multiplier!r}")
    if int(B) != B or B < 1:
        raise InputError(f"B must be an integer >= 1, got {B!r}")
    estimates = list(estimates)
    if not estimates:
        raise InputError("no estimates to bootstrap")
    P0, P1 = _stack(estimates, 0), _stack(estimates, 1)
    P0 = P0 - P0.mean(axis=0)
    P1 = P1 - P1.mean(axis=0)
    n0, n1 = len(P0), len(P1)
    Xi0 = np.empty((B, n0))
    Xi1 = np.empty((B, n1))
    for d, child in enumerate(np.random.SeedSequence(int(seed)).spawn(int(B))):
        rng = np.random.Generator(np.random.PCG64(child))
        Xi0[d] = _draw_multipliers(rng, n0, multiplier)
        Xi1[d] = _draw_multipliers(rng, n1, multiplier)
    theta = np.array([e.theta_hat for e in estimates])
    draws = theta + (Xi0 @ P0) / n0 + (Xi1 @ P1) / n1
    return BootstrapDraws(draws, theta, multiplier, int(seed))


def recentered(psi):
    psi = np.asarray(psi, dtype=np.float64)
    return psi - psi.mean()
