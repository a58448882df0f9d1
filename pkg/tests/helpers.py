import itertools

import numpy as np

from mrattrib.core import TwoSampleDataset


def draw_discrete(n=5000, seed=0):
    """X1, X2 in {0,1,2}, Y in {0,1}; every mechanism differs across samples."""
    rng = np.random.default_rng(seed)
    p_x1 = {0: [0.5, 0.3, 0.2], 1: [0.2, 0.3, 0.5]}
    ts, xs, ys = [], [], []
    for t in (0, 1):
        x1 = rng.choice(3, size=n, p=p_x1[t])
        shift = 0.6 if t else 0.0
        logits = np.stack([np.zeros(n), 0.4 * x1 - shift, 0.8 * x1 - 0.5 + shift], axis=1)
        probs = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
        x2 = (rng.random(n)[:, None] > np.cumsum(probs, axis=1)).sum(axis=1)
        py = 1.0 / (1.0 + np.exp(-(-1.0 + 0.5 * x1 - 0.3 * x2 + (0.7 if t else 0.0) * x1 * (x2 == 1))))
        y = (rng.random(n) < py).astype(float)
        ts.append(np.full(n, t))
        xs.append(np.column_stack([x1, x2]).astype(float))
        ys.append(y)
    return TwoSampleDataset(np.concatenate(ts), np.vstack(xs), np.concatenate(ys))


def enumerate_theta(data, c, h=lambda y: y):
    """Exact counterfactual value from empirical cell frequencies (independent of the package)."""
    x, y, t = np.asarray(data.x), np.asarray(data.y), np.asarray(data.t)
    total = 0.0
    for a, b in itertools.product(range(3), repeat=2):
        s1 = t == c[0]
        p1 = np.mean(x[s1, 0] == a)
        s2 = (t == c[1]) & (x[:, 0] == a)
        p2 = np.mean(x[s2, 1] == b)
        s3 = (t == c[2]) & (x[:, 0] == a) & (x[:, 1] == b)
        total += p1 * p2 * np.mean(h(y[s3]))
    return total

