"""Low-level solvers shared by the penalized learners.

All penalized problems are reduced to the quadratic form

    0.5 * b' G b - c' b + lam * sum_j pen_j * |b_j|

and solved by cyclic coordinate descent on the Gram matrix. The LASSO uses it
directly; the l1-logistic fit calls it once per proximal-Newton step.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _cd_gram(G, c, lam, pen, b, max_iter, tol, history):
    p = b.shape[0]
    Gb = G @ b
    n_iter = 0
    for it in range(max_iter):
        max_step = 0.0
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            old = b[j]
            rho = c[j] - Gb[j] + gjj * old
            thr = lam * pen[j]
            if rho > thr:
                new = (rho - thr) / gjj
            elif rho < -thr:
                new = (rho + thr) / gjj
            else:
                new = 0.0
            if new != old:
                d = new - old
                for k in range(p):
                    Gb[k] += G[k, j] * d
                b[j] = new
                step = abs(d) * np.sqrt(gjj)
                if step > max_step:
                    max_step = step
        n_iter = it + 1
        if it < history.shape[0]:
            obj = 0.5 * (b @ Gb) - c @ b
            for j in range(p):
                obj += lam * pen[j] * abs(b[j])
            history[it] = obj
        if max_step < tol:
            break
    return n_iter


def quadratic_objective(G, c, lam, pen, b):
    return 0.5 * b @ G @ b - c @ b + lam * np.sum(pen * np.abs(b))


def coordinate_descent(G, c, lam, pen=None, b0=None, max_iter=10_000, tol=1e-10, record=False):
    """Minimize the penalized quadratic form by cyclic coordinate descent.

    Returns ``(b, n_iter, history)``; ``history`` holds the objective after
    every sweep when ``record`` is true and is empty otherwise.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    p = c.shape[0]
    pen = np.ones(p) if pen is None else np.ascontiguousarray(pen, dtype=np.float64)
    b = np.zeros(p) if b0 is None else np.array(b0, dtype=np.float64)
    history = np.empty(max_iter if record else 0)
    n_iter = _cd_gram(G, c, float(lam), pen, b, int(max_iter), float(tol), history)
    return b, n_iter, history[: n_iter if record else 0]


def logistic_loss(eta, y):
    return np.mean(np.logaddexp(0.0, eta) - y * eta)


def expit(eta):
    out = np.empty_like(eta, dtype=np.float64)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_l1(Z, y, lam, theta0=None, max_iter=100, tol=1e-7, inner_tol=1e-9):
    """Proximal Newton for l1-penalized logistic regression, intercept free.

    ``Z`` is the standardized design without an intercept column. Returns the
    parameter vector ``(intercept, coefs...)`` and the number of outer steps.
    """
    n, p = Z.shape
    A = np.empty((n, p + 1))
    A[:, 0] = 1.0
    A[:, 1:] = Z
    pen = np.ones(p + 1)
    pen[0] = 0.0
    theta = np.zeros(p + 1) if theta0 is None else np.array(theta0, dtype=np.float64)
    if theta0 is None:
        ybar = np.clip(y.mean(), 1e-6, 1 - 1e-6)
        theta[0] = np.log(ybar / (1 - ybar))

    def objective(th):
        return logistic_loss(A @ th, y) + lam * np.sum(np.abs(th[1:]))

    obj = objective(theta)
    it = 0
    for it in range(1, max_iter + 1):
        eta = A @ theta
        prob = expit(eta)
        w = np.maximum(prob * (1.0 - prob), 1e-6)
        z = eta + (y - prob) / w
        Aw = A * w[:, None]
        G = Aw.T @ A / n
        c = Aw.T @ z / n
        new, _, _ = coordinate_descent(G, c, lam, pen, theta, max_iter=1000, tol=inner_tol)
        d = new - theta
        step = 1.0
        while True:
            cand = theta + step * d
            cand_obj = objective(cand)
            if cand_obj <= obj + 1e-12 or step < 1e-6:
                break
            step *= 0.5
        moved = np.max(np.abs(step * d))
        if cand_obj <= obj + 1e-12:
            theta, obj = cand, cand_obj
        if moved < tol:
            break
    return theta, it


def logistic_l2(A, y, lam, pen, max_iter=100, gtol=1e-8):
    """Newton/IRLS for ridge-penalized logistic regression.

    ``A`` includes the intercept column; ``pen`` masks which coefficients are
    penalized. Returns ``(theta, n_iter, converged)``.
    """
    n, q = A.shape
    theta = np.zeros(q)
    ybar = np.clip(y.mean(), 1e-6, 1 - 1e-6)
    theta[0] = np.log(ybar / (1 - ybar))
    P = np.diag(pen) * lam

    def objective(th):
        return logistic_loss(A @ th, y) + 0.5 * lam * np.sum(pen * th**2)

    obj = objective(theta)
    for it in range(1, max_iter + 1):
        prob = expit(A @ theta)
        grad = A.T @ (prob - y) / n + P @ theta
        if np.linalg.norm(grad) <= gtol:
            return theta, it - 1, True
        w = prob * (1.0 - prob)
        H = (A * w[:, None]).T @ A / n + P
        try:
            d = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            d = np.linalg.lstsq(H, grad, rcond=None)[0]
        if np.linalg.norm(grad) < 1e-5:
            # Close to the optimum the objective change is below rounding; take the Newton step.
            theta = theta - d
            obj = objective(theta)
            continue
        step = 1.0
        while step > 1e-10:
            cand = theta - step * d
            cand_obj = objective(cand)
            if cand_obj <= obj:
                break
            step *= 0.5
        else:
            return theta, it, False
        theta, obj = cand, cand_obj
    prob = expit(A @ theta)
    grad = A.T @ (prob - y) / n + P @ theta
    return theta, max_iter, bool(np.linalg.norm(grad) <= gtol)
