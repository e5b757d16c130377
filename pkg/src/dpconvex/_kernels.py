"""Compiled inner loops for the ERM solvers.

Family codes: 0 squared, 1 hinge, 2 logistic.
"""

import math

import numpy as np
from numba import njit

SQUARED, HINGE, LOGISTIC = 0, 1, 2


@njit(cache=True)
def _proj(w, R):
    nrm = math.sqrt(np.dot(w, w))
    if nrm > R:
        return w * (R / nrm)
    return w


@njit(cache=True)
def _sigmoid(t):
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


@njit(cache=True)
def _softplus(t):
    if t > 0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


@njit(cache=True)
def _grad(family, X, y, w, reg, lin):
    n, d = X.shape
    m = X @ w
    g = np.zeros(d)
    for i in range(n):
        if family == SQUARED:
            dm = 2.0 * (m[i] - y[i])
        elif family == LOGISTIC:
            dm = -y[i] * _sigmoid(-y[i] * m[i])
        else:
            dm = -y[i] if y[i] * (1.0 - m[i]) > 0 else 0.0
        if dm != 0.0:
            for j in range(d):
                g[j] += dm * X[i, j]
    for j in range(d):
        g[j] = g[j] / n + reg * w[j] + lin[j]
    return g


@njit(cache=True)
def objective(family, X, y, w, reg, lin):
    n = X.shape[0]
    m = X @ w
    s = 0.0
    for i in range(n):
        if family == SQUARED:
            r = m[i] - y[i]
            s += r * r
        elif family == LOGISTIC:
            s += _softplus(-y[i] * m[i])
        else:
            a = y[i] * (1.0 - m[i])
            if a > 0:
                s += a
    return s / n + 0.5 * reg * np.dot(w, w) + np.dot(lin, w)


@njit(cache=True)
def accelerated_projected_gradient(family, X, y, reg, R, lin, L, mu, tol, max_iters, w0):
    """Constant-momentum accelerated projected gradient for a smooth, mu-strongly convex objective.

    Stops when ``2 ||G(z)|| / mu <= tol`` where ``G`` is the gradient mapping at the
    extrapolated point; that quantity bounds ``||z - w*||`` and the returned point is a
    projected-gradient step from ``z``, hence no farther from ``w*``.
    Returns ``(w, iterations, certificate)``.
    """
    q = (math.sqrt(L) - math.sqrt(mu)) / (math.sqrt(L) + math.sqrt(mu))
    w = _proj(w0.copy(), R)
    z = w.copy()
    cert = np.inf
    f_prev = np.inf
    for it in range(1, max_iters + 1):
        g = _grad(family, X, y, z, reg, lin)
        w_new = _proj(z - g / L, R)
        diff = z - w_new
        cert = 2.0 * L * math.sqrt(np.dot(diff, diff)) / mu
        if cert <= tol:
            return w_new, it, cert
        f_new = objective(family, X, y, w_new, reg, lin)
        if f_new > f_prev:
            # momentum overshoot: restart from the last iterate
            z = w.copy()
            f_prev = objective(family, X, y, w, reg, lin)
            continue
        z = w_new + q * (w_new - w)
        w = w_new
        f_prev = f_new
    return w, max_iters, cert


@njit(cache=True)
def _ball_argmin(u, lam, R):
    # argmin_{||w|| <= R} lam/2 ||w||^2 - <u, w>
    nrm = math.sqrt(np.dot(u, u))
    if nrm <= lam * R:
        return u / lam
    return u * (R / nrm)


@njit(cache=True)
def _conj(u, lam, R):
    nrm = math.sqrt(np.dot(u, u))
    if nrm <= lam * R:
        return nrm * nrm / (2.0 * lam)
    return R * nrm - 0.5 * lam * R * R


@njit(cache=True)
def hinge_dual_cd(X, y, lam, R, lin, tol, max_epochs, alpha0):
    """Dual coordinate ascent for ``mean max{0, y(1-<w,x>)} + lam/2||w||^2 + <lin,w>`` on the R-ball.

    With ``c_i = y_i x_i`` the dual is ``max_{alpha in [0,1]^n} mean(alpha*y) - g*(v - lin)``
    where ``v = mean(alpha_i c_i)`` and ``g`` is ``lam/2||.||^2`` restricted to the ball.
    The duality gap certifies ``||w - w*|| <= sqrt(2 gap / lam)``.
    Returns ``(w, alpha, epochs, certificate)``.
    """
    n, d = X.shape
    C = np.empty((n, d))
    cn = np.empty(n)
    for i in range(n):
        for j in range(d):
            C[i, j] = y[i] * X[i, j]
        cn[i] = np.dot(C[i], C[i])
    alpha = np.minimum(np.maximum(alpha0.copy(), 0.0), 1.0)
    v = (C.T @ alpha) / n
    gap_target = 0.5 * lam * tol * tol
    cert = np.inf
    w = _ball_argmin(v - lin, lam, R)
    for ep in range(1, max_epochs + 1):
        for i in range(n):
            if cn[i] == 0.0:
                new = 1.0 if y[i] > 0 else 0.0
                alpha[i] = new
                continue
            u0 = v - lin - alpha[i] * C[i] / n
            # derivative of the coordinate objective is (y_i - c_i . w(u(t))) / n, non-increasing in t
            t = (y[i] * lam - np.dot(C[i], u0)) * n / cn[i]
            if t <= 0.0 or t >= 1.0 or math.sqrt(np.dot(u0 + t * C[i] / n, u0 + t * C[i] / n)) > lam * R:
                lo, hi = 0.0, 1.0
                if y[i] - np.dot(C[i], _ball_argmin(u0, lam, R)) <= 0.0:
                    t = 0.0
                elif y[i] - np.dot(C[i], _ball_argmin(u0 + C[i] / n, lam, R)) >= 0.0:
                    t = 1.0
                else:
                    for _ in range(100):
                        mid = 0.5 * (lo + hi)
                        if y[i] - np.dot(C[i], _ball_argmin(u0 + mid * C[i] / n, lam, R)) > 0.0:
                            lo = mid
                        else:
                            hi = mid
                        if hi - lo < 1e-16:
                            break
                    t = 0.5 * (lo + hi)
            if t != alpha[i]:
                v += (t - alpha[i]) * C[i] / n
                alpha[i] = t
        v = (C.T @ alpha) / n
        w = _ball_argmin(v - lin, lam, R)
        primal = objective(HINGE, X, y, w, lam, lin)
        dual = np.dot(alpha, y) / n - _conj(v - lin, lam, R)
        gap = max(primal - dual, 0.0)
        cert = math.sqrt(2.0 * gap / lam)
        if gap <= gap_target:
            return w, alpha, ep, cert
    return w, alpha, max_epochs, cert


@njit(cache=True)
def projected_subgradient(family, X, y, reg, R, lin, mu, iters):
    """Projected subgradient descent from 0 with step ``1/(mu t)``; returns the last iterate."""
    d = X.shape[1]
    w = np.zeros(d)
    for t in range(1, iters + 1):
        g = _grad(family, X, y, w, reg, lin)
        w = _proj(w - g / (mu * t), R)
    return w
