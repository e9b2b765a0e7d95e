"""Compiled per-sample loops over CSR rows.

Row indices are drawn by the caller so every kernel is a deterministic
function of its inputs.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _row_dot(indptr, indices, data, j, x):
    s = 0.0
    for k in range(indptr[j], indptr[j + 1]):
        s += data[k] * x[indices[k]]
    return s


@njit(cache=True)
def _huber_slope(t, width):
    if t > width:
        return 1.0
    if t < -width:
        return -1.0
    return t / width


@njit(cache=True)
def sgd_run(indptr, indices, data, b, n_rows, x0, radius, eta, idx):
    """Projected stochastic subgradient descent on ``sum_j c_j |a_j x - b_j|``.

    Step ``x <- P(x - eta * N * sign(r_j) a_j)`` with ``P`` the projection on
    the ball of ``radius`` around ``x0``. Returns the mean of the iterates
    ``x_0 .. x_{T-1}``, the last iterate and the largest distance from ``x0``
    seen after projection.
    """
    d = x0.shape[0]
    x = x0.copy()
    acc = np.zeros(d)
    max_dist = 0.0
    T = idx.shape[0]
    step = eta * n_rows
    for t in range(T):
        for i in range(d):
            acc[i] += x[i]
        j = idx[t]
        r = _row_dot(indptr, indices, data, j, x) - b[j]
        if r == 0.0:
            continue
        s = step if r > 0.0 else -step
        for k in range(indptr[j], indptr[j + 1]):
            x[indices[k]] -= s * data[k]
        nrm = 0.0
        for i in range(d):
            nrm += (x[i] - x0[i]) ** 2
        nrm = math.sqrt(nrm)
        if nrm > radius:
            f = radius / nrm
            for i in range(d):
                x[i] = x0[i] + (x[i] - x0[i]) * f
            nrm = radius
        if nrm > max_dist:
            max_dist = nrm
    return acc / T, x, max_dist


@njit(cache=True)
def katyusha_epoch(indptr, indices, data, b, n_rows, width, sigma, center,
                   tau1, tau2, alpha, x_tilde, slope_tilde, mu, z, y, idx):
    """One outer epoch of Katyusha with a ``sigma/2 ||x - center||^2`` prox term.

    ``slope_tilde[j]`` is the Huber slope of row ``j`` at the snapshot
    ``x_tilde`` and ``mu`` the full smooth gradient there. Uses the
    ``y = x + tau1 (z_new - z)`` update. Returns ``(z, y, x_tilde_next)``,
    where the next snapshot is the ``(1 + alpha sigma)^k``-weighted mean of
    the ``y`` iterates.
    """
    d = z.shape[0]
    m = idx.shape[0]
    x = np.empty(d)
    g = np.empty(d)
    acc = np.zeros(d)
    wsum = 0.0
    log_q = math.log1p(alpha * sigma)
    inv = 1.0 / (1.0 + alpha * sigma)
    c0 = 1.0 - tau1 - tau2
    for k in range(m):
        for i in range(d):
            x[i] = tau1 * z[i] + tau2 * x_tilde[i] + c0 * y[i]
        j = idx[k]
        r = _row_dot(indptr, indices, data, j, x) - b[j]
        coef = n_rows * (_huber_slope(r, width) - slope_tilde[j])
        for i in range(d):
            g[i] = mu[i]
        if coef != 0.0:
            for kk in range(indptr[j], indptr[j + 1]):
                g[indices[kk]] += coef * data[kk]
        wk = math.exp((k - (m - 1)) * log_q)
        wsum += wk
        for i in range(d):
            z_new = (z[i] - alpha * g[i] + alpha * sigma * center[i]) * inv
            y[i] = x[i] + tau1 * (z_new - z[i])
            z[i] = z_new
            acc[i] += wk * y[i]
    return z, y, acc / wsum
