"""Exact reference solvers for small l1 regression instances."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateInputError, InstanceTooLargeError, RankDeficiencyError
from .linalg import (
    check_matrix,
    check_vector,
    gram,
    is_sparse,
    spd_solve,
    transpose_matvec,
)

MAX_N = 30
MAX_D = 4
_CHUNK = 20000


@dataclass
class OracleResult:
    x_star: np.ndarray
    f_star: float
    active_rows: list[int]
    method: str


def _weighted_l1(A, b, w, x) -> float:
    return float(np.dot(w, np.abs(A @ x - b)))


def _prepare(A, b, weights):
    A = check_matrix(A)
    if is_sparse(A):
        A = A.toarray()
    b = check_vector(b, A.shape[0], "b")
    if weights is None:
        w = np.ones(A.shape[0])
    else:
        w = check_vector(weights, A.shape[0], "weights")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
    return A, b, w


def _active(A, b, x) -> list[int]:
    r = np.abs(A @ x - b)
    scale = 1e-9 * (1.0 + np.abs(b).max() + np.abs(A).max() * np.abs(x).max())
    return [int(i) for i in np.flatnonzero(r <= scale)]


def weighted_median(a, b, weights=None) -> OracleResult:
    """Minimise ``sum_i w_i |a_i x - b_i|`` over scalar ``x`` (lower weighted median)."""
    a = check_vector(np.ravel(a), None, "a")
    A, b, w = _prepare(a[:, None], b, weights)
    live = a != 0
    if not np.any(live):
        raise RankDeficiencyError("all coefficients are zero")
    t = b[live] / a[live]
    wt = w[live] * np.abs(a[live])
    order = np.argsort(t, kind="stable")
    cum = np.cumsum(wt[order])
    k = int(np.searchsorted(cum, 0.5 * cum[-1] - 1e-15 * cum[-1]))
    x = np.array([t[order][k]])
    return OracleResult(x, _weighted_l1(A, b, w, x), _active(A, b, x), "median")


def exact_l1_small(A, b, weights=None, max_subsets: int | None = None) -> OracleResult:
    """Global l1 minimiser by enumerating every ``d``-subset of rows.

    Some minimiser of a full-rank l1 regression zeroes at least ``d``
    residuals, so the best nonsingular ``d x d`` subset solve is optimal.
    Ties go to the lexicographically smallest subset. By default the instance
    must have ``n <= 30`` and ``d <= 4``; passing ``max_subsets`` replaces that
    limit with a bound on the number of subsets.
    """
    A, b, w = _prepare(A, b, weights)
    n, d = A.shape
    if max_subsets is None:
        if n > MAX_N or d > MAX_D:
            raise InstanceTooLargeError(f"oracle limited to n <= {MAX_N}, d <= {MAX_D}; got {n} x {d}")
    elif math.comb(n, d) > max_subsets:
        raise InstanceTooLargeError(f"C({n},{d}) = {math.comb(n, d)} subsets exceeds {max_subsets}")
    if n < d or np.linalg.matrix_rank(A) < d:
        raise RankDeficiencyError("oracle needs a full column rank matrix")

    best_f = math.inf
    best_x = None
    best_sub = None
    any_ok = False
    combos = itertools.combinations(range(n), d)
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=np.int64)
        if chunk.size == 0:
            break
        Ms = A[chunk]  # (k, d, d)
        rhs = b[chunk]
        # relative singularity test: |det| against the product of row norms
        det = np.linalg.det(Ms)
        scale = np.prod(np.linalg.norm(Ms, axis=2), axis=1)
        ok = np.abs(det) > 1e-10 * scale
        if not np.any(ok):
            continue
        any_ok = True
        X = np.linalg.solve(Ms[ok], rhs[ok][..., None])[..., 0]  # (k_ok, d)
        F = np.abs(X @ A.T - b) @ w
        i = int(np.argmin(F))
        fmin = F[i]
        tie = np.flatnonzero(F <= fmin + 1e-12 * (1.0 + abs(fmin)))
        i = int(tie[0])
        if best_x is None or F[i] < best_f - 1e-12 * (1.0 + abs(best_f)):
            best_f = float(F[i])
            best_x = X[i]
            best_sub = chunk[ok][i]
    if not any_ok:
        raise DegenerateInputError("every d-subset of rows is singular")
    x = np.asarray(best_x, dtype=np.float64)
    active = sorted(set(_active(A, b, x)) | {int(j) for j in best_sub})
    return OracleResult(x, _weighted_l1(A, b, w, x), active, "subset-enumeration")


def exact_l1_lp(A, b, weights=None) -> OracleResult:
    """Global l1 minimiser as a linear program solved by HiGHS (dual simplex).

    ``min sum_i w_i (u_i + v_i)`` subject to ``A x + u - v = b``, ``u, v >= 0``.
    A vertex solution is returned, so at least ``d`` residuals are zero on
    general-position inputs. Scales to instances far beyond subset
    enumeration; agreement with :func:`exact_l1_small` is checked in tests.
    """
    from scipy.optimize import linprog

    A, b, w = _prepare(A, b, weights)
    n, d = A.shape
    if n < d or np.linalg.matrix_rank(A) < d:
        raise RankDeficiencyError("oracle needs a full column rank matrix")
    I = sp.identity(n, format="csr")
    A_eq = sp.hstack([sp.csr_matrix(A), I, -I], format="csr")
    c = np.concatenate([np.zeros(d), w, w])
    bounds = [(None, None)] * d + [(0, None)] * (2 * n)
    res = linprog(c, A_eq=A_eq, b_eq=b, bounds=bounds, method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise DegenerateInputError(f"LP oracle failed: {res.message}")
    x = np.asarray(res.x[:d], dtype=np.float64)
    return OracleResult(x, _weighted_l1(A, b, w, x), _active(A, b, x), "linear-program")


def exact_preconditioned(P, max_subsets: int | None = None) -> OracleResult:
    """Oracle for a counted preconditioned problem (weights are the row counts)."""
    rows = P.rows.toarray() if is_sparse(P.rows) else P.rows
    if P.d == 1:
        return weighted_median(rows[:, 0], P.b, P.counts)
    return exact_l1_small(rows, P.b, weights=P.counts, max_subsets=max_subsets)


def exact_l2(A, b) -> np.ndarray:
    """Least-squares minimiser by the normal equations."""
    A = check_matrix(A)
    b = check_vector(b, A.shape[0], "b")
    return spd_solve(gram(A), transpose_matvec(A, b))
