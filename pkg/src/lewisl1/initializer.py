"""Warm starts from the least-squares solution and the objective bracket it gives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NotNearIsotropicError
from .linalg import check_matrix, check_vector
from .preconditioner import PreconditionedProblem, weighted_gram

C_GUARD = 2
MAX_CG_CONDITION = 100.0


@dataclass
class ObjectiveBracket:
    """``f2 <= f* <= sqrt(n) f2`` where ``f2`` is the least-squares residual norm."""

    f2: float
    lower: float
    upper: float
    guesses: list[float]
    exact_fit: bool
    zero_tol: float


def init_isotropic(P: PreconditionedProblem) -> np.ndarray:
    """``x0 = (A~U)^T b~``; the exact least-squares minimiser under isotropy."""
    if P.mode != "lewis":
        raise ValueError("init_isotropic needs an exactly isotropic (Lewis-mode) problem")
    return P.tmatvec(P.b)


@dataclass
class CGInfo:
    iterations: int
    residual: float
    target: float
    certified: bool


def conjugate_gradient(matvec, rhs: np.ndarray, tol: float, max_iters: int, x0=None):
    """Plain CG for an SPD operator; stops when ``||M x - rhs|| <= tol * ||rhs||``.

    Yields ``(x, iteration, residual_vector)`` after every step so the caller
    can apply an extra stopping test.
    """
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=np.float64)
    r = rhs - matvec(x)
    p = r.copy()
    rr = float(r @ r)
    yield x, 0, r
    for k in range(1, max_iters + 1):
        if rr == 0.0:
            return
        Mp = matvec(p)
        alpha = rr / float(p @ Mp)
        x = x + alpha * p
        r = r - alpha * Mp
        rr_new = float(r @ r)
        yield x, k, r
        p = r + (rr_new / rr) * p
        rr = rr_new


def init_cg(A, b, eps_cg: float, max_iters: int | None = None, weights=None) -> np.ndarray:
    """Approximate least-squares minimiser by CG on ``A^T W A x = A^T W b``.

    Requires a near-isotropic ``A`` (Gram condition number at most 100).
    The result satisfies ``||x - x0|| <= eps_cg * ||A x0 - b||`` for the exact
    minimiser ``x0``: iteration stops on the relative residual
    ``eps_cg / (kappa * n^2)`` or earlier once that bound is certified from
    the residual and the Gram spectrum. ``weights`` are row multiplicities.
    """
    x, _ = init_cg_info(A, b, eps_cg, max_iters, weights)
    return x


def init_cg_info(A, b, eps_cg: float, max_iters: int | None = None, weights=None):
    if eps_cg <= 0:
        raise ValueError("eps_cg must be positive")
    A = check_matrix(A)
    n, d = A.shape
    b = check_vector(b, n, "b")
    w = np.ones(n) if weights is None else check_vector(weights, n, "weights")
    G = weighted_gram(A, w)
    lam = np.linalg.eigvalsh(G)
    if lam[0] <= 0:
        raise NotNearIsotropicError("Gram matrix is singular")
    kappa = float(lam[-1] / lam[0])
    if kappa > MAX_CG_CONDITION:
        raise NotNearIsotropicError(f"Gram condition {kappa:.3g} exceeds {MAX_CG_CONDITION:g}")
    n_eff = float(w.sum())
    delta = eps_cg / (kappa * n_eff**C_GUARD)
    if max_iters is None:
        max_iters = d + int(math.ceil(math.sqrt(kappa) * math.log(2.0 / delta)))

    def matvec(v):
        return np.asarray(A.T @ (w * np.asarray(A @ v).ravel())).ravel()

    rhs = np.asarray(A.T @ (w * b)).ravel()
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros(d), CGInfo(0, 0.0, 0.0, True)
    x_last, res_last = None, math.inf
    for x, k, r in conjugate_gradient(matvec, rhs, delta, max_iters):
        g = float(np.linalg.norm(r))
        x_last, res_last = x, g / rhs_norm
        if g <= delta * rhs_norm:
            return x, CGInfo(k, res_last, delta, False)
        # ||x - x0|| <= ||g|| / lam_min and ||A x0 - b|| >= ||A x - b|| - sqrt(lam_max) ||x - x0||
        err = g / lam[0]
        resid = np.asarray(A @ x).ravel() - b
        floor = math.sqrt(float(np.dot(w, resid * resid))) - math.sqrt(lam[-1]) * err
        if k > 0 and err <= eps_cg * floor:
            return x, CGInfo(k, res_last, delta, True)
    if np.isfinite(res_last) and res_last <= 10 * np.finfo(float).eps * kappa:
        return x_last, CGInfo(max_iters, res_last, delta, False)
    raise ConvergenceError(f"CG hit {max_iters} iterations above target {delta:.3e}", res_last,
                           x_last)


def init_cg_problem(P: PreconditionedProblem, eps_cg: float) -> np.ndarray:
    return init_cg(P.rows, P.b, eps_cg, weights=P.counts)


def objective_bracket(A, b, x_l2, weights=None) -> ObjectiveBracket:
    """Bracket ``[f2, sqrt(n) f2]`` on the l1 optimum plus doubling guesses.

    ``weights`` are integer row multiplicities; ``n`` is then their sum.
    """
    A = check_matrix(A)
    n = A.shape[0]
    b = check_vector(b, n, "b")
    x_l2 = check_vector(x_l2, A.shape[1], "x_l2")
    w = np.ones(n) if weights is None else check_vector(weights, n, "weights")
    r = np.asarray(A @ x_l2).ravel() - b
    f2 = math.sqrt(float(np.dot(w, r * r)))
    zero_tol = 1e-12 * (1.0 + math.sqrt(float(np.dot(w, b * b))))
    n_eff = float(w.sum())
    upper = math.sqrt(n_eff) * f2
    if f2 <= zero_tol:
        return ObjectiveBracket(f2, f2, upper, [], True, zero_tol)
    top = int(math.ceil(math.log2(math.sqrt(n_eff)))) + 1 if n_eff > 1 else 1
    guesses = [f2 * 2.0**i for i in range(top + 1)]
    return ObjectiveBracket(f2, f2, upper, guesses, False, zero_tol)


def bracket_for(P: PreconditionedProblem, x_l2) -> ObjectiveBracket:
    return objective_bracket(P.rows, P.b, x_l2, weights=P.counts)


__all__ = [
    "CGInfo",
    "ObjectiveBracket",
    "bracket_for",
    "conjugate_gradient",
    "init_cg",
    "init_cg_info",
    "init_cg_problem",
    "init_isotropic",
    "objective_bracket",
]
