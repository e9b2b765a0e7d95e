"""Leverage scores, l1 Lewis weights, and the sampling values derived from them."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError, RankDeficiencyError
from .linalg import _cholesky_lower, check_matrix, is_sparse

logger = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-12
KINDS = ("leverage", "lewis", "sampling")


@dataclass
class WeightVector:
    """Per-row positive weights.

    ``kind`` is one of ``leverage``, ``lewis`` or ``sampling``. Iteration
    diagnostics are only filled in for Lewis weights; ``h`` only for sampling
    values.
    """

    values: np.ndarray
    kind: str
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    residual_history: list[float] = field(default_factory=list)
    h: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("weights must be one value per row")
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0):
            raise ValueError("weights must be positive and finite")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def total(self) -> float:
        return float(np.sum(self.values))


def _dense_rows(A) -> np.ndarray:
    A = check_matrix(A)
    return A.toarray() if is_sparse(A) else A


def _quadratic_forms(A: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``q_i = a_i M^{-1} a_i^T`` for every row via one Cholesky of ``M``."""
    try:
        L = _cholesky_lower(M, "leverage")
    except RankDeficiencyError as exc:
        raise RankDeficiencyError(f"matrix is not full column rank: {exc}") from exc
    Z = sla.solve_triangular(L, A.T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", Z, Z)


def leverage_scores(A) -> WeightVector:
    """Statistical leverage scores ``tau_i = a_i (A^T A)^{-1} a_i^T``.

    The scores sum to the column count. All-zero rows get the floor value
    ``1e-12`` instead of zero.
    """
    A = _dense_rows(A)
    tau = _quadratic_forms(A, A.T @ A)
    return WeightVector(np.maximum(tau, WEIGHT_FLOOR), "leverage")


def lewis_residual(A, w) -> float:
    """``max_i |w_i^2 - a_i (A^T W^{-1} A)^{-1} a_i^T| / w_i^2`` over nonzero rows."""
    A = _dense_rows(A)
    w = np.asarray(w, dtype=np.float64)
    q = _quadratic_forms(A, (A.T / w) @ A)
    live = np.any(A != 0.0, axis=1)
    if not np.any(live):
        return 0.0
    return float(np.max(np.abs(w[live] ** 2 - q[live]) / w[live] ** 2))


def lewis_weights(A, max_iters: int = 30, tol: float = 1e-4, strict: bool = True) -> WeightVector:
    """Approximate l1 Lewis weights by the fixed-point map ``w <- sqrt(q(w))``.

    Starts from the leverage scores and stops once the largest relative change
    ``max_i |w_new_i / w_i - 1|`` is at most ``tol`` or after ``max_iters``
    updates. The map contracts by 1/2 in log-space, so convergence is
    geometric.

    Raises :class:`ConvergenceError` (carrying the partial result) when the
    final residual exceeds ``10 * tol`` and ``strict`` is true; otherwise the
    result is returned with ``converged=False``.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = _dense_rows(A)
    live = np.any(A != 0.0, axis=1)
    w = leverage_scores(A).values
    history: list[float] = []
    iters = 0
    change = math.inf
    while iters < max_iters:
        q = _quadratic_forms(A, (A.T / w) @ A)
        w_new = np.where(live, np.sqrt(np.maximum(q, 0.0)), WEIGHT_FLOOR)
        w_new = np.maximum(w_new, WEIGHT_FLOOR)
        ratio = w_new[live] / w[live]
        # residual of the current iterate, since q(w)/w^2 = (w_new/w)^2
        history.append(float(np.max(np.abs(1.0 - ratio**2))) if ratio.size else 0.0)
        change = float(np.max(np.abs(ratio - 1.0))) if ratio.size else 0.0
        w = w_new
        iters += 1
        if change <= tol:
            break
    residual = lewis_residual(A, w)
    history.append(residual)
    for prev, cur in zip(history, history[1:]):
        if cur > prev * (1 + 1e-9) + 1e-15:
            logger.info("Lewis residual increased %.3e -> %.3e", prev, cur)
    converged = change <= tol and residual <= 10 * tol
    result = WeightVector(w, "lewis", iterations=iters, residual=residual,
                          converged=converged, residual_history=history)
    if not converged:
        if strict:
            raise ConvergenceError(f"Lewis weights did not converge in {iters} iterations",
                                   residual, result)
        logger.warning("Lewis weights unconverged after %d iterations (residual %.3e)",
                       iters, residual)
    return result


def oversampling_factor(n: int, eps: float, c_sample: float) -> float:
    """``h(n, eps) = c_sample * eps^-2 * ln(max(n, 3))``."""
    if not 0 < eps <= 1:
        raise ValueError("eps must be in (0, 1]")
    if c_sample <= 0:
        raise ValueError("c_sample must be positive")
    return c_sample * eps**-2 * math.log(max(n, 3))


def sampling_values(w: WeightVector, n: int, eps: float, c_sample: float = 4.0) -> WeightVector:
    """Sampling values ``p_i = w_i * h(n, eps)``; their sum is the expected sample size."""
    h = oversampling_factor(n, eps, c_sample)
    return WeightVector(np.asarray(w.values) * h, "sampling", h=h)
