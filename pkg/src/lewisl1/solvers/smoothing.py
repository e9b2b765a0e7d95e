"""Huber smoothing of the counted l1 objective with a proximal term."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..linalg import check_vector
from ..preconditioner import PreconditionedProblem


def huber_value_grad(t, beta):
    """Huber envelope ``psi_beta`` of ``|t|`` and its derivative.

    ``psi_beta(t) = t^2 / (2 beta)`` for ``|t| <= beta`` and ``|t| - beta/2``
    otherwise, so ``psi <= |t| <= psi + beta/2``. Works elementwise on arrays.

    Parameters
    ----------
    t : float or ndarray
    beta : float or ndarray
        Positive width(s), broadcast against ``t``.

    Returns
    -------
    value, slope : float or ndarray
    """
    t = np.asarray(t, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if np.any(beta <= 0):
        raise ValueError("beta must be positive")
    a = np.abs(t)
    inner = a <= beta
    value = np.where(inner, 0.5 * t * t / beta, a - 0.5 * beta)
    slope = np.where(inner, t / beta, np.sign(t))
    if value.ndim == 0:
        return float(value), float(slope)
    return value, slope


@dataclass
class SmoothedObjective:
    """``F(x) = sum_j c_j psi_w(r_j(x)) + sigma/2 ||x - center||^2``.

    ``width`` is the Huber width in residual units. Each component
    ``N psi_w(r_j)`` is ``N ||row_j||^2 / width``-smooth.
    """

    problem: PreconditionedProblem
    width: float
    center: np.ndarray
    sigma: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        self.center = check_vector(self.center, self.problem.d, "center")

    @property
    def N(self) -> int:
        return self.problem.N

    def smooth_part(self, x):
        """Value and gradient of the Huber sum alone (no proximal term)."""
        P = self.problem
        r = P.residual(x)
        v, s = huber_value_grad(r, self.width)
        return float(np.dot(P.counts, v)), P.tmatvec(s)

    def value_grad(self, x):
        x = check_vector(x, self.problem.d, "x")
        v, g = self.smooth_part(x)
        dx = x - self.center
        return v + 0.5 * self.sigma * float(dx @ dx), g + self.sigma * dx

    def value(self, x) -> float:
        return self.value_grad(x)[0]

    def grad(self, x) -> np.ndarray:
        return self.value_grad(x)[1]

    def slopes(self, x) -> np.ndarray:
        return huber_value_grad(self.problem.residual(x), self.width)[1]

    def unsmoothed(self, x) -> float:
        return self.problem.objective(x)

    def smoothness(self) -> float:
        """Largest component smoothness ``max_j N ||row_j||^2 / width + sigma``."""
        return float(self.N * self.problem.row_norms_sq().max() / self.width + self.sigma)

    def total_smoothness(self) -> float:
        """Smoothness of ``F`` itself: ``lambda_max(gram) / width + sigma``."""
        lam = np.linalg.eigvalsh(self.problem.gram())[-1]
        return float(lam / self.width + self.sigma)

    def smoothing_gap_bound(self) -> float:
        """``N * width / 2``: the largest gap between the l1 and Huber sums."""
        return 0.5 * self.N * self.width

    def lower_bound(self, x) -> float:
        """``F(x) - ||grad F(x)||^2 / (2 sigma)``, a lower bound on ``min F``."""
        if self.sigma <= 0:
            return -math.inf
        v, g = self.value_grad(x)
        return v - float(g @ g) / (2.0 * self.sigma)
