"""Projected stochastic subgradient descent on the counted preconditioned objective."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..linalg import check_vector
from ..preconditioner import PreconditionedProblem
from ._kernels import sgd_run


@dataclass
class SgdConfig:
    """Radius ``R`` of the feasible ball, subgradient bound ``L_grad``, step count ``T``."""

    R: float
    L_grad: float
    T: int
    seed: int | None = 0
    averaging: str = "uniform"

    def __post_init__(self):
        if not (self.R > 0 and self.L_grad > 0):
            raise ValueError("R and L_grad must be positive")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.averaging != "uniform":
            raise ValueError("only uniform averaging is supported")

    @property
    def eta(self) -> float:
        return self.R / (self.L_grad * math.sqrt(self.T))


@dataclass
class SgdResult:
    x: np.ndarray
    x_last: np.ndarray
    iterations: int
    grad_evals: int
    max_dist: float
    bound: float


def draw_rows(P: PreconditionedProblem, size: int, rng) -> np.ndarray:
    """Unique-row indices drawn with probability ``counts / N``."""
    cdf = np.cumsum(P.counts, dtype=np.float64)
    u = rng.random(size) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), P.n_unique - 1).astype(np.int64)


def sgd_solve(P: PreconditionedProblem, x0, cfg: SgdConfig, rng=None) -> SgdResult:
    """``T`` steps of projected SGD onto ``B(x0, R)`` with step ``R / (L sqrt(T))``.

    The stochastic subgradient at row ``j`` is ``N sign(r_j) row_j`` with
    ``sign(0) = 0``. Returns the uniform average of the iterates. ``bound``
    is the ``R L / sqrt(T)`` guarantee on the expected gap.
    """
    x0 = check_vector(x0, P.d, "x0")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    indptr, indices, data = P.csr_arrays()
    idx = draw_rows(P, cfg.T, rng)
    x_avg, x_last, max_dist = sgd_run(indptr, indices, data, P.b, float(P.N), x0.copy(),
                                      float(cfg.R), float(cfg.eta), idx)
    return SgdResult(x_avg, x_last, cfg.T, cfg.T, float(max_dist),
                     cfg.R * cfg.L_grad / math.sqrt(cfg.T))
