"""Smoothing homotopy: halve the Huber width and the proximal weight each stage."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..linalg import check_vector
from ..preconditioner import PreconditionedProblem
from .katyusha import MAX_EPOCHS, katyusha_quarter
from .smoothing import SmoothedObjective


@dataclass
class HomotopySchedule:
    """Stage parameters from the Lipschitz bound ``G``, gap bound ``Delta`` and ``Theta``.

    ``Theta`` bounds ``||x0 - x*||^2``. Stage ``t`` smooths with
    ``beta_t = beta0 2^-t`` (objective-level smoothness ``L_t = 1 / beta_t``)
    and adds ``sigma_t / 2 ||x - x0||^2`` with ``sigma_t = sigma0 2^-t``. For
    components of the counted objective this is a Huber width of
    ``beta_t G^2 / N`` in residual units.
    """

    G: float
    Delta: float
    Theta: float
    eps_abs: float
    N: int
    beta0: float = field(init=False)
    sigma0: float = field(init=False)
    T_stages: int = field(init=False)

    def __post_init__(self):
        if not (self.G > 0 and self.Delta > 0 and self.Theta > 0 and self.eps_abs > 0):
            raise ValueError("G, Delta, Theta and eps_abs must be positive")
        self.beta0 = self.Delta / self.G**2
        self.sigma0 = self.Delta / self.Theta
        self.T_stages = max(0, int(math.ceil(math.log2(self.Delta / self.eps_abs))))

    def beta(self, t: int) -> float:
        return self.beta0 * 2.0**-t

    def L(self, t: int) -> float:
        return 2.0**t / self.beta0

    def sigma(self, t: int) -> float:
        return self.sigma0 * 2.0**-t

    def width(self, t: int) -> float:
        return self.beta(t) * self.G**2 / self.N

    def stages(self) -> list[dict]:
        return [{"t": t, "beta": self.beta(t), "L": self.L(t), "sigma": self.sigma(t),
                 "width": self.width(t)} for t in range(self.T_stages)]

    def as_dict(self) -> dict:
        return {"G": self.G, "Delta": self.Delta, "Theta": self.Theta, "eps_abs": self.eps_abs,
                "beta0": self.beta0, "sigma0": self.sigma0, "T_stages": self.T_stages}


@dataclass
class HomotopyResult:
    x: np.ndarray
    objective: float
    stages: list[dict]
    epochs: int
    grad_evals: int
    converged: bool


def homotopy_solve(P: PreconditionedProblem, x0, sched: HomotopySchedule, seed=None,
                   max_epochs: int = MAX_EPOCHS) -> HomotopyResult:
    """Warm-started Katyusha over the stages of ``sched``, prox centred at ``x0``.

    Returns the stage output with the smallest unsmoothed objective (``x0``
    included), so adding stages never makes the answer worse.
    """
    x0 = check_vector(x0, P.d, "x0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = x0.copy()
    best_x, best_f = x0.copy(), P.objective(x0)
    evals = P.n_unique
    epochs = 0
    converged = True
    stages = []
    for t in range(sched.T_stages):
        S = SmoothedObjective(P, sched.width(t), x0, sched.sigma(t))
        res = katyusha_quarter(S, x, rng, max_epochs=max_epochs)
        x = res.x
        f_true = P.objective(x)
        f_smooth = S.smooth_part(x)[0]
        gap = f_true - f_smooth
        slack = 1e-9 * (1.0 + abs(f_true))
        if not (-slack <= gap <= S.smoothing_gap_bound() + slack):
            raise RuntimeError(f"Huber sandwich violated at stage {t}: gap {gap:.3e}")
        evals += res.grad_evals + P.n_unique
        epochs += res.epochs
        converged &= res.converged
        stages.append({"t": t, "width": S.width, "sigma": S.sigma, "epochs": res.epochs,
                       "converged": res.converged, "smoothed": res.value, "objective": f_true})
        if f_true < best_f:
            best_x, best_f = x.copy(), f_true
    return HomotopyResult(best_x, best_f, stages, epochs, evals, converged)
