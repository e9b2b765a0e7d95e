"""Katyusha (accelerated SVRG with negative momentum) run to a quarter of the initial gap."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..linalg import check_vector
from ._kernels import katyusha_epoch
from .sgd import draw_rows
from .smoothing import SmoothedObjective

MAX_EPOCHS = 64
TAU2 = 0.5


@dataclass
class KatyushaResult:
    x: np.ndarray
    value: float
    initial_value: float
    lower_bound: float
    epochs: int
    converged: bool
    grad_evals: int
    history: list[float] = field(default_factory=list)
    params: dict = field(default_factory=dict)


def katyusha_params(S: SmoothedObjective, m: int | None = None) -> dict:
    """Epoch length, momenta and step for ``S``: ``m = N``, ``tau2 = 1/2``."""
    if not S.sigma > 0:
        raise ValueError("Katyusha needs sigma > 0")
    m = S.N if m is None else int(m)
    L = S.smoothness()
    tau1 = min(math.sqrt(m * S.sigma / (3.0 * L)), 0.5)
    return {"m": m, "L": L, "sigma": S.sigma, "tau1": tau1, "tau2": TAU2,
            "alpha": 1.0 / (3.0 * tau1 * L)}


def katyusha_quarter(S: SmoothedObjective, x_start, seed=None, max_epochs: int = MAX_EPOCHS,
                     m: int | None = None) -> KatyushaResult:
    """Run Katyusha epochs until the gap surrogate falls to a quarter.

    The surrogate is ``F(x) - LB`` where ``LB`` is the running maximum of
    ``F(x~) - ||grad F(x~)||^2 / (2 sigma)`` over snapshots. Stops once
    ``F(best) - LB <= (F(x_start) - LB) / 4`` or after ``max_epochs``; the
    best snapshot seen is returned either way, so the value never exceeds
    ``F(x_start)``.

    Component-gradient evaluations are counted as one per stored row for each
    full gradient (counted rows are combined) plus two per inner step.
    """
    P = S.problem
    x_start = check_vector(x_start, P.d, "x_start")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    prm = katyusha_params(S, m)
    indptr, indices, data = P.csr_arrays()

    F0, g0 = S.value_grad(x_start)
    lb = F0 - float(g0 @ g0) / (2.0 * S.sigma)
    best_x, best_F = x_start.copy(), F0
    history = [F0]
    evals = P.n_unique
    if F0 - lb <= 0.0:
        return KatyushaResult(best_x, best_F, F0, lb, 0, True, evals, history, prm)

    x_tilde = x_start.copy()
    z = x_start.copy()
    y = x_start.copy()
    mu = g0 - S.sigma * (x_start - S.center)
    slope = S.slopes(x_start)
    converged = False
    epochs = 0
    for epochs in range(1, max_epochs + 1):
        idx = draw_rows(P, prm["m"], rng)
        z, y, x_tilde = katyusha_epoch(indptr, indices, data, P.b, float(P.N), float(S.width),
                                       float(S.sigma), S.center, prm["tau1"], prm["tau2"],
                                       prm["alpha"], x_tilde, slope, mu, z, y, idx)
        evals += 2 * prm["m"] + P.n_unique
        F, g = S.value_grad(x_tilde)
        history.append(F)
        lb = max(lb, F - float(g @ g) / (2.0 * S.sigma))
        if F < best_F:
            best_x, best_F = x_tilde.copy(), F
        if best_F - lb <= 0.25 * (F0 - lb):
            converged = True
            break
        mu = g - S.sigma * (x_tilde - S.center)
        slope = S.slopes(x_tilde)
    return KatyushaResult(best_x, best_F, F0, lb, epochs, converged, evals, history, prm)
