"""End-to-end solver: precondition, warm start, guess the optimum, descend, lift."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError
from ..initializer import (
    bracket_for,
    init_cg_problem,
    init_isotropic,
    objective_bracket,
)
from ..linalg import check_matrix, check_vector, nnz
from ..oracle import MAX_D, MAX_N, exact_l1_small, exact_l2, weighted_median
from ..preconditioner import (
    MODES,
    PreconditionConfig,
    PreconditionedProblem,
    lift_solution,
    precondition,
)
from .homotopy import HomotopySchedule, homotopy_solve
from .katyusha import MAX_EPOCHS
from .sgd import SgdConfig, sgd_solve

METHODS = ("sgd", "accelerated")


@dataclass
class SolveConfig:
    """Knobs of :func:`solve_l1`.

    ``eps_embed`` defaults to the target ``eps``. ``sgd_T`` overrides the
    step count ``(R L / eps_abs)^2``, which is otherwise multiplied by
    ``sgd_T_scale`` and capped at ``sgd_T_max``. ``eps_cg`` (uniform mode
    only) defaults to ``sqrt(d / N)``.
    """

    mode: str = "lewis"
    c_sample: float = 4.0
    seed: int | None = 0
    eps_embed: float | None = None
    max_lewis_iters: int = 30
    lewis_tol: float = 1e-4
    sgd_T: int | None = None
    sgd_T_scale: float = 1.0
    sgd_T_max: int = 2_000_000
    max_epochs: int = MAX_EPOCHS
    eps_cg: float | None = None
    oracle: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.c_sample <= 0:
            raise ConfigError("c_sample must be positive")
        if self.sgd_T is not None and self.sgd_T < 1:
            raise ConfigError("sgd_T must be >= 1")
        if self.sgd_T_scale <= 0 or self.sgd_T_max < 1 or self.max_epochs < 1:
            raise ConfigError("sgd_T_scale, sgd_T_max and max_epochs must be positive")


@dataclass
class SolveReport:
    x_hat: np.ndarray
    objective_l1: float
    preconditioned_objective: float
    method: str
    mode: str
    eps: float
    seed: int | None
    n: int
    d: int
    nnz: int
    N: int
    n_unique: int
    exact_fit: bool
    stage_counts: list[int]
    epochs: int
    iterations: int
    grad_evals: int
    wall_time: float
    config: dict
    candidates: list[dict] = field(default_factory=list)
    best_guess: int | None = None
    bracket: dict = field(default_factory=dict)
    oracle_f_star: float | None = None
    oracle_gap: float | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["x_hat"] = [float(v) for v in self.x_hat]
        return out


def _l1(A, b, x) -> float:
    return float(np.abs(np.asarray(A @ x).ravel() - b).sum())


def _guess_radius(P: PreconditionedProblem, guess: float, row_max: float, lam_min: float,
                  eps_cg: float) -> float:
    # ||x0 - x*|| <= ||(A^T A)^-1|| max_j ||row_j|| f*, plus the CG error eps_cg f2 <= eps_cg f*
    return guess * (row_max / lam_min + eps_cg)


def solve_l1(A, b, eps: float = 0.1, method: str = "accelerated",
             cfg: SolveConfig | None = None) -> SolveReport:
    """Approximately minimise ``||A x - b||_1`` to relative accuracy ``eps``.

    Pipeline: exact-fit check, row sampling and rotation (``cfg.mode``),
    least-squares warm start, then one descent run per optimum guess
    ``f2 2^i``. The candidate with the smallest preconditioned objective is
    lifted back and its objective recomputed on the original ``(A, b)``.

    Parameters
    ----------
    A : ndarray or sparse matrix, shape (n, d)
        Full column rank.
    b : ndarray, shape (n,)
    eps : float
        Target relative error in ``(0, 1/2]``.
    method : {"accelerated", "sgd"}
    cfg : SolveConfig, optional
    """
    t_start = time.perf_counter()
    cfg = cfg or SolveConfig()
    if not 0 < eps <= 0.5:
        raise ConfigError(f"eps must be in (0, 1/2], got {eps}")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    A = check_matrix(A)
    n, d = A.shape
    b = check_vector(b, n, "b")
    echo = {"method": method, "eps": eps, **asdict(cfg)}
    base = dict(method=method, mode=cfg.mode, eps=eps, seed=cfg.seed, n=n, d=d, nnz=nnz(A),
                config=echo)

    x_l2 = exact_l2(A, b)
    br0 = objective_bracket(A, b, x_l2)
    if br0.exact_fit:
        f = _l1(A, b, x_l2)
        return _finish(SolveReport(x_l2, f, f, N=n, n_unique=n, exact_fit=True, stage_counts=[],
                                   epochs=0, iterations=0, grad_evals=0, wall_time=0.0,
                                   bracket=asdict(br0), **base), A, b, cfg, t_start)

    eps_embed = eps if cfg.eps_embed is None else cfg.eps_embed
    P = precondition(A, b, PreconditionConfig(eps=eps_embed, c_sample=cfg.c_sample,
                                              seed=cfg.seed, mode=cfg.mode,
                                              max_lewis_iters=cfg.max_lewis_iters,
                                              lewis_tol=cfg.lewis_tol))
    if P.mode == "lewis":
        x0, eps_cg, lam_min = init_isotropic(P), 0.0, 1.0
    else:
        eps_cg = cfg.eps_cg if cfg.eps_cg is not None else math.sqrt(d / P.N)
        x0 = init_cg_problem(P, eps_cg)
        lam_min = float(P.diagnostics["gram_min_eig"])
    br = bracket_for(P, x0)
    F_x0 = P.objective(x0)
    row_max = math.sqrt(float(P.row_norms_sq().max()))
    G = P.N * row_max

    children = np.random.SeedSequence(None if cfg.seed is None else [cfg.seed, 1]).spawn(
        max(1, len(br.guesses)))
    candidates = []
    best = None
    total_evals = 0
    for i, guess in enumerate(br.guesses):
        rng = np.random.default_rng(children[i])
        R = _guess_radius(P, guess, row_max, lam_min, eps_cg)
        eps_abs = eps * guess
        rec = {"guess": guess, "R": R}
        if method == "sgd":
            T = cfg.sgd_T
            if T is None:
                T = int(min(cfg.sgd_T_max, math.ceil(cfg.sgd_T_scale * (R * G / eps_abs) ** 2)))
            res = sgd_solve(P, x0, SgdConfig(R, G, T), rng)
            x_c, evals = res.x, res.grad_evals
            rec.update(T=T, bound=res.bound, max_dist=res.max_dist, stages=0, epochs=0)
        else:
            Delta = min(G * R, F_x0 - br.f2)
            if Delta <= eps_abs:
                x_c, evals = x0.copy(), 0
                rec.update(Delta=Delta, stages=0, epochs=0, converged=True, schedule=None)
            else:
                sched = HomotopySchedule(G, Delta, R * R, eps_abs, P.N)
                res = homotopy_solve(P, x0, sched, rng, max_epochs=cfg.max_epochs)
                x_c, evals = res.x, res.grad_evals
                rec.update(Delta=Delta, stages=sched.T_stages, epochs=res.epochs,
                           converged=res.converged, schedule=sched.as_dict())
        f_c = P.objective(x_c)
        total_evals += evals
        rec.update(objective=f_c, grad_evals=evals)
        candidates.append(rec)
        if best is None or f_c < best[1]:
            best = (i, f_c, x_c)

    i_best, f_best, x_best = best
    x_hat = lift_solution(P, x_best)
    report = SolveReport(
        x_hat, _l1(A, b, x_hat), f_best, N=P.N, n_unique=P.n_unique, exact_fit=False,
        stage_counts=[c["stages"] for c in candidates],
        epochs=sum(c["epochs"] for c in candidates),
        iterations=sum(c.get("T", 0) for c in candidates), grad_evals=total_evals,
        wall_time=0.0, candidates=candidates, best_guess=i_best, bracket=asdict(br), **base)
    return _finish(report, A, b, cfg, t_start)


def _finish(report: SolveReport, A, b, cfg: SolveConfig, t_start: float) -> SolveReport:
    if cfg.oracle and report.n <= MAX_N and report.d <= MAX_D:
        if report.d == 1:
            dense = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
            ref = weighted_median(dense[:, 0], b)
        else:
            ref = exact_l1_small(A, b)
        report.oracle_f_star = ref.f_star
        if ref.f_star > 0:
            report.oracle_gap = (report.objective_l1 - ref.f_star) / ref.f_star
        else:
            report.oracle_gap = 0.0 if report.objective_l1 <= 1e-9 else math.inf
    report.wall_time = time.perf_counter() - t_start
    return report
