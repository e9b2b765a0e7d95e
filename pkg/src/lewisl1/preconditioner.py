"""Row sampling (Lewis or uniform), duplicate-row compression and rotation.

A preconditioned problem is stored over *unique* sampled rows. Row ``j``
appears ``counts[j]`` times in the conceptual ``N``-row matrix, so the
preconditioned objective is ``sum_j counts[j] * |rows[j] @ x - b[j]|``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, NotNearIsotropicError, RankDeficiencyError
from .linalg import (
    as_sparse_rows,
    check_matrix,
    check_vector,
    gram,
    inv_factor,
    is_sparse,
    row_norms_sq,
    symmetrize,
)
from .weights import WeightVector, lewis_weights, sampling_values

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 3
MODES = ("lewis", "uniform")
# near-isotropy thresholds for the uniform path
MAX_GRAM_COND = 100.0
MAX_ROW_RATIO = 100.0


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass
class CountedSample:
    """With-replacement row sample stored as (unique row, count, scale)."""

    rows: np.ndarray
    counts: np.ndarray
    scales: np.ndarray
    n_source: int

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.scales = np.asarray(self.scales, dtype=np.float64)
        if not (self.rows.shape == self.counts.shape == self.scales.shape):
            raise ValueError("rows, counts and scales must have equal length")
        if self.rows.size and (self.rows.min() < 0 or self.rows.max() >= self.n_source):
            raise ValueError("sampled row index out of range")
        if np.any(self.counts < 1):
            raise ValueError("counts must be positive")

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    @property
    def n_unique(self) -> int:
        return int(self.rows.size)


def multinomial_cascade(q: np.ndarray, total: int, rng: np.random.Generator) -> np.ndarray:
    """Counts of ``total`` i.i.d. draws from ``q`` via sequential binomials.

    Draw ``k_i ~ Binomial(remaining, q_i / mass_left)`` row by row; the last
    positive-mass row takes whatever is left so the counts sum exactly.
    """
    counts = np.zeros(q.shape[0], dtype=np.int64)
    remaining = int(total)
    mass_left = 1.0
    last = int(np.flatnonzero(q > 0)[-1])
    for i in range(last):
        if remaining == 0:
            break
        qi = q[i]
        if qi <= 0.0:
            continue
        prob = min(1.0, qi / mass_left) if mass_left > 0 else 1.0
        k = int(rng.binomial(remaining, prob))
        counts[i] = k
        remaining -= k
        mass_left -= qi
    counts[last] += remaining
    return counts


def sample_counts(p, N_target: int, seed=None) -> CountedSample:
    """Sample ``N_target`` rows i.i.d. with probability ``p_i / sum(p)``.

    Each sampled copy of row ``i`` is scaled by ``1 / (N_target * q_i)`` with
    ``q = p / sum(p)``; that is ``1/p_i`` whenever ``N_target = sum(p)`` and
    keeps ``sum_copies scale * |a_i x|`` unbiased for ``||A x||_1``
    otherwise.
    """
    values = p.values if isinstance(p, WeightVector) else np.asarray(p, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise DimensionError("sampling values must be a non-empty vector")
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise ValueError("sampling values must be positive and finite")
    if N_target < 1:
        raise ValueError("N_target must be >= 1")
    q = values / values.sum()
    counts = multinomial_cascade(q, int(N_target), _rng(seed))
    keep = np.flatnonzero(counts)
    return CountedSample(keep, counts[keep], 1.0 / (N_target * q[keep]), values.size)


def sampled_rows(sample: CountedSample, M):
    """Per-copy scaled rows ``scale_j * M[rows_j]`` (one row per unique index)."""
    if is_sparse(M):
        S = as_sparse_rows(M)[sample.rows]
        return sp.csr_matrix(sp.diags(sample.scales) @ S)
    M = np.asarray(M, dtype=np.float64)
    return M[sample.rows] * sample.scales[:, None]


def expand_rows(sample: CountedSample, M):
    """The explicit ``N``-row sampled matrix, each copy repeated. Test oracle."""
    R = sampled_rows(sample, M)
    rep = np.repeat(np.arange(sample.n_unique), sample.counts)
    return R[rep]


def weighted_gram(R, counts) -> np.ndarray:
    """``sum_j counts_j * R_j^T R_j``: the Gram of the expanded matrix."""
    counts = np.asarray(counts, dtype=np.float64)
    if is_sparse(R):
        G = (R.T @ sp.diags(counts) @ R).toarray()
    else:
        R = np.asarray(R, dtype=np.float64)
        G = (R.T * counts) @ R
    return symmetrize(np.asarray(G, dtype=np.float64))


def compress_gram(sample: CountedSample, A) -> np.ndarray:
    """Gram of the sampled matrix from unique rows only (weight count * scale^2)."""
    A = check_matrix(A)
    if A.shape[0] != sample.n_source:
        raise DimensionError("sample does not index this matrix")
    return weighted_gram(sampled_rows(sample, A), sample.counts)


@dataclass
class PreconditionConfig:
    eps: float = 0.25
    c_sample: float = 4.0
    seed: int | None = 0
    mode: str = "lewis"
    max_lewis_iters: int = 30
    lewis_tol: float = 1e-4

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise ValueError("eps must be in (0, 1]")
        if self.c_sample <= 0:
            raise ValueError("c_sample must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


@dataclass
class PreconditionedProblem:
    """Counted-row preconditioned problem.

    ``rows`` holds one copy of each unique row of ``A~ U`` (Lewis mode) or of
    the rescaled ``A~`` (uniform mode, where ``U = I`` and sparsity is kept).
    ``objective_scale`` is the factor relating the preconditioned objective to
    the original one (1 for Lewis sampling, ``sqrt(N/n)`` for uniform).
    """

    rows: object
    b: np.ndarray
    counts: np.ndarray
    U: np.ndarray
    mode: str
    n_original: int
    source_rows: np.ndarray
    eps_embed: float = 0.0
    objective_scale: float = 1.0
    seed: int | None = None
    attempts: int = 1
    weights: WeightVector | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.rows.shape[0] != self.b.shape[0] or self.b.shape[0] != self.counts.shape[0]:
            raise DimensionError("rows, b and counts disagree in length")
        self._csr = None

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    @property
    def d(self) -> int:
        return int(self.rows.shape[1])

    @property
    def n_unique(self) -> int:
        return int(self.rows.shape[0])

    def csr_arrays(self):
        """``(indptr, indices, data)`` of the stored rows, for the compiled kernels."""
        if self._csr is None:
            S = as_sparse_rows(self.rows) if is_sparse(self.rows) else sp.csr_matrix(self.rows)
            S.sort_indices()
            self._csr = (S.indptr.astype(np.int64), S.indices.astype(np.int64),
                         S.data.astype(np.float64))
        return self._csr

    def residual(self, x) -> np.ndarray:
        x = check_vector(x, self.d, "x")
        return np.asarray(self.rows @ x, dtype=np.float64).ravel() - self.b

    def objective(self, x) -> float:
        """``||A~ U x - b~||_1`` over the ``N`` conceptual rows."""
        return float(np.dot(self.counts, np.abs(self.residual(x))))

    def l2_residual(self, x) -> float:
        r = self.residual(x)
        return float(math.sqrt(np.dot(self.counts, r * r)))

    def gram(self) -> np.ndarray:
        return weighted_gram(self.rows, self.counts)

    def tmatvec(self, v) -> np.ndarray:
        """``(A~U)^T v`` for a per-copy vector ``v`` (length ``n_unique``)."""
        v = check_vector(v, self.n_unique, "v")
        return np.asarray(self.rows.T @ (self.counts * v), dtype=np.float64).ravel()

    def row_norms_sq(self) -> np.ndarray:
        return row_norms_sq(self.rows)

    @property
    def irb_row_bound(self) -> float:
        """``max_j ||row_j||^2 * N / d``: the constant in ``||row||^2 <= C d/N``."""
        return float(self.row_norms_sq().max() * self.N / self.d)

    def isotropy_error(self) -> float:
        return float(np.linalg.norm(self.gram() - np.eye(self.d)))


def _augmented(A, b):
    A = check_matrix(A)
    b = check_vector(b, A.shape[0], "b")
    if is_sparse(A):
        return A, b, sp.hstack([as_sparse_rows(A), sp.csr_matrix(b[:, None])], format="csr")
    return A, b, np.column_stack([A, b])


def _split_rows(R, d):
    if is_sparse(R):
        R = sp.csr_matrix(R)
        return as_sparse_rows(R[:, :d]), np.asarray(R[:, d].toarray()).ravel()
    return R[:, :d], R[:, d].copy()


def _record(P: PreconditionedProblem, **extra) -> PreconditionedProblem:
    G = P.gram()
    lam = np.linalg.eigvalsh(G)
    P.diagnostics.update(
        gram_min_eig=float(lam[0]),
        gram_max_eig=float(lam[-1]),
        gram_condition=float(lam[-1] / lam[0]) if lam[0] > 0 else math.inf,
        isotropy_error=float(np.linalg.norm(G - np.eye(P.d))),
        irb_row_bound=P.irb_row_bound,
        N=P.N,
        n_unique=P.n_unique,
        **extra,
    )
    return P


def precondition_lewis(A, b, cfg: PreconditionConfig | None = None) -> PreconditionedProblem:
    """Lewis-weight sample ``[A b]`` and rotate the sampled ``A~`` into isotropic position.

    The returned rows satisfy ``(A~U)^T (A~U) = I`` up to round-off. The row
    bound is recorded as ``irb_row_bound``.
    """
    cfg = cfg or PreconditionConfig()
    A, b, M = _augmented(A, b)
    n, d = A.shape
    if n < d:
        raise DimensionError(f"need n >= d, got {n} x {d}")
    try:
        w = lewis_weights(M, cfg.max_lewis_iters, cfg.lewis_tol, strict=False)
    except RankDeficiencyError:
        # b in the span of A: [A b] and A share a column space, hence Lewis weights
        w = lewis_weights(A, cfg.max_lewis_iters, cfg.lewis_tol, strict=False)
    p = sampling_values(w, n, cfg.eps, cfg.c_sample)
    N_target = int(math.ceil(p.total - 1e-9))
    rng = _rng(cfg.seed)
    last_error = None
    for attempt in range(1, MAX_ATTEMPTS + 1):
        sample = sample_counts(p, N_target, rng)
        At, bt = _split_rows(sampled_rows(sample, M), d)
        if is_sparse(At):
            At = At.toarray()
        try:
            U = inv_factor(weighted_gram(At, sample.counts))
        except RankDeficiencyError as exc:
            logger.warning("rank loss after sampling (attempt %d): %s", attempt, exc)
            last_error = exc
            continue
        P = PreconditionedProblem(
            rows=At @ U, b=bt, counts=sample.counts, U=U, mode="lewis", n_original=n,
            source_rows=sample.rows, eps_embed=cfg.eps, objective_scale=1.0,
            seed=cfg.seed, attempts=attempt, weights=w,
        )
        return _record(P, h=p.h, lewis_iterations=w.iterations, lewis_residual=w.residual)
    raise RankDeficiencyError(f"sampled matrix lost rank in {MAX_ATTEMPTS} attempts: {last_error}")


def check_near_isotropic(A, b) -> dict:
    """Measure the uniform-path preconditions on ``[A b]``; raise if violated."""
    _, _, M = _augmented(A, b)
    lam = np.linalg.eigvalsh(gram(M))
    cond = float(lam[-1] / lam[0]) if lam[0] > 0 else math.inf
    rn = row_norms_sq(M)
    ratio = float(rn.max() / rn.min()) if rn.min() > 0 else math.inf
    stats = {"input_gram_condition": cond, "input_row_norm_ratio": ratio}
    if cond > MAX_GRAM_COND or ratio > MAX_ROW_RATIO:
        raise NotNearIsotropicError(
            f"input not near-isotropic: Gram condition {cond:.3g} (limit {MAX_GRAM_COND:g}), "
            f"row-norm ratio {ratio:.3g} (limit {MAX_ROW_RATIO:g})")
    return stats


def uniform_sample_size(n: int, d: int, eps: float, c_sample: float) -> int:
    return int(math.ceil(c_sample * d * eps**-2 * math.log(max(n, 3))))


def precondition_uniform(A, b, cfg: PreconditionConfig | None = None,
                         N: int | None = None) -> PreconditionedProblem:
    """Uniformly sample rows of a near-isotropic ``[A b]``; no rotation, no Lewis weights.

    Every copy is scaled by ``sqrt(n/N)`` (the ``n/N`` unbiasing factor times
    the ``sqrt(N/n)`` renormalisation), so the sampled Gram is close to the
    original one. Sparse inputs stay sparse. ``N`` overrides the default
    sample size ``ceil(c_sample * d * eps^-2 * ln n)``.
    """
    cfg = cfg or PreconditionConfig(mode="uniform")
    stats = check_near_isotropic(A, b)
    A, b, M = _augmented(A, b)
    n, d = A.shape
    if N is None:
        N = uniform_sample_size(n, d, cfg.eps, cfg.c_sample)
    rng = _rng(cfg.seed)
    p = np.full(n, 1.0 / n)
    scale = math.sqrt(n / N)
    last_error = None
    for attempt in range(1, MAX_ATTEMPTS + 1):
        sample = sample_counts(p, N, rng)
        sample.scales = np.full(sample.n_unique, scale)
        At, bt = _split_rows(sampled_rows(sample, M), d)
        G = weighted_gram(At, sample.counts)
        try:
            inv_factor(G)
        except RankDeficiencyError as exc:
            last_error = exc
            continue
        P = PreconditionedProblem(
            rows=At, b=bt, counts=sample.counts, U=np.eye(d), mode="uniform", n_original=n,
            source_rows=sample.rows, eps_embed=cfg.eps, objective_scale=math.sqrt(N / n),
            seed=cfg.seed, attempts=attempt,
        )
        return _record(P, **stats)
    raise RankDeficiencyError(f"sampled matrix lost rank in {MAX_ATTEMPTS} attempts: {last_error}")


def rotate_only(A, b) -> PreconditionedProblem:
    """Isotropic rotation of the full problem with every row kept once (``N = n``)."""
    A, b, _ = _augmented(A, b)
    Ad = A.toarray() if is_sparse(A) else A
    n, d = Ad.shape
    U = inv_factor(gram(Ad))
    P = PreconditionedProblem(
        rows=Ad @ U, b=b.copy(), counts=np.ones(n, dtype=np.int64), U=U, mode="lewis",
        n_original=n, source_rows=np.arange(n),
    )
    return _record(P)


def precondition(A, b, cfg: PreconditionConfig) -> PreconditionedProblem:
    if cfg.mode == "uniform":
        return precondition_uniform(A, b, cfg)
    return precondition_lewis(A, b, cfg)


def lift_solution(P: PreconditionedProblem, x_pre) -> np.ndarray:
    """Map a preconditioned iterate back to original coordinates (``U x``)."""
    x_pre = check_vector(x_pre, P.d, "x_pre")
    if P.mode == "uniform":
        return x_pre.copy()
    return P.U @ x_pre


def embedding_distortion(P: PreconditionedProblem, A, b, Y) -> np.ndarray:
    """``||[A~ b~] y||_1 / ||[A b] y||_1 - 1`` for each column-stacked ``y`` in ``Y``.

    ``Y`` has shape ``(d+1, k)``; the last coordinate multiplies ``b``. The
    sampled side is evaluated in sampled (pre-rotation) coordinates, i.e.
    ``A~ = rows U^{-1}``, with the objective scale divided out.
    """
    A, b, M = _augmented(A, b)
    d = A.shape[1]
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != d + 1:
        raise DimensionError("directions must have d+1 coordinates")
    Yx = np.linalg.solve(P.U, Y[:d]) if P.mode != "uniform" else Y[:d]
    sampled = np.asarray(P.rows @ Yx) + P.b[:, None] * Y[d]
    lhs = P.counts @ np.abs(sampled) / P.objective_scale
    rhs = np.abs(np.asarray(M @ Y)).sum(axis=0)
    return lhs / rhs - 1.0
