"""Deterministic synthetic l1 regression instances."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, RankDeficiencyError
from .linalg import (
    check_matrix,
    check_vector,
    gram,
    is_sparse,
    max_row_nnz,
    nnz,
    row_norms_sq,
)

KINDS = (
    "gaussian",
    "heavy-tail-outliers",
    "near-isotropic-equal-rows",
    "consistent",
    "median-1d",
    "incidence-like",
)
MAX_RETRIES = 10


@dataclass
class ProblemInstance:
    A: object
    b: np.ndarray
    x_true: np.ndarray | None = None
    kind: str = "custom"
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = check_matrix(self.A)
        self.b = check_vector(self.b, self.A.shape[0], "b")

    @property
    def n(self) -> int:
        return int(self.A.shape[0])

    @property
    def d(self) -> int:
        return int(self.A.shape[1])

    @property
    def nnz(self) -> int:
        return nnz(self.A)

    @property
    def max_row_nnz(self) -> int:
        return max_row_nnz(self.A)

    def objective(self, x) -> float:
        x = check_vector(x, self.d, "x")
        return float(np.abs(np.asarray(self.A @ x).ravel() - self.b).sum())


@dataclass
class GenSpec:
    kind: str
    n: int
    d: int
    seed: int = 0
    noise: float = 1.0
    outlier_frac: float = 0.04
    outlier_scale: float = 100.0
    df: float = 1.0
    perturb: float = 0.25

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown instance kind {self.kind!r}; choose from {KINDS}")
        if self.d < 1 or self.n < self.d:
            raise DimensionError(f"need n >= d >= 1, got n={self.n}, d={self.d}")
        if self.kind == "median-1d" and self.d != 1:
            raise DimensionError("median-1d instances have d = 1")


def _full_rank(A) -> bool:
    G = gram(A)
    lam = np.linalg.eigvalsh(G)
    return lam[0] > 1e-10 * max(lam[-1], 1e-300)


def _gaussian(spec, rng):
    A = rng.standard_normal((spec.n, spec.d))
    z = rng.standard_normal(spec.d)
    b = A @ z + spec.noise * rng.laplace(size=spec.n)
    return A, b, z


def _heavy_tail(spec, rng):
    A = rng.standard_t(spec.df, size=(spec.n, spec.d))
    k = max(1, int(round(spec.outlier_frac * spec.n)))
    out = rng.choice(spec.n, size=k, replace=False)
    A[out] *= spec.outlier_scale
    z = rng.standard_normal(spec.d)
    b = A @ z + spec.noise * rng.standard_t(spec.df, size=spec.n)
    return A, b, z


def _near_isotropic(spec, rng):
    """Random rotation of an equal-row-norm sign frame, rows jittered by ``perturb``."""
    n, m = spec.n, spec.d + 1
    F = rng.choice([-1.0, 1.0], size=(n, m)) / np.sqrt(n)
    Q, R = np.linalg.qr(rng.standard_normal((m, m)))
    Q *= np.sign(np.diag(R))
    jitter = 1.0 + spec.perturb * rng.uniform(-1.0, 1.0, size=n)
    M = (F @ Q) * jitter[:, None]
    lam = np.linalg.eigvalsh(M.T @ M)
    rn = row_norms_sq(M)
    if lam[0] <= 0 or lam[-1] / lam[0] > 100 or rn.max() / rn.min() > 100:
        return None
    return M[:, :-1], M[:, -1].copy(), None


def _consistent(spec, rng):
    A = rng.standard_normal((spec.n, spec.d))
    z = rng.standard_normal(spec.d)
    return A, A @ z, z


def _median(spec, rng):
    b = rng.standard_normal(spec.n) * spec.noise + rng.standard_normal()
    return np.ones((spec.n, 1)), b, None


def _incidence(spec, rng):
    """Weighted signed-difference rows on ``d`` free nodes plus a ground node ``d``.

    A spanning path from the ground node guarantees full column rank; edges to
    the ground node have a single nonzero, every other row has two.
    """
    n, d = spec.n, spec.d
    order = rng.permutation(d)
    edges = [(int(order[0]), d)] + [(int(order[i]), int(order[i - 1])) for i in range(1, d)]
    while len(edges) < n:
        i, j = rng.choice(d + 1, size=2, replace=False)
        edges.append((int(i), int(j)))
    edges = edges[:n]
    rng.shuffle(edges)
    rows, cols, vals = [], [], []
    weight = rng.uniform(0.5, 2.0, size=n)
    for r, (i, j) in enumerate(edges):
        for c, v in ((i, 1.0), (j, -1.0)):
            if c < d:
                rows.append(r)
                cols.append(c)
                vals.append(v * weight[r])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, d))
    A.sort_indices()
    z = rng.standard_normal(d)
    b = np.asarray(A @ z).ravel() + spec.noise * rng.laplace(size=n) * (rng.random(n) < 0.3)
    return A, b, z


_BUILDERS = {
    "gaussian": _gaussian,
    "heavy-tail-outliers": _heavy_tail,
    "near-isotropic-equal-rows": _near_isotropic,
    "consistent": _consistent,
    "median-1d": _median,
    "incidence-like": _incidence,
}


def generate(spec: GenSpec) -> ProblemInstance:
    """Build the instance described by ``spec``; identical specs give identical output."""
    rng = np.random.default_rng(spec.seed)
    for attempt in range(MAX_RETRIES):
        out = _BUILDERS[spec.kind](spec, rng)
        if out is None:
            continue
        A, b, z = out
        if _full_rank(A):
            meta = asdict(spec)
            meta["attempts"] = attempt + 1
            return ProblemInstance(A, b, z, spec.kind, spec.seed, meta)
    raise RankDeficiencyError(f"could not draw a valid {spec.kind} instance in {MAX_RETRIES} tries")


def is_sparse_instance(inst: ProblemInstance) -> bool:
    return is_sparse(inst.A)
