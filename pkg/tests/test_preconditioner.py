import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from lewisl1.errors import NotNearIsotropicError
from lewisl1.instances import GenSpec, generate
from lewisl1.linalg import gram
from lewisl1.oracle import exact_l1_small, exact_preconditioned
from lewisl1.preconditioner import (
    CountedSample,
    PreconditionConfig,
    PreconditionedProblem,
    compress_gram,
    embedding_distortion,
    expand_rows,
    lift_solution,
    precondition,
    precondition_lewis,
    precondition_uniform,
    rotate_only,
    sample_counts,
    sampled_rows,
    uniform_sample_size,
    weighted_gram,
)
from lewisl1.weights import leverage_scores, lewis_weights


def expanded(P):
    rows = P.rows.toarray() if sp.issparse(P.rows) else P.rows
    rep = np.repeat(np.arange(P.n_unique), P.counts)
    return rows[rep], P.b[rep]


def test_sample_counts_single_row():
    s = sample_counts(np.array([0.3]), 17, seed=1)
    assert s.counts.tolist() == [17] and s.N == 17 and s.n_unique == 1


def test_sample_counts_uniform_binomial_bounds():
    s = sample_counts(np.full(4, 1.0), 4000, seed=3)
    sigma = math.sqrt(4000 * 0.25 * 0.75)
    assert s.n_unique == 4
    assert np.all(np.abs(s.counts - 1000) <= 5 * sigma)


@given(st.integers(0, 2**31 - 1), st.integers(1, 60), st.integers(1, 5000))
def test_sample_counts_sum_exact(seed, n, N):
    p = np.random.default_rng(seed).random(n) + 1e-3
    s = sample_counts(p, N, seed)
    assert s.N == N
    assert s.n_unique <= n
    assert np.all(s.rows < n) and np.all(np.diff(s.rows) > 0)


def test_sample_counts_deterministic():
    p = np.arange(1.0, 11.0)
    a, b = sample_counts(p, 500, 7), sample_counts(p, 500, 7)
    np.testing.assert_array_equal(a.counts, b.counts)
    np.testing.assert_array_equal(a.rows, b.rows)


def test_sample_counts_scales():
    p = np.array([1.0, 3.0])
    s = sample_counts(p, 4, seed=0)
    np.testing.assert_allclose(s.scales, 1.0 / p[s.rows])


def test_compress_gram_counts_one(rng):
    A = rng.standard_normal((10, 3))
    s = CountedSample(np.array([1, 4, 7]), np.ones(3, dtype=int), np.array([2.0, 0.5, 1.0]), 10)
    np.testing.assert_allclose(compress_gram(s, A), gram(sampled_rows(s, A)), atol=1e-14)


def test_compress_gram_count_four():
    A = np.array([[1.0, 2.0], [3.0, -1.0]])
    s = CountedSample(np.array([0]), np.array([4]), np.array([1.0]), 2)
    np.testing.assert_allclose(compress_gram(s, A), gram(np.vstack([A[0]] * 4)))


@pytest.mark.parametrize("sparse", [False, True])
def test_compress_gram_matches_expansion(rng, sparse):
    A = rng.standard_normal((40, 5)) * (rng.random((40, 5)) < 0.7)
    A[np.arange(5), np.arange(5)] = 1.0
    M = sp.csr_matrix(A) if sparse else A
    s = sample_counts(rng.random(40) + 0.1, 300, rng)
    E = expand_rows(s, M)
    E = E.toarray() if sp.issparse(E) else E
    np.testing.assert_allclose(compress_gram(s, M), E.T @ E, atol=1e-10)


def test_lewis_identity_zero_rhs():
    d = 4
    P = precondition_lewis(np.eye(d), np.zeros(d), PreconditionConfig(eps=1.0, seed=2))
    np.testing.assert_allclose(P.weights.values, 1.0, atol=1e-10)
    rows = P.rows @ np.linalg.inv(P.U)
    # sampled rows are scaled standard basis vectors
    assert np.all(np.count_nonzero(np.abs(rows) > 1e-12, axis=1) == 1)
    assert P.isotropy_error() <= 1e-8


@pytest.fixture(scope="module")
def gaussian_2000():
    inst = generate(GenSpec("gaussian", 2000, 6, seed=11))
    return inst, precondition_lewis(inst.A, inst.b, PreconditionConfig(eps=0.25, seed=5))


def test_lewis_embedding_gaussian(gaussian_2000):
    inst, P = gaussian_2000
    Y = np.random.default_rng(0).standard_normal((7, 100))
    Y /= np.linalg.norm(Y, axis=0)
    ratio = 1.0 + embedding_distortion(P, inst.A, inst.b, Y)
    assert np.sum((ratio >= 1 / 1.25) & (ratio <= 1.25)) >= 99


def test_lewis_embedding_against_expanded_rows(gaussian_2000):
    inst, P = gaussian_2000
    rows, bt = expanded(P)
    y = np.random.default_rng(1).standard_normal(7)
    lhs = np.abs(rows @ np.linalg.solve(P.U, y[:6]) + bt * y[6]).sum()
    rhs = np.abs(inst.A @ y[:6] + inst.b * y[6]).sum()
    assert embedding_distortion(P, inst.A, inst.b, y)[0] == pytest.approx(lhs / rhs - 1, abs=1e-10)


def test_lewis_row_bound_and_isotropy(gaussian_2000):
    _, P = gaussian_2000
    assert P.isotropy_error() <= 1e-8
    assert P.row_norms_sq().max() <= 8 * P.d / P.N
    assert P.diagnostics["irb_row_bound"] == pytest.approx(P.irb_row_bound)
    assert P.n_unique <= P.n_original


def test_rotation_preserves_leverage(gaussian_2000):
    _, P = gaussian_2000
    rows, bt = expanded(P)
    A_s = rows @ np.linalg.inv(P.U)
    t_rot = leverage_scores(rows).values
    np.testing.assert_allclose(leverage_scores(A_s).values, t_rot, atol=1e-8)
    t_aug = leverage_scores(np.column_stack([A_s, bt])).values
    assert np.all(t_rot <= t_aug + 1e-10)


def test_counted_products_match_expansion(gaussian_2000):
    _, P = gaussian_2000
    rows, bt = expanded(P)
    v = np.random.default_rng(3).standard_normal(P.n_unique)
    np.testing.assert_allclose(P.gram(), rows.T @ rows, atol=1e-10)
    np.testing.assert_allclose(P.tmatvec(v), rows.T @ np.repeat(v, P.counts), atol=1e-10)
    x = np.random.default_rng(4).standard_normal(P.d)
    assert P.objective(x) == pytest.approx(np.abs(rows @ x - bt).sum(), rel=1e-12)


def test_precondition_deterministic():
    inst = generate(GenSpec("gaussian", 300, 4, seed=1))
    cfg = PreconditionConfig(eps=0.5, seed=9)
    a, b = precondition(inst.A, inst.b, cfg), precondition(inst.A, inst.b, cfg)
    np.testing.assert_array_equal(a.rows, b.rows)
    np.testing.assert_array_equal(a.counts, b.counts)


def test_precondition_sparse_input():
    inst = generate(GenSpec("incidence-like", 400, 6, seed=2))
    P = precondition_lewis(inst.A, inst.b, PreconditionConfig(eps=0.5, seed=1))
    assert P.isotropy_error() <= 1e-8


def _orthonormal_equal_rows(n, d, seed):
    rng = np.random.default_rng(seed)
    H = rng.choice([-1.0, 1.0], size=(n, d + 1))
    Q, _ = np.linalg.qr(H)
    return Q[:, :d], Q[:, d]


def test_uniform_orthonormal_input_conditioning():
    A, b = _orthonormal_equal_rows(2048, 4, 0)
    for seed in range(20):
        P = precondition_uniform(A, b, PreconditionConfig(eps=0.5, seed=seed, mode="uniform"))
        assert P.diagnostics["gram_condition"] <= 100
        assert P.mode == "uniform"
        np.testing.assert_array_equal(P.U, np.eye(4))


def test_uniform_full_resample_preserves_norms():
    inst = generate(GenSpec("near-isotropic-equal-rows", 1000, 5, seed=3))
    P = precondition_uniform(inst.A, inst.b, PreconditionConfig(seed=0, mode="uniform"), N=1000)
    assert P.N == 1000
    lam = np.linalg.eigvalsh(P.gram())
    assert lam[-1] / lam[0] <= 100
    Y = np.random.default_rng(5).standard_normal((6, 50))
    dist = embedding_distortion(P, inst.A, inst.b, Y)
    assert np.max(np.abs(dist)) <= 0.25


def test_uniform_keeps_sparsity():
    rng = np.random.default_rng(0)
    n, d = 1200, 4
    A = np.zeros((n, d))
    A[np.arange(n), np.arange(n) % d] = 1.0
    b = rng.choice([-1.0, 1.0], size=n) * 0.5
    P = precondition_uniform(sp.csr_matrix(A), b, PreconditionConfig(eps=0.5, mode="uniform"))
    assert sp.issparse(P.rows)
    assert P.N == uniform_sample_size(n, d, 0.5, 4.0)


def test_uniform_rejects_skewed_input():
    inst = generate(GenSpec("heavy-tail-outliers", 500, 4, seed=0))
    with pytest.raises(NotNearIsotropicError):
        precondition_uniform(inst.A, inst.b)


def test_lewis_weights_near_uniform_on_valid_input():
    inst = generate(GenSpec("near-isotropic-equal-rows", 2000, 6, seed=1))
    M = np.column_stack([inst.A, inst.b])
    w = lewis_weights(M).values
    ref = M.shape[1] / M.shape[0]
    assert max(w.max() / ref, ref / w.min()) <= 100


def test_lift_solution_identity_and_scale():
    P = PreconditionedProblem(np.eye(2), np.zeros(2), np.ones(2), np.eye(2), "lewis", 2,
                              np.arange(2))
    np.testing.assert_array_equal(lift_solution(P, np.array([3.0, 4.0])), [3, 4])
    P.U = 0.5 * np.eye(2)
    np.testing.assert_array_equal(lift_solution(P, np.array([2.0, 2.0])), [1, 1])


def test_lift_exact_preconditioned_solution():
    ok = 0
    eps = 0.25
    for seed in range(20):
        inst = generate(GenSpec("gaussian", 30, 2, seed=seed))
        P = precondition_lewis(inst.A, inst.b, PreconditionConfig(eps=eps, seed=seed))
        x_pre = exact_preconditioned(P).x_star
        f = inst.objective(lift_solution(P, x_pre))
        ok += f <= (1 + eps) ** 2 * exact_l1_small(inst.A, inst.b).f_star
    assert ok >= 18


def test_rotate_only_is_exact():
    inst = generate(GenSpec("gaussian", 25, 3, seed=4))
    P = rotate_only(inst.A, inst.b)
    assert P.N == 25 and P.isotropy_error() <= 1e-10
    x = np.random.default_rng(0).standard_normal(3)
    assert P.objective(x) == pytest.approx(inst.objective(P.U @ x), rel=1e-12)


def test_weighted_gram_dense_sparse(rng):
    R = rng.standard_normal((8, 3))
    c = rng.integers(1, 5, size=8)
    np.testing.assert_allclose(weighted_gram(sp.csr_matrix(R), c), weighted_gram(R, c),
                               atol=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        PreconditionConfig(eps=0.0)
    with pytest.raises(ValueError):
        PreconditionConfig(mode="leverage")
