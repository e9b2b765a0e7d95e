import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lewisl1.errors import (
    DegenerateInputError,
    InstanceTooLargeError,
    RankDeficiencyError,
)
from lewisl1.initializer import init_cg
from lewisl1.instances import GenSpec, generate
from lewisl1.oracle import exact_l1_lp, exact_l1_small, exact_l2, weighted_median


def test_median_instance():
    r = exact_l1_small(np.ones((3, 1)), np.array([1.0, 2.0, 4.0]))
    np.testing.assert_allclose(r.x_star, [2.0])
    assert r.f_star == pytest.approx(3.0)
    assert r.method == "subset-enumeration"
    assert r.active_rows == [1]


def test_consistent_system(rng):
    A = rng.standard_normal((12, 3))
    z = rng.standard_normal(3)
    r = exact_l1_small(A, A @ z)
    np.testing.assert_allclose(r.x_star, z, atol=1e-10)
    assert r.f_star == pytest.approx(0.0, abs=1e-10)
    assert len(r.active_rows) == 12


def test_three_subset_brute_force():
    # subsets {0,1}: x=(0,0), f=3; {0,2}: x=(0,3), f=3; {1,2}: x=(3,0), f=3
    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    b = np.array([0.0, 0.0, 3.0])
    values = []
    for S in itertools.combinations(range(3), 2):
        x = np.linalg.solve(A[list(S)], b[list(S)])
        values.append(np.abs(A @ x - b).sum())
    assert values == [3.0, 3.0, 3.0]
    r = exact_l1_small(A, b)
    assert r.f_star == 3.0
    np.testing.assert_array_equal(r.x_star, [0.0, 0.0])  # lexicographic tie-break


def test_limits_and_errors(rng):
    with pytest.raises(InstanceTooLargeError):
        exact_l1_small(rng.standard_normal((31, 2)), rng.standard_normal(31))
    with pytest.raises(InstanceTooLargeError):
        exact_l1_small(rng.standard_normal((10, 5)), rng.standard_normal(10))
    with pytest.raises(RankDeficiencyError):
        exact_l1_small(np.ones((5, 2)), np.arange(5.0))
    r = exact_l1_small(rng.standard_normal((40, 2)), rng.standard_normal(40), max_subsets=1000)
    assert np.isfinite(r.f_star)
    with pytest.raises(InstanceTooLargeError):
        exact_l1_small(rng.standard_normal((40, 3)), rng.standard_normal(40), max_subsets=1000)


def test_all_subsets_singular(monkeypatch):
    import lewisl1.oracle as orc

    # rank check passes but every row pair is numerically singular
    monkeypatch.setattr(orc.np.linalg, "matrix_rank", lambda A: A.shape[1])
    with pytest.raises(DegenerateInputError):
        exact_l1_small(np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]), np.ones(3))


@pytest.mark.parametrize("seed", range(5))
def test_optimality_certificate(seed):
    inst = generate(GenSpec("gaussian", 25, 3, seed=seed))
    r = exact_l1_small(inst.A, inst.b)
    assert r.f_star == pytest.approx(inst.objective(r.x_star), rel=1e-12)
    assert len(r.active_rows) >= 3
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((1000, 3))
    D *= (1e-3 * rng.random(1000) / np.linalg.norm(D, axis=1))[:, None]
    F = np.abs((r.x_star + D) @ inst.A.T - inst.b).sum(axis=1)
    assert np.all(F >= r.f_star - 1e-9)


@given(st.integers(0, 2**31 - 1), st.integers(1, 30))
def test_d1_enumeration_matches_median(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(n)
    b = rng.standard_normal(n)
    w = rng.integers(1, 4, size=n).astype(float)
    e = exact_l1_small(a[:, None], b, weights=w)
    m = weighted_median(a, b, w)
    assert e.f_star == pytest.approx(m.f_star, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_lp_oracle_agrees_with_enumeration(seed):
    inst = generate(GenSpec("heavy-tail-outliers", 30, 3, seed=seed))
    w = np.random.default_rng(seed).integers(1, 5, size=30).astype(float)
    e = exact_l1_small(inst.A, inst.b, weights=w)
    lp = exact_l1_lp(inst.A, inst.b, weights=w)
    assert lp.f_star == pytest.approx(e.f_star, rel=1e-9)


def test_exact_l2_trivial(rng):
    b = rng.standard_normal(4)
    np.testing.assert_allclose(exact_l2(np.eye(4), b), b)
    Q, _ = np.linalg.qr(rng.standard_normal((10, 3)))
    b = rng.standard_normal(10)
    np.testing.assert_allclose(exact_l2(Q, b), Q.T @ b, atol=1e-12)


def test_exact_l2_orthogonality(rng):
    A = rng.standard_normal((50, 5))
    b = rng.standard_normal(50)
    x = exact_l2(A, b)
    assert np.linalg.norm(A.T @ (A @ x - b)) <= 1e-8 * np.linalg.norm(A.T @ b)


def test_exact_l2_rank_deficient():
    with pytest.raises(RankDeficiencyError):
        exact_l2(np.ones((4, 2)), np.ones(4))


def test_exact_l2_agrees_with_cg():
    inst = generate(GenSpec("near-isotropic-equal-rows", 400, 5, seed=0))
    np.testing.assert_allclose(init_cg(inst.A, inst.b, 1e-8), exact_l2(inst.A, inst.b),
                               atol=1e-6)
