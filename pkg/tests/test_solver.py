import numpy as np
import pytest

from circbem.circulant import CirculantOperator
from circbem.compression import SkeletonFactorization
from circbem.solver import (
    WoodburyCoreSingularError,
    factorize,
    reconstruct_apply,
    solve,
    solve_many,
)


def _skel(U, V, eps=1e-12):
    r = U.shape[1]
    return SkeletonFactorization(
        U=U, V=V, rank=r, eps=eps, sigmas=np.ones(r), error_estimate=0.0
    )


def _random_state(n, r, seed, cond_offset=4.0):
    rng = np.random.default_rng(seed)
    sym = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    sym += cond_offset
    U = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
    V = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
    cc = CirculantOperator(sym)
    return cc, _skel(U, V), rng


def test_rank_zero_reduces_to_circulant():
    n = 24
    cc, _, rng = _random_state(n, 2, 0)
    skel = _skel(np.zeros((n, 0), dtype=complex), np.zeros((n, 0), dtype=complex))
    state = factorize(cc, skel)
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert np.allclose(solve(state, b), cc.solve(b))


def test_small_dense_oracle():
    n, r = 16, 3
    cc, skel, rng = _random_state(n, r, 1)
    state = factorize(cc, skel)
    M = cc.to_dense() + skel.U @ skel.V.T
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x = solve(state, b)
    assert np.linalg.norm(M @ x - b) <= 1e-12 * np.linalg.norm(b)
    xd = np.linalg.solve(M, b)
    assert np.linalg.norm(x - xd) <= 1e-11 * np.linalg.norm(xd)


@pytest.mark.parametrize("r", [1, 4, 8])
def test_woodbury_exactness_random_instances(r):
    # 50 instances split across the three ranks
    failures = 0
    for seed in range(17):
        n = 32
        cc, skel, rng = _random_state(n, r, 100 * r + seed)
        state = factorize(cc, skel)
        M = cc.to_dense() + skel.U @ skel.V.T
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x = solve(state, b)
        xd = np.linalg.solve(M, b)
        if np.linalg.norm(x - xd) > 1e-11 * np.linalg.norm(xd):
            failures += 1
    assert failures == 0


def test_degenerate_core_rejected():
    n, r = 20, 3
    rng = np.random.default_rng(3)
    sym = rng.standard_normal(n) + 1j * rng.standard_normal(n) + 4.0
    cc = CirculantOperator(sym)
    V = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
    # U chosen so that I + V^T Cc^-1 U = 0 exactly
    U = -cc.apply(V @ np.linalg.inv(V.T @ V))
    with pytest.raises(WoodburyCoreSingularError):
        factorize(cc, _skel(U, V))


def test_linearity():
    n, r = 40, 5
    cc, skel, rng = _random_state(n, r, 4)
    state = factorize(cc, skel)
    b1 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    b2 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    alpha = 0.3 - 2.2j
    lhs = solve(state, alpha * b1 + b2)
    rhs = alpha * solve(state, b1) + solve(state, b2)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_solve_many_matches_columnwise():
    n, r = 48, 6
    cc, skel, rng = _random_state(n, r, 5)
    state = factorize(cc, skel)
    B = rng.standard_normal((n, 7)) + 1j * rng.standard_normal((n, 7))
    X = solve_many(state, B)
    for j in range(7):
        assert np.linalg.norm(X[:, j] - solve(state, B[:, j])) <= 1e-14 * np.linalg.norm(
            X[:, j]
        )
    # permuting columns permutes solutions identically (to FFT batch jitter)
    perm = np.array([3, 0, 6, 1, 5, 2, 4])
    Xp = solve_many(state, B[:, perm])
    assert np.max(np.abs(Xp - X[:, perm])) <= 1e-14 * np.max(np.abs(X))


def test_reconstruct_apply_consistency():
    n, r = 32, 4
    cc, skel, rng = _random_state(n, r, 6)
    state = factorize(cc, skel)
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x = solve(state, b)
    assert np.linalg.norm(reconstruct_apply(state, x) - b) <= 1e-11 * np.linalg.norm(b)


def test_solve_many_requires_block():
    n, r = 16, 2
    cc, skel, _ = _random_state(n, r, 7)
    state = factorize(cc, skel)
    with pytest.raises(ValueError):
        solve_many(state, np.ones(n))
