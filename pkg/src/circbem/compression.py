"""Randomized low-rank skeletonization of the extracted operator difference.

Works from matvec/adjoint-matvec access only: a blocked randomized range
finder (block 32, oversampling 10, one power iteration) builds an
orthonormal basis Q, the small matrix Q^H A is SVD'd, and singular values
below eps * sigma_max are dropped, leaving A ~ U V^T with U carrying the
singular values.  eps is relative to the largest singular value of the
compressed matrix itself.

The RNG seed is fixed by default so ranks are reproducible; pass seed=None
to randomize.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

BLOCK_SIZE = 32
OVERSAMPLING = 10
POWER_ITERATIONS = 1


class InsufficientDecayError(RuntimeError):
    """Singular values did not reach the tolerance within the rank cap."""


@dataclass(frozen=True)
class SkeletonFactorization:
    """A ~ U V^T with U (n x r) scaled by singular values, V (n x r)."""

    U: np.ndarray
    V: np.ndarray
    rank: int
    eps: float
    sigmas: np.ndarray
    error_estimate: float

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.U @ (self.V.T @ x)


def _as_matvec(A):
    if callable(A):
        return A
    M = np.asarray(A)
    return lambda x: M @ x


def estimate_spectral_norm(apply, apply_adjoint, n, iters: int = 20, seed=0) -> float:
    """Power iteration on A^H A."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        w = apply(v)
        sigma = np.linalg.norm(w)
        if sigma == 0.0:
            return 0.0
        v = apply_adjoint(w)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return float(sigma)
        v /= nv
    return float(sigma)


def skeletonize(
    apply,
    apply_adjoint,
    n: int,
    eps: float,
    r_max: int | None = None,
    block: int = BLOCK_SIZE,
    oversampling: int = OVERSAMPLING,
    power_iterations: int = POWER_ITERATIONS,
    seed=0,
    floor: float = 0.0,
) -> SkeletonFactorization:
    """Adaptive randomized skeletonization of an n x n operator.

    apply/apply_adjoint accept (n,) vectors or (n, m) blocks.  Stops when
    the trailing singular values of the projected matrix sit below
    (eps/2) * sigma_max with at least `oversampling` spare columns, then
    truncates at eps * sigma_max.  Raises InsufficientDecayError when the
    rank cap is hit first: the spectrum has no usable decay at this
    tolerance (the failure mode circulant extraction is there to prevent).

    floor is an absolute cutoff: singular values below it are treated as
    roundoff of the assembled operators (zero-difference inputs then come
    back with rank 0 instead of a basis for noise).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0, 1)")
    if r_max is None:
        r_max = n
    apply = _as_matvec(apply)
    apply_adjoint = _as_matvec(apply_adjoint)
    rng = np.random.default_rng(seed)

    Q = np.zeros((n, 0), dtype=complex)
    B = np.zeros((0, n), dtype=complex)  # Q^H A, built incrementally
    while True:
        b = min(block, n - Q.shape[1])
        if b <= 0:
            break
        omega = rng.standard_normal((n, b)) + 1j * rng.standard_normal((n, b))
        Y = apply(omega)
        for _ in range(power_iterations):
            Y, _ = np.linalg.qr(Y)
            Y = apply(apply_adjoint(Y))
        # project out the current basis and extend it
        if Q.shape[1]:
            Y -= Q @ (Q.conj().T @ Y)
        Qnew, _ = np.linalg.qr(Y)
        if Q.shape[1]:
            Qnew -= Q @ (Q.conj().T @ Qnew)  # re-orthogonalize
            Qnew, _ = np.linalg.qr(Qnew)
        Bnew = apply_adjoint(Qnew).conj().T
        Q = np.hstack([Q, Qnew])
        B = np.vstack([B, Bnew])

        s = np.linalg.svd(B, compute_uv=False)
        smax = s[0] if s.size else 0.0
        if smax <= floor:
            B = np.zeros((0, n), dtype=complex)
            break
        n_small = int(np.sum(s < max(0.5 * eps * smax, floor)))
        if n_small >= min(oversampling, n - 1) or Q.shape[1] >= n:
            break
        if Q.shape[1] >= r_max + oversampling:
            kept = int(np.sum(s >= eps * smax))
            if kept > r_max:
                raise InsufficientDecayError(
                    f"rank exceeded cap {r_max} before reaching eps={eps:g} "
                    f"(kept {kept} of {Q.shape[1]} sampled directions)"
                )
            break

    if B.shape[0] == 0:
        return SkeletonFactorization(
            U=np.zeros((n, 0), dtype=complex),
            V=np.zeros((n, 0), dtype=complex),
            rank=0,
            eps=eps,
            sigmas=np.zeros(0),
            error_estimate=0.0,
        )

    W, s, Vh = np.linalg.svd(B, full_matrices=False)
    if s.size == 0 or s[0] <= floor:
        keep = 0
    else:
        keep = int(np.sum(s >= max(eps * s[0], floor)))
    if keep > r_max:
        raise InsufficientDecayError(
            f"rank {keep} exceeds cap {r_max} at eps={eps:g}"
        )
    U = (Q @ W[:, :keep]) * s[:keep]
    V = Vh[:keep, :].T  # A ~ U @ V.T
    err = estimate_spectral_norm(
        lambda x: apply(x) - U @ (V.T @ x),
        lambda x: apply_adjoint(x) - np.conj(V) @ (U.conj().T @ x),
        n,
    )
    logger.info("skeleton rank %d at eps=%g (error estimate %.3e)", keep, eps, err)
    return SkeletonFactorization(
        U=U, V=V, rank=keep, eps=eps, sigmas=s[:keep].copy(), error_estimate=err
    )


def rank_report(skel: SkeletonFactorization):
    """(rank, retained singular values) for logging/CSV export."""
    return skel.rank, skel.sigmas
