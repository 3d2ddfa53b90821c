"""Direct solver: circulant inverse plus a low-rank correction.

With the circle counterpart M_c (circulant, FFT-invertible) and the
skeleton M - M_c ~ U V^T, the inverse follows from the Woodbury identity

    M^-1 = M_c^-1 - M_c^-1 U (I + V^T M_c^-1 U)^-1 V^T M_c^-1.

Setup costs r circulant solves plus an r x r LU; each subsequent
right-hand side costs two FFT solves and thin matrix products, which is
what makes large angle sweeps cheap.  The factorized state is immutable;
concurrent solves on distinct right-hand sides are safe.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .circulant import CirculantOperator
from .compression import SkeletonFactorization

logger = logging.getLogger(__name__)

CONDITION_WARN = 1e8


class WoodburyCoreSingularError(RuntimeError):
    """I + V^T M_c^-1 U is numerically singular."""


@dataclass(frozen=True)
class DirectSolverState:
    circulant: CirculantOperator
    U: np.ndarray
    V: np.ndarray
    W: np.ndarray  # M_c^-1 U
    lu: tuple
    rank: int
    core_condition: float

    @property
    def n(self) -> int:
        return self.circulant.n


def factorize(circulant: CirculantOperator, skel: SkeletonFactorization) -> DirectSolverState:
    """Precompute the Woodbury pieces for repeated solves."""
    n = circulant.n
    r = skel.rank
    if r == 0:
        W = np.zeros((n, 0), dtype=complex)
        K = np.eye(0)
        lu = lu_factor(np.eye(1))  # placeholder, never used for r=0
        return DirectSolverState(circulant, skel.U, skel.V, W, lu, 0, 1.0)
    W = circulant.solve(skel.U)
    VtW = skel.V.T @ W
    K = np.eye(r, dtype=complex) + VtW
    sv = np.linalg.svd(K, compute_uv=False)
    scale = max(1.0, float(np.max(np.abs(VtW))))
    if sv[0] <= 1e-13 * scale or sv[-1] <= 1e-14 * sv[0]:
        raise WoodburyCoreSingularError(
            f"Woodbury core is singular (singular values {sv[0]:.3e}..{sv[-1]:.3e}); "
            "the compressed system is unresolvable at this tolerance"
        )
    cond = float(sv[0] / sv[-1])
    if cond > CONDITION_WARN:
        logger.warning("Woodbury core condition %.3e exceeds %.0e", cond, CONDITION_WARN)
    lu = lu_factor(K, check_finite=False)
    if np.min(np.abs(np.diag(lu[0]))) == 0.0:
        raise WoodburyCoreSingularError("zero pivot in the Woodbury core LU")
    return DirectSolverState(circulant, skel.U, skel.V, W, lu, r, cond)


def solve(state: DirectSolverState, b: np.ndarray) -> np.ndarray:
    """x = M^-1 b for one right-hand side."""
    y = state.circulant.solve(b)
    if state.rank == 0:
        return y
    return y - state.W @ lu_solve(state.lu, state.V.T @ y, check_finite=False)


def solve_many(state: DirectSolverState, B: np.ndarray) -> np.ndarray:
    """Column-wise solves with batched FFTs; identical to per-column solve."""
    B = np.asarray(B)
    if B.ndim != 2:
        raise ValueError("solve_many expects an (n, m) block of right-hand sides")
    Y = state.circulant.solve(B)
    if state.rank == 0:
        return Y
    return Y - state.W @ lu_solve(state.lu, state.V.T @ Y, check_finite=False)


def reconstruct_apply(state: DirectSolverState, x: np.ndarray) -> np.ndarray:
    """(M_c + U V^T) x: the operator the factorization actually inverts."""
    out = state.circulant.apply(x)
    if state.rank:
        out = out + state.U @ (state.V.T @ x)
    return out
