"""Quadrature rules used by the boundary-element assembly.

Two families are provided, both on the reference interval (0, 1):

* plain Gauss-Legendre rules, used for smooth element-pair integrands, and
* generalized Gauss rules for the weight function w(x) = -ln(x), used to
  integrate the logarithmic part of the kernel on self and adjacent
  element pairs.

The log-weight rules are generated with the modified Chebyshev (Wheeler)
algorithm from shifted-Legendre modified moments, which is numerically
stable for this weight, followed by Golub-Welsch on the resulting Jacobi
matrix.  Rules are cached per point count.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal


@dataclass(frozen=True)
class QuadratureConfig:
    """Quadrature orders for the Galerkin assembly.

    regular_order applies to well-separated element pairs (tensor
    Gauss-Legendre).  Self and adjacent pairs use singular_gauss_order
    points for the smooth remainder and singular_log_order points for the
    log-weighted part.
    """

    regular_order: int = 8
    singular_gauss_order: int = 16
    singular_log_order: int = 16

    def __post_init__(self):
        for name in ("regular_order", "singular_gauss_order", "singular_log_order"):
            v = getattr(self, name)
            if not 1 <= v <= 64:
                raise ValueError(f"{name} must be in [1, 64], got {v}")


@lru_cache(maxsize=32)
def gauss_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=16)
def gauss_log_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for integral_0^1 f(x) * (-ln x) dx ~ sum w_i f(x_i).

    Exact for f polynomial of degree <= 2n - 1.
    """
    if not 1 <= n <= 40:
        raise ValueError(f"log-weight rule supports 1 <= n <= 40, got {n}")
    m = 2 * n
    # Modified moments of -ln(x) against monic shifted-Legendre polynomials:
    # against P*_k the moments are 1 (k=0) and (-1)^k / (k(k+1)) otherwise;
    # the monic rescaling multiplies by (k!)^2 / (2k)!.
    nu = np.empty(m)
    nu[0] = 1.0
    scale = 1.0
    for k in range(1, m):
        scale *= k * k / (2.0 * k * (2.0 * k - 1.0))
        nu[k] = scale * (-1.0) ** k / (k * (k + 1.0))
    # Monic shifted-Legendre recurrence coefficients on [0, 1].
    a_aux = np.full(m, 0.5)
    b_aux = np.zeros(m)
    ks = np.arange(1, m)
    b_aux[1:] = ks**2 / (4.0 * (4.0 * ks**2 - 1.0))

    alpha = np.zeros(n)
    beta = np.zeros(n)
    sigma_prev = np.zeros(m + 1)
    sigma = np.zeros(m + 1)
    sigma[:m] = nu
    alpha[0] = a_aux[0] + nu[1] / nu[0]
    beta[0] = nu[0]
    for k in range(1, n):
        sigma_new = np.zeros(m + 1)
        for ell in range(k, m - k):
            sigma_new[ell] = (
                sigma[ell + 1]
                - (alpha[k - 1] - a_aux[ell]) * sigma[ell]
                - beta[k - 1] * sigma_prev[ell]
                + b_aux[ell] * sigma[ell - 1]
            )
        alpha[k] = a_aux[k] + sigma_new[k + 1] / sigma_new[k] - sigma[k] / sigma[k - 1]
        beta[k] = sigma_new[k] / sigma[k - 1]
        sigma_prev, sigma = sigma, sigma_new

    nodes, vecs = eigh_tridiagonal(alpha, np.sqrt(beta[1:]))
    weights = beta[0] * vecs[0, :] ** 2
    order = np.argsort(nodes)
    return nodes[order], weights[order]


def log_interval_rule(a_len: float, n_gauss: int, n_log: int):
    """Quadrature for integral_0^L f(t) * ln(t) dt on (0, L).

    Returns (nodes, weights) such that sum w_i f(t_i) approximates the
    integral; built from ln(L t) = ln L + ln t split into a plain Gauss
    part and a -ln(t)-weighted part.
    """
    xg, wg = gauss_unit(n_gauss)
    xl, wl = gauss_log_unit(n_log)
    nodes = np.concatenate([a_len * xg, a_len * xl])
    weights = np.concatenate([a_len * np.log(a_len) * wg, -a_len * wl])
    return nodes, weights
