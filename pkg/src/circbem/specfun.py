"""Bessel and Hankel function evaluation and the 2D Helmholtz kernel.

Conventions: time factor exp(-i omega t), so outgoing cylindrical waves are
H_m^(1) and wavenumbers live in the closed upper half-plane (Im k >= 0,
damped media / complexified wavenumbers).

Orders 0 and 1 with general complex argument are delegated to scipy's
AMOS-based routines; purely real arguments take the faster cephes path.
Integer orders 0..M with real argument (needed by the analytic circular
cylinder reference solution) are computed with the classical stable
recurrences: downward with Miller normalization for J, upward for Y.
"""

from __future__ import annotations

import numpy as np
import scipy.special as _sp

EULER_GAMMA = 0.5772156649015328606

_RESCALE = 1e250


def _validate_upper_half_plane(z: np.ndarray) -> None:
    if np.any(z == 0):
        raise ValueError("Hankel function argument must be nonzero (kernel is singular)")
    if np.iscomplexobj(z) and np.any(np.imag(z) < 0):
        raise ValueError("Hankel function argument must satisfy Im z >= 0")


def hankel1(order: int, z):
    """H_order^(1)(z) for order 0 or 1, with Im z >= 0 and z != 0.

    Accepts scalars or arrays.  Real arguments are routed through the
    cephes J/Y pair, complex ones through AMOS.
    """
    if order not in (0, 1):
        raise ValueError(f"only orders 0 and 1 are supported, got {order}")
    z = np.asarray(z)
    _validate_upper_half_plane(z)
    if np.iscomplexobj(z):
        if np.any(np.imag(z) != 0):
            return _sp.hankel1(order, z)
        z = np.real(z)
    if order == 0:
        out = _sp.j0(z) + 1j * _sp.y0(z)
    else:
        out = _sp.j1(z) + 1j * _sp.y1(z)
    return out


def bessel_j01(z):
    """(J_0(z), J_1(z)) by ascending series, for small |z| (<= 8).

    Used on self/adjacent element pairs where the kernel argument is a
    small fraction of a wavelength; supports complex z.
    """
    z = np.asarray(z)
    if np.any(np.abs(z) > 8.0):
        raise ValueError("bessel_j01 series is restricted to |z| <= 8")
    q = -(z * z) / 4.0
    term0 = np.ones_like(q)
    term1 = np.ones_like(q)
    j0 = term0.copy()
    j1 = term1.copy()
    for m in range(1, 26):
        term0 = term0 * q / (m * m)
        term1 = term1 * q / (m * (m + 1.0))
        j0 += term0
        j1 += term1
    return j0, j1 * z / 2.0


def bessel_jy(max_order: int, x: float) -> tuple[np.ndarray, np.ndarray]:
    """J_m(x) and Y_m(x) for m = 0..max_order at real x > 0.

    J by downward recurrence with Miller normalization, Y by upward
    recurrence seeded from cephes y0/y1.  Raises on Y overflow (order far
    beyond the argument).
    """
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    x = float(x)
    if not x > 0:
        raise ValueError("argument must be real and positive")

    top = max(max_order, int(np.ceil(x)))
    m_start = top + int(np.sqrt(40.0 * max(top, 1))) + 20
    jp = 0.0  # J_{m+1} (unnormalized)
    jc = 1e-300  # J_m
    j_un = np.zeros(max_order + 1)
    norm = 0.0  # accumulates J_0 + 2 sum J_{2m}
    for m in range(m_start, 0, -1):
        jm = (2.0 * m / x) * jc - jp
        jp, jc = jc, jm
        if abs(jc) > _RESCALE:
            jc /= _RESCALE
            jp /= _RESCALE
            j_un /= _RESCALE
            norm /= _RESCALE
        if m - 1 <= max_order:
            j_un[m - 1] = jc
        if (m - 1) % 2 == 0:
            norm += jc if m - 1 == 0 else 2.0 * jc
    J = j_un / norm

    Y = np.zeros(max_order + 1)
    Y[0] = _sp.y0(x)
    if max_order >= 1:
        Y[1] = _sp.y1(x)
        with np.errstate(over="ignore", invalid="ignore"):
            for m in range(1, max_order):
                Y[m + 1] = (2.0 * m / x) * Y[m] - Y[m - 1]
    if not np.all(np.isfinite(Y)):
        raise ValueError(
            f"Y_m overflow: order {max_order} out of range for argument {x:g}"
        )
    return J, Y


def green_kernel(k, d):
    """2D Helmholtz kernel (i/4) H_0^(1)(k d) for distances d > 0.

    k may be complex with Im k >= 0.  Callers must route coincident points
    through the singular quadrature path instead.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("green_kernel requires strictly positive distances")
    k = complex(k)
    if k == 0 or k.imag < 0:
        raise ValueError("wavenumber must be nonzero with Im k >= 0")
    if k.imag == 0:
        return 0.25j * hankel1(0, k.real * d)
    return 0.25j * hankel1(0, k * d)
