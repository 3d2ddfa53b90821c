"""Incident fields, analytic cylinder reference, far fields, spectra.

TE convention throughout: the magnetic field is along z, the in-plane
unknowns are the tangential electric field and H_z, time factor
exp(-i omega t).  For a plane wave propagating along the unit vector khat,

    H_z^inc(r) = A exp(i k khat . r),     E^inc = eta (zhat x khat) H_z^inc,

which is the Maxwell-consistent polarity for this time convention; the
solved surface current along the counterclockwise tangent equals the
negative of the total magnetic field trace on the contour.  All quantities
are SI.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import UniformMesh
from .quadrature import gauss_unit
from .specfun import bessel_jy

VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
VACUUM_PERMEABILITY = 1.25663706212e-6  # H/m
SPEED_OF_LIGHT = 1.0 / np.sqrt(VACUUM_PERMITTIVITY * VACUUM_PERMEABILITY)


@dataclass(frozen=True)
class MediumParameters:
    """Homogeneous background medium."""

    permittivity: float
    permeability: float
    angular_frequency: float

    @property
    def impedance(self) -> float:
        return float(np.sqrt(self.permeability / self.permittivity))

    @property
    def wavenumber(self) -> float:
        return float(
            self.angular_frequency * np.sqrt(self.permeability * self.permittivity)
        )

    @classmethod
    def free_space(cls, k: float) -> "MediumParameters":
        """Free space with the given wavenumber (omega = c k)."""
        if k <= 0:
            raise ValueError("wavenumber must be positive")
        return cls(VACUUM_PERMITTIVITY, VACUUM_PERMEABILITY, SPEED_OF_LIGHT * k)


@dataclass(frozen=True)
class PlaneWaveExcitation:
    """Incident plane wave: angle of the propagation direction, H_z amplitude."""

    angle: float
    amplitude: complex = 1.0
    medium: MediumParameters | None = None

    @property
    def direction(self) -> np.ndarray:
        return np.array([np.cos(self.angle), np.sin(self.angle)])

    def h_field(self, points: np.ndarray, k: float) -> np.ndarray:
        """H_z^inc at Cartesian points (..., 2)."""
        return self.amplitude * np.exp(1j * k * (points @ self.direction))


@dataclass(frozen=True)
class SurfaceCurrentSolution:
    """Hat-basis coefficients of the tangential surface current."""

    coefficients: np.ndarray
    mesh: UniformMesh
    k: float
    excitation: PlaneWaveExcitation

    def __post_init__(self):
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("current coefficients contain non-finite values")
        if self.coefficients.shape != (self.mesh.n,):
            raise ValueError("coefficient length does not match the mesh")


def project_scalar(mesh: UniformMesh, values: np.ndarray, order: int) -> np.ndarray:
    """Hat-basis projection integrals int lambda_i f ds from per-element
    Gauss samples of f with the given order (values shape (n, order))."""
    xg, wg = gauss_unit(order)
    wa = (mesh.h * wg)[:, None] * np.stack([1.0 - xg, xg], axis=1)
    contrib = values @ wa  # (n, 2)
    out = np.zeros(mesh.n, dtype=contrib.dtype)
    idx = np.arange(mesh.n)
    np.add.at(out, idx, contrib[:, 0])
    np.add.at(out, (idx + 1) % mesh.n, contrib[:, 1])
    return out


def project_excitation(mesh: UniformMesh, excitation: PlaneWaveExcitation, order: int = 8):
    """(e, h) with e_i = int lambda_i E_t^inc, h_i = int lambda_i H_z^inc."""
    medium = excitation.medium or MediumParameters.free_space(1.0)
    eta = medium.impedance
    k = medium.wavenumber
    _, X, T, _, _ = mesh.element_frames(order)
    khat = excitation.direction
    zxk = np.array([-khat[1], khat[0]])  # zhat x khat
    hz = excitation.amplitude * np.exp(1j * k * (X @ khat))
    et = eta * (T @ zxk) * hz
    return project_scalar(mesh, et, order), project_scalar(mesh, hz, order)


def _hankel_derivatives(x: float, max_order: int) -> np.ndarray:
    """H_m^(1)'(x) for m = 0 .. max_order - 1 via the recurrence ladder."""
    J, Y = bessel_jy(max_order, x)
    m = np.arange(1, max_order)
    Jd = np.concatenate([[-J[1]], J[:-2] - m / x * J[1:-1]])
    Yd = np.concatenate([[-Y[1]], Y[:-2] - m / x * Y[1:-1]])
    return Jd + 1j * Yd


def circle_current_at_angles(
    radius: float,
    k: float,
    excitation: PlaneWaveExcitation,
    angles,
    max_order: int | None = None,
    tail_tol: float = 1e-12,
) -> np.ndarray:
    """Analytic cylinder surface current at the given polar angles.

    The total field outside a sound-hard/PEC-TE circle expands in
    cylindrical harmonics; cancelling the normal derivative on the surface
    leaves H_z^total(a, phi) = sum_m i^m e^{i m (phi - phi_inc)}
    (2i / (pi k a)) / H_m^(1)'(ka).  The returned current is the solver
    convention, -H_z^total (current measured along the CCW tangent).
    """
    x = k * radius
    if max_order is None:
        max_order = int(np.ceil(x)) + 32 + int(np.ceil(x / 6.0))
    if not x < max_order - 20:
        raise ValueError("truncation order too small: need ka < max_order - 20")
    Hd = _hankel_derivatives(x, max_order)
    m = np.arange(1, max_order)
    # folded series: 1/H'_0 + 2 sum_m i^m cos(m delta) / H'_m
    terms = 2.0 / np.abs(Hd[1:])
    scale = max(float(np.max(terms)), float(np.abs(1.0 / Hd[0])))
    tail = terms[-10:]
    if not (np.all(np.diff(tail) < 0) and tail[-1] < tail_tol * scale):
        raise ValueError(
            "cylindrical harmonic series not converged; increase max_order"
        )
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    delta = angles - excitation.angle
    acc = np.full(angles.shape, 1.0 / Hd[0], dtype=complex)
    acc += 2.0 * np.sum(
        (1j ** m)[None, :] * np.cos(np.outer(delta, m)) / Hd[1:][None, :], axis=1
    )
    total_field = (2j / (np.pi * x)) * acc
    return -excitation.amplitude * total_field


def reference_circle_current(
    radius: float,
    k: float,
    excitation: PlaneWaveExcitation,
    mesh: UniformMesh,
    max_order: int | None = None,
    tail_tol: float = 1e-12,
) -> np.ndarray:
    """Analytic cylinder current sampled at the mesh nodes."""
    phi = np.arctan2(mesh.nodes[:, 1], mesh.nodes[:, 0])
    return circle_current_at_angles(radius, k, excitation, phi, max_order, tail_tol)


def current_l2_error(solution: np.ndarray, reference_nodal, mesh: UniformMesh, order: int = 16):
    """Relative L2(contour) distance between the hat interpolants.

    reference_nodal may be nodal samples (compared as the hat interpolant)
    or a callable s -> value evaluated at quadrature points.
    """
    xg, wg = gauss_unit(order)
    nxt = np.roll(np.asarray(solution), -1)
    sol_q = np.asarray(solution)[:, None] * (1 - xg)[None, :] + nxt[:, None] * xg[None, :]
    if callable(reference_nodal):
        sq = mesh.s[:, None] + mesh.h * xg[None, :]
        ref_q = reference_nodal(sq.ravel()).reshape(sol_q.shape)
    else:
        ref = np.asarray(reference_nodal)
        ref_q = ref[:, None] * (1 - xg)[None, :] + np.roll(ref, -1)[:, None] * xg[None, :]
    num = np.sum(wg[None, :] * np.abs(sol_q - ref_q) ** 2) * mesh.h
    den = np.sum(wg[None, :] * np.abs(ref_q) ** 2) * mesh.h
    return float(np.sqrt(num / den))


@dataclass(frozen=True)
class FarFieldResult:
    angles: np.ndarray
    amplitude: np.ndarray
    echo_width: np.ndarray
    echo_width_dbm: np.ndarray


def far_field(solution: SurfaceCurrentSolution, angles, order: int = 8) -> FarFieldResult:
    """Radiated far-field amplitude and 2D echo width.

    The scattered field is the double-layer potential of the total-field
    trace (-current); with H_0^(1)(z) ~ sqrt(2/(pi z)) e^{i(z - pi/4)} the
    scattered field behaves like e^{ikr}/sqrt(r) F(phi) with

        F(phi) = (e^{-i pi/4}/4) sqrt(2 k / pi)
                 int (xhat . n(y)) e^{-i k xhat . y} u_total(y) ds(y)

    and echo width sigma(phi) = 2 pi |F|^2 / |A|^2 (meters).
    """
    mesh, k = solution.mesh, solution.k
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    xg, wg = gauss_unit(order)
    _, X, _, Nrm, _ = mesh.element_frames(order)
    coef = solution.coefficients
    u_total = -(
        coef[:, None] * (1 - xg)[None, :]
        + np.roll(coef, -1)[:, None] * xg[None, :]
    )
    xhat = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # (A, 2)
    phase = np.exp(-1j * k * np.einsum("pqa,ma->pqm", X, xhat))
    ndot = np.einsum("pqa,ma->pqm", Nrm, xhat)
    integ = np.einsum("pq,pqm,q->m", u_total, phase * ndot, wg) * mesh.h
    amp = 0.25 * np.exp(-0.25j * np.pi) * np.sqrt(2.0 * k / np.pi) * integ
    a0 = abs(solution.excitation.amplitude)
    echo = 2.0 * np.pi * np.abs(amp) ** 2 / a0**2
    with np.errstate(divide="ignore"):
        echo_db = 10.0 * np.log10(np.maximum(echo, 1e-300))
    return FarFieldResult(angles, amp, echo, echo_db)


def circle_echo_width_series(radius, k, excitation, angles, max_order=None):
    """Echo width of the circle from the harmonic series (reference)."""
    x = k * radius
    if max_order is None:
        max_order = int(np.ceil(x)) + 32 + int(np.ceil(x / 6.0))
    J, _ = bessel_jy(max_order, x)
    m = np.arange(1, max_order)
    Jd = np.concatenate([[-J[1]], J[:-2] - m / x * J[1:-1]])
    Hd = _hankel_derivatives(x, max_order)
    am = -Jd / Hd  # scattering coefficients
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    delta = angles - excitation.angle
    acc = np.full(angles.shape, am[0], dtype=complex)
    acc += 2.0 * np.sum(am[1:][None, :] * np.cos(np.outer(delta, m)), axis=1)
    return (4.0 / k) * np.abs(acc) ** 2


def fourier_mode_indices(vectors: np.ndarray) -> np.ndarray:
    """Dominant Fourier mode of each column, aggregating +-m."""
    n = vectors.shape[0]
    F = np.fft.fft(vectors, axis=0)
    half = n // 2
    power = np.abs(F[: half + 1, :]) ** 2
    for m in range(1, (n + 1) // 2):
        power[m, :] += np.abs(F[n - m, :]) ** 2
    return np.argmax(power, axis=0)


def fourier_ordered_spectrum(matrix: np.ndarray):
    """(mode index, sigma) pairs from a full SVD, sorted by mode index.

    Each left singular vector is assigned the index of its dominant
    Fourier mode (aggregated over +-m); ties within a mode are ordered by
    descending singular value.
    """
    u, s, _ = np.linalg.svd(np.asarray(matrix))
    modes = fourier_mode_indices(u)
    order = np.lexsort((-s, modes))
    return modes[order], s[order]


def spectrum_mode_maxima(modes: np.ndarray, sigmas: np.ndarray, n: int) -> np.ndarray:
    """Max sigma per mode index 0..n//2 (NaN where a mode has no vector)."""
    out = np.full(n // 2 + 1, np.nan)
    for m, s in zip(modes, sigmas):
        if np.isnan(out[m]) or s > out[m]:
            out[m] = s
    return out


def spectrum_tail_ratio(modes: np.ndarray, sigmas: np.ndarray, n: int, fraction: float = 0.1):
    """max sigma over the top `fraction` of mode indices, over global max."""
    cutoff = (1.0 - fraction) * (n // 2)
    tail = sigmas[modes >= cutoff]
    if tail.size == 0:
        return 0.0
    return float(tail.max() / sigmas.max())
