"""The preconditioned combined-field system on a contour.

Builds the damped wavenumber, the five Galerkin operators, the dense system
matrix

    C = (G/2 + D~) G^-1 (G/2 - D) + S~ G^-1 N,

matvec access to C without forming it, the equal-perimeter-circle circulant
counterpart, and the projected right-hand side

    b = -(i k / eta) S~ G^-1 e - (G/2 + D~) G^-1 h.

G^-1 is always applied through the Gram circulant solve (exact: the Gram
symbol is bounded below by h/3).  All state is immutable after assembly and
safe to share across solver workers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bem import GalerkinMatrix, assemble_operators, gram_matrix
from .circulant import (
    CirculantOperator,
    assemble_circle_operators,
    compose_system_symbol,
)
from .geometry import UniformMesh
from .quadrature import QuadratureConfig

logger = logging.getLogger(__name__)

FREE_SPACE_IMPEDANCE = 376.73031366857  # ohm


def damped_wavenumber(k: float, a: float) -> complex:
    """k + 0.4 i k^(1/3) a^(-2/3): upper-half-plane shift of the wavenumber.

    a is the averaged curvature radius of the contour; with a = L / (2 pi)
    the value is shared by the contour and its equal-perimeter circle.
    """
    if k <= 0 or a <= 0:
        raise ValueError("wavenumber and curvature radius must be positive")
    return complex(k, 0.4 * k ** (1.0 / 3.0) * a ** (-2.0 / 3.0))


@dataclass
class PreconditionedSystem:
    """Assembled operators and composition state for one (mesh, k) problem."""

    mesh: UniformMesh
    k: float
    ktilde: complex
    eta: float
    quad: QuadratureConfig
    single_tilde: GalerkinMatrix
    double_tilde: GalerkinMatrix
    double: GalerkinMatrix
    hyper: GalerkinMatrix
    gram: GalerkinMatrix
    gram_circulant: CirculantOperator
    dense: np.ndarray | None = None
    _circle_ops: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.mesh.n

    # -- matvec path ---------------------------------------------------------
    def apply(self, x: np.ndarray) -> np.ndarray:
        """C x without forming C (order N^2 per product)."""
        if self.dense is not None:
            return self.dense @ x
        g = self.gram.mat
        t = self.gram_circulant.solve(0.5 * (g @ x) - self.double.mat @ x)
        y = 0.5 * (g @ t) + self.double_tilde.mat @ t
        u = self.gram_circulant.solve(self.hyper.mat @ x)
        return y + self.single_tilde.mat @ u

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        if self.dense is not None:
            return self.dense.conj().T @ x
        g = self.gram.mat
        t = self.gram_circulant.solve(0.5 * (g @ x) + self.double_tilde.mat.conj().T @ x)
        y = 0.5 * (g @ t) - self.double.mat.conj().T @ t
        u = self.gram_circulant.solve(self.single_tilde.mat.conj().T @ x)
        return y + self.hyper.mat.conj().T @ u

    # -- dense path ------------------------------------------------------------
    def assemble_dense(self) -> np.ndarray:
        """Form C explicitly (desk scale); cached on the system."""
        if self.dense is None:
            g = self.gram.mat
            m1 = self.gram_circulant.solve(0.5 * g - self.double.mat)
            m2 = self.gram_circulant.solve(self.hyper.mat)
            self.dense = (0.5 * g + self.double_tilde.mat) @ m1 + (
                self.single_tilde.mat @ m2
            )
        return self.dense

    # -- circle counterpart -----------------------------------------------------
    def circle_symbols(self) -> dict[str, CirculantOperator]:
        """The five circulant operators on the equal-perimeter circle."""
        if not self._circle_ops:
            radius = self.mesh.geometry.perimeter / (2.0 * np.pi)
            st, dt, d, nh, g = assemble_circle_operators(
                [
                    ("single_layer", self.ktilde),
                    ("double_layer", self.ktilde),
                    ("double_layer", self.k),
                    ("hypersingular", self.k),
                    ("gram", None),
                ],
                radius,
                self.n,
                self.quad,
            )
            self._circle_ops = {
                "single_tilde": st,
                "double_tilde": dt,
                "double": d,
                "hyper": nh,
                "gram": g,
            }
        return self._circle_ops

    def circle_counterpart(self) -> CirculantOperator:
        ops = self.circle_symbols()
        return compose_system_symbol(
            ops["single_tilde"], ops["double_tilde"], ops["double"], ops["hyper"],
            ops["gram"],
        )

    def difference_apply(self):
        """(matvec, adjoint-matvec) of C - C_c for the skeletonization."""
        cc = self.circle_counterpart()

        def apply(x):
            return self.apply(x) - cc.apply(x)

        def apply_adjoint(x):
            return self.apply_adjoint(x) - cc.apply_adjoint(x)

        return apply, apply_adjoint

    # -- right-hand side ----------------------------------------------------------
    def assemble_rhs(self, excitation) -> np.ndarray:
        """Projected RHS for a plane-wave excitation (physics module)."""
        from .physics import project_excitation

        e, h = project_excitation(self.mesh, excitation, self.quad.regular_order)
        ge = self.gram_circulant.solve(e)
        gh = self.gram_circulant.solve(h)
        return -(1j * self.k / self.eta) * (self.single_tilde.mat @ ge) - (
            0.5 * (self.gram.mat @ gh) + self.double_tilde.mat @ gh
        )


def build_system(
    mesh: UniformMesh,
    k: float,
    eta: float = FREE_SPACE_IMPEDANCE,
    quad: QuadratureConfig | None = None,
    curvature_average: str = "equivalent",
) -> PreconditionedSystem:
    """Assemble the five Galerkin operators for (mesh, k) in one sweep."""
    from .geometry import curvature_stats

    if k <= 0:
        raise ValueError("wavenumber must be positive")
    quad = quad or QuadratureConfig()
    _, a = curvature_stats(mesh.geometry, curvature_average)
    kt = damped_wavenumber(k, a)
    st, dt, d, nh = assemble_operators(
        mesh,
        [
            ("single_layer", kt),
            ("double_layer", kt),
            ("double_layer", k),
            ("hypersingular", k),
        ],
        quad,
    )
    g = gram_matrix(mesh)
    sym = np.fft.fft(g.mat[:, 0])
    logger.info("assembled system N=%d k=%g ktilde=%g%+gj", mesh.n, k, kt.real, kt.imag)
    return PreconditionedSystem(
        mesh=mesh,
        k=float(k),
        ktilde=kt,
        eta=float(eta),
        quad=quad,
        single_tilde=st,
        double_tilde=dt,
        double=d,
        hyper=nh,
        gram=g,
        gram_circulant=CirculantOperator(sym),
        dense=None,
    )


def assemble_C(mesh: UniformMesh, k: float, **kwargs) -> PreconditionedSystem:
    """build_system plus explicit dense C."""
    system = build_system(mesh, k, **kwargs)
    system.assemble_dense()
    return system
