"""Circulant operator algebra through spectral symbols.

A circulant matrix M (M[i, j] depends only on (i - j) mod N) is represented
by its symbol: the DFT eigenvalues lambda_m = sum_j c_j exp(-2 pi i m j / N)
of its first column c.  Applies and solves are FFT products.  One DFT
convention is used throughout the package: forward kernel exp(-2 pi i mj/N),
unnormalized (numpy's fft); the inverse carries the 1/N.

The boundary operators of a circle discretized uniformly in arclength are
circulant up to rounding, so one assembled row completes the whole matrix;
this module builds those circle operators and composes the preconditioned
system symbol from the five operator symbols.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Circle, build_uniform_mesh
from .bem import assemble_operator_rows
from .quadrature import QuadratureConfig


class SingularSymbolError(ValueError):
    """Circulant solve rejected: symbol has a (near-)vanishing mode."""

    def __init__(self, mode: int, magnitude: float):
        self.mode = mode
        self.magnitude = magnitude
        super().__init__(
            f"circulant symbol nearly vanishes at mode {mode} "
            f"(|lambda| = {magnitude:.3e}); resonance or singular operator"
        )


@dataclass(frozen=True)
class CirculantOperator:
    """Length-N complex spectral symbol with FFT-backed apply/solve."""

    symbol: np.ndarray

    @property
    def n(self) -> int:
        return self.symbol.shape[0]

    @classmethod
    def from_first_column(cls, col) -> "CirculantOperator":
        return cls(np.fft.fft(np.asarray(col)))

    @classmethod
    def from_row(cls, row) -> "CirculantOperator":
        """From row 0 of the matrix: first column c_i = row[(-i) mod N]."""
        row = np.asarray(row)
        n = row.shape[0]
        return cls(np.fft.fft(row[(-np.arange(n)) % n]))

    @classmethod
    def identity(cls, n: int) -> "CirculantOperator":
        return cls(np.ones(n, dtype=complex))

    def first_column(self) -> np.ndarray:
        return np.fft.ifft(self.symbol)

    def to_dense(self) -> np.ndarray:
        col = self.first_column()
        idx = (np.arange(self.n)[:, None] - np.arange(self.n)[None, :]) % self.n
        return col[idx]

    def apply(self, x: np.ndarray) -> np.ndarray:
        """y = M x; columns of a 2D array are treated as separate vectors."""
        x = np.asarray(x)
        if x.shape[0] != self.n:
            raise ValueError(f"length mismatch: operator {self.n}, vector {x.shape[0]}")
        sym = self.symbol if x.ndim == 1 else self.symbol[:, None]
        return np.fft.ifft(sym * np.fft.fft(x, axis=0), axis=0)

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        sym = np.conj(self.symbol)
        if x.ndim != 1:
            sym = sym[:, None]
        return np.fft.ifft(sym * np.fft.fft(x, axis=0), axis=0)

    def solve(self, b: np.ndarray, tol_sing: float = 1e-12) -> np.ndarray:
        """x with M x = b.  Rejects near-singular symbols mode by mode."""
        b = np.asarray(b)
        if b.shape[0] != self.n:
            raise ValueError(f"length mismatch: operator {self.n}, vector {b.shape[0]}")
        mags = np.abs(self.symbol)
        m = int(np.argmin(mags))
        if mags[m] <= tol_sing * mags.max():
            raise SingularSymbolError(m, float(mags[m]))
        sym = self.symbol if b.ndim == 1 else self.symbol[:, None]
        return np.fft.ifft(np.fft.fft(b, axis=0) / sym, axis=0)


def assemble_circle_operator(
    kind: str,
    radius: float,
    n: int,
    k=None,
    quad: QuadratureConfig | None = None,
) -> CirculantOperator:
    """Circle-contour Galerkin operator as a circulant.

    One row is assembled with the same quadrature as full matrices and
    completed by circularity; radius should be L / (2 pi) of the target
    contour so meshes share the element size h.
    """
    ops = assemble_circle_operators([(kind, k)], radius, n, quad)
    return ops[0]


def assemble_circle_operators(specs, radius, n, quad=None) -> list[CirculantOperator]:
    """Batch variant of assemble_circle_operator sharing one mesh sweep."""
    mesh = build_uniform_mesh(Circle(radius), n)
    rows = assemble_operator_rows(mesh, specs, quad)
    return [CirculantOperator.from_row(r) for r in rows]


def compose_system_symbol(
    single_tilde: CirculantOperator,
    double_tilde: CirculantOperator,
    double: CirculantOperator,
    hyper: CirculantOperator,
    gram: CirculantOperator,
) -> CirculantOperator:
    """Symbol of (G/2 + D~) G^-1 (G/2 - D) + S~ G^-1 N, elementwise.

    All five operators must share N; the Gram symbol is bounded below by
    h/3 analytically but is guarded anyway.
    """
    sizes = {op.n for op in (single_tilde, double_tilde, double, hyper, gram)}
    if len(sizes) != 1:
        raise ValueError(f"symbol lengths differ: {sorted(sizes)}")
    sg = gram.symbol
    if np.min(np.abs(sg)) == 0:
        raise SingularSymbolError(int(np.argmin(np.abs(sg))), 0.0)
    sym = (sg / 2.0 + double_tilde.symbol) / sg * (sg / 2.0 - double.symbol) + (
        single_tilde.symbol / sg * hyper.symbol
    )
    return CirculantOperator(sym)
