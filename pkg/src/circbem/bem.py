"""Galerkin assembly of 2D Helmholtz boundary operators on uniform meshes.

Basis functions are hat functions in the arclength coordinate; elements are
the exact curved arcs between consecutive nodes, so the element Jacobian is
identically h.  Kernel/sign conventions (time factor exp(-i omega t),
exterior unit normal n, counterclockwise tangent t):

  single_layer   (S f)(x) = int g_k(x,y) f(y) ds_y,  g_k = (i/4) H_0^(1)(k|x-y|)
  double_layer   (D f)(x) = int [d g_k/d n_y](x,y) f(y) ds_y
  hypersingular  N = -(d/dn_x) D, assembled through the integration-by-parts
                 identity  <psi, N phi> =
                 iint g_k(x,y) [psi'(x) phi'(y) - k^2 (t(x).t(y)) psi(x) phi(y)]
  gram           <lambda_i, lambda_j>, periodic tridiagonal, exact integrals

Smooth (non-neighboring) element pairs use tensor Gauss-Legendre; self and
adjacent pairs split the kernel into a -ln|s-s'| part handled by a
log-weighted rule in relative arclength coordinates and a smooth remainder
handled by higher-order Gauss.  One sweep assembles any requested set of
(kind, wavenumber) operators so distance and Hankel evaluations are shared;
unordered pair symmetry halves the kernel work.

Assembly parallelizes naturally over pair blocks; inputs are immutable and
each output matrix is written disjointly.  The current implementation is
sequential (vectorized per diagonal offset).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, UniformMesh
from .quadrature import QuadratureConfig, gauss_unit, log_interval_rule
from .specfun import EULER_GAMMA, bessel_j01, hankel1

OPERATOR_KINDS = ("single_layer", "double_layer", "hypersingular", "gram")
_KIND_CODES = {"single_layer": 1, "double_layer": 2, "hypersingular": 3, "gram": 4}
_MAGIC = b"CBEMMAT1"


class AssemblyError(RuntimeError):
    """Quadrature failure on an element pair."""


@dataclass
class GalerkinMatrix:
    kind: str
    k: complex | None
    mesh: UniformMesh
    mat: np.ndarray

    @property
    def n(self) -> int:
        return self.mesh.n


def gram_matrix(mesh: UniformMesh) -> GalerkinMatrix:
    """Hat-function Gram matrix: exact periodic tridiagonal (2h/3, h/6)."""
    n, h = mesh.n, mesh.h
    mat = np.zeros((n, n))
    idx = np.arange(n)
    mat[idx, idx] = 2.0 * h / 3.0
    mat[idx, (idx + 1) % n] = h / 6.0
    mat[idx, (idx - 1) % n] = h / 6.0
    return GalerkinMatrix("gram", None, mesh, mat)


def _normalize_spec(kind: str, k) -> tuple[str, complex | None]:
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    if kind == "gram":
        return kind, None
    if k is None:
        raise ValueError(f"{kind} assembly requires a wavenumber")
    k = complex(k)
    if k == 0 or k.imag < 0:
        raise ValueError("wavenumber must be nonzero with Im k >= 0")
    return kind, k


def assemble_operator(kind, mesh, k=None, quad=None) -> GalerkinMatrix:
    """Assemble one Galerkin operator; see assemble_operators for batches."""
    return assemble_operators(mesh, [(kind, k)], quad)[0]


def assemble_operators(mesh, specs, quad=None) -> list[GalerkinMatrix]:
    """Assemble several operators in one sweep over element pairs.

    specs is a sequence of (kind, wavenumber) with wavenumber None for the
    Gram matrix.  Sharing the sweep reuses pair geometry and Hankel
    evaluations across operators (e.g. both wavenumbers k and k-tilde).
    """
    quad = quad or QuadratureConfig()
    norm = [_normalize_spec(kind, k) for kind, k in specs]
    out: list[GalerkinMatrix | None] = [None] * len(norm)
    kernel_specs = []
    for i, (kind, k) in enumerate(norm):
        if kind == "gram":
            out[i] = gram_matrix(mesh)
        else:
            kernel_specs.append((i, kind, k))
    if kernel_specs:
        engine = _Engine(mesh, quad)
        mats = engine.assemble([(kind, k) for _, kind, k in kernel_specs])
        for (i, kind, k), mat in zip(kernel_specs, mats):
            out[i] = GalerkinMatrix(kind, k, mesh, mat)
    return out  # type: ignore[return-value]


def assemble_operator_rows(mesh, specs, quad=None) -> list[np.ndarray]:
    """Row 0 (test node 0) of each requested operator.

    Used for circulant completion on circle meshes, with quadrature
    identical to the full assembly.
    """
    quad = quad or QuadratureConfig()
    norm = [_normalize_spec(kind, k) for kind, k in specs]
    rows: list[np.ndarray | None] = [None] * len(norm)
    kernel_specs = []
    for i, (kind, k) in enumerate(norm):
        if kind == "gram":
            row = np.zeros(mesh.n)
            row[0] = 2.0 * mesh.h / 3.0
            row[1] = row[-1] = mesh.h / 6.0
            rows[i] = row
        else:
            kernel_specs.append((i, kind, k))
    if kernel_specs:
        engine = _Engine(mesh, quad)
        got = engine.assemble_rows([(kind, k) for _, kind, k in kernel_specs])
        for (i, _, _), row in zip(kernel_specs, got):
            rows[i] = row
    return rows  # type: ignore[return-value]


def element_pair_integral(kind, mesh, i, j, k=None, quad=None) -> np.ndarray:
    """2x2 local Galerkin block for the element pair (i, j).

    Entry (a, b) couples test node (i+a) mod N with trial node (j+b) mod N.
    Self and adjacent pairs are routed through the singular quadrature.
    """
    quad = quad or QuadratureConfig()
    kind, k = _normalize_spec(kind, k)
    n, h = mesh.n, mesh.h
    i, j = int(i) % n, int(j) % n
    if kind == "gram":
        if i == j:
            return h / 12.0 * np.array([[4.0, 2.0], [2.0, 4.0]])
        if (j - i) % n == 1 or (i - j) % n == 1:
            # shared node only; hat product integrates to zero off-node
            blk = np.zeros((2, 2))
            return blk
        return np.zeros((2, 2))
    engine = _Engine(mesh, quad)
    off = (j - i) % n
    if off == 0:
        return engine.self_blocks([(kind, k)], np.array([i]))[0][0]
    if off == 1:
        fwd, _ = engine.adjacent_blocks([(kind, k)], np.array([i]))
        return fwd[0][0]
    if off == n - 1:
        _, rev = engine.adjacent_blocks([(kind, k)], np.array([j]))
        return rev[0][0]
    blocks, _ = engine.pair_blocks([(kind, k)], np.array([i]), np.array([j]))
    return blocks[0][0]


# ---------------------------------------------------------------------------
# assembly engine
# ---------------------------------------------------------------------------
class _Engine:
    def __init__(self, mesh: UniformMesh, quad: QuadratureConfig):
        self.mesh = mesh
        self.quad = quad
        self.h = mesh.h
        n = quad.regular_order
        xg, wg = gauss_unit(n)
        self._xg, self._wg = xg, wg
        # value and derivative weight matrices (q, 2): hat values / slopes
        self.WA = (mesh.h * wg)[:, None] * np.stack([1.0 - xg, xg], axis=1)
        self.WD = wg[:, None] * np.array([-1.0, 1.0])[None, :]
        xs, ws = gauss_unit(quad.singular_gauss_order)
        self.WA_s = (mesh.h * ws)[:, None] * np.stack([1.0 - xs, xs], axis=1)
        self.WD_s = ws[:, None] * np.array([-1.0, 1.0])[None, :]
        self._xs, self._ws = xs, ws

    # -- kernel helpers ------------------------------------------------------
    @staticmethod
    def _h0(kappa, d):
        return hankel1(0, kappa * d)

    @staticmethod
    def _h1(kappa, d):
        return hankel1(1, kappa * d)

    def _contract(self, K, Wt, Wr):
        # (P,g,h) kernel -> (P,2,2) blocks: Wt^T K Wr batched over P
        return np.matmul(np.matmul(Wt.T[None, :, :], K), Wr[None, :, :])

    # -- regular pairs ---------------------------------------------------------
    def pair_blocks(self, specs, P, Q, want_mirror=False):
        """Blocks for ordered pairs (P[i], Q[i]) of well-separated elements.

        Returns (blocks, mirror_blocks); mirror_blocks[i] are the blocks of
        the reversed pairs (Q[i], P[i]) reusing the same kernel data, or
        None when not requested.
        """
        mesh, q = self.mesh, self.quad.regular_order
        _, X, T, Nrm, _ = mesh.element_frames(q)
        Xp, Xq = X[P], X[Q]
        diff = Xp[:, :, None, :] - Xq[:, None, :, :]
        d = np.sqrt(np.einsum("pgha,pgha->pgh", diff, diff))
        if d.size and d.min() <= 1e-12 * self.h:
            bad = np.unravel_index(np.argmin(d), d.shape)[0]
            raise GeometryError(
                f"distance underflow between elements {P[bad]} and {Q[bad]}: "
                "mesh self-intersects or pairs misclassified"
            )
        h0 = {}
        h1 = {}
        out, out_m = [], []
        for kind, kappa in specs:
            if kind in ("single_layer", "hypersingular") and kappa not in h0:
                h0[kappa] = self._h0(kappa, d)
            if kind == "double_layer" and kappa not in h1:
                h1[kappa] = self._h1(kappa, d)
        for kind, kappa in specs:
            if kind == "single_layer":
                K = 0.25j * h0[kappa]
                b = self._contract(K, self.WA, self.WA)
                bm = b.transpose(0, 2, 1) if want_mirror else None
            elif kind == "hypersingular":
                K = 0.25j * h0[kappa]
                tdot = np.einsum("pga,pha->pgh", T[P], T[Q])
                b = self._contract(K, self.WD, self.WD) - kappa**2 * self._contract(
                    K * tdot, self.WA, self.WA
                )
                bm = b.transpose(0, 2, 1) if want_mirror else None
            elif kind == "double_layer":
                rdot_q = np.einsum("pgha,pha->pgh", diff, Nrm[Q]) / d
                K = 0.25j * kappa * h1[kappa] * rdot_q
                b = self._contract(K, self.WA, self.WA)
                if want_mirror:
                    rdot_p = np.einsum("pgha,pga->pgh", diff, Nrm[P]) / d
                    Km = -0.25j * kappa * h1[kappa] * rdot_p
                    bm = self._contract(Km, self.WA, self.WA).transpose(0, 2, 1)
                else:
                    bm = None
            else:  # pragma: no cover
                raise AssemblyError(f"unsupported kind {kind}")
            out.append(b)
            out_m.append(bm)
        return out, out_m

    # -- singular geometry caches ---------------------------------------------
    def _self_geometry(self):
        key = ("self-geom", self.quad.singular_gauss_order, self.quad.singular_log_order)
        cache = self.mesh._cache
        if key not in cache:
            mesh, h = self.mesh, self.h
            ns, nl = self.quad.singular_gauss_order, self.quad.singular_log_order
            tau_n, tau_w = log_interval_rule(h, ns, nl)
            xg, wg = gauss_unit(ns)
            sig = (h - tau_n)[:, None] * xg[None, :]  # (nt, ns)
            w_in = (h - tau_n)[:, None] * wg[None, :]
            s1 = mesh.s[:, None, None] + sig[None, :, :]
            s2 = s1 + tau_n[None, :, None]
            shape = s1.shape
            p1, t1, n1, c1 = mesh.geometry.frame(s1.ravel())
            p2, t2, n2, c2 = mesh.geometry.frame(s2.ravel())
            cache[key] = {
                "tau": tau_n,
                "tau_w": tau_w,
                "w_in": w_in,
                "u1": sig / h,
                "u2": (sig + tau_n[:, None]) / h,
                "p1": p1.reshape(shape + (2,)),
                "p2": p2.reshape(shape + (2,)),
                "t1": t1.reshape(shape + (2,)),
                "t2": t2.reshape(shape + (2,)),
                "n1": n1.reshape(shape + (2,)),
                "n2": n2.reshape(shape + (2,)),
            }
        return cache[key]

    def _adjacent_geometry(self):
        key = ("adj-geom", self.quad.singular_gauss_order, self.quad.singular_log_order)
        cache = self.mesh._cache
        if key not in cache:
            mesh, h = self.mesh, self.h
            ns, nl = self.quad.singular_gauss_order, self.quad.singular_log_order
            # tau in (0, h): log-weighted rule; tau in (h, 2h): plain Gauss
            # with ln(tau) folded into the weight.  Inner integral over the
            # overlap segment.
            t1n, t1w = log_interval_rule(h, ns, nl)
            xg, wg = gauss_unit(ns)
            t2n = h * (1.0 + xg)
            t2w = h * wg * np.log(t2n)
            tau = np.concatenate([t1n, t2n])
            tau_w = np.concatenate([t1w, t2w])
            # overlap start (relative to s_p) and length per tau
            start = np.where(tau <= h, h - tau, 0.0)
            length = np.where(tau <= h, tau, 2.0 * h - tau)
            sig = start[:, None] + length[:, None] * xg[None, :]  # (nt, ns)
            w_in = length[:, None] * wg[None, :]
            s1 = mesh.s[:, None, None] + sig[None, :, :]
            s2 = s1 + tau[None, :, None]
            shape = s1.shape
            p1, t1, n1, c1 = mesh.geometry.frame(s1.ravel())
            p2, t2, n2, c2 = mesh.geometry.frame(s2.ravel())
            cache[key] = {
                "tau": tau,
                "tau_w": tau_w,
                "w_in": w_in,
                "u1": sig / h,
                "u2": (sig + tau[:, None]) / h - 1.0,
                "p1": p1.reshape(shape + (2,)),
                "p2": p2.reshape(shape + (2,)),
                "t1": t1.reshape(shape + (2,)),
                "t2": t2.reshape(shape + (2,)),
                "n1": n1.reshape(shape + (2,)),
                "n2": n2.reshape(shape + (2,)),
            }
        return cache[key]

    # -- smooth remainders on self/adjacent pairs -------------------------------
    def _smooth_single(self, kappa, d, lntau, diag_mask=None):
        # g_k(d) + (1/2pi) J0(kappa d) ln(tau); finite across the diagonal
        if diag_mask is None:
            j0 = bessel_j01(kappa * d)[0]
            return 0.25j * self._h0(kappa, d) + j0 * lntau / (2.0 * np.pi)
        dd = np.where(diag_mask, 1e-30, d)
        j0 = bessel_j01(kappa * dd)[0]
        val = 0.25j * self._h0(kappa, dd) + j0 * np.where(diag_mask, 0.0, lntau) / (
            2.0 * np.pi
        )
        lim = 0.25j - (EULER_GAMMA + np.log(kappa / 2.0)) / (2.0 * np.pi)
        return np.where(diag_mask, lim, val)

    def _smooth_double(self, kappa, d, lntau, rdot, diag_mask=None, diag_curv=None):
        # (i kappa/4) H1(kappa d) rdot/d + (kappa/2pi) J1(kappa d) (rdot/d) ln(tau)
        if diag_mask is None:
            j1 = bessel_j01(kappa * d)[1]
            u = rdot / d
            return (0.25j * kappa * self._h1(kappa, d) + kappa * j1 * lntau / (2.0 * np.pi)) * u
        dd = np.where(diag_mask, 1e-30, d)
        j1 = bessel_j01(kappa * dd)[1]
        u = rdot / dd
        val = (
            0.25j * kappa * self._h1(kappa, dd)
            + kappa * j1 * np.where(diag_mask, 0.0, lntau) / (2.0 * np.pi)
        ) * u
        return np.where(diag_mask, -diag_curv / (4.0 * np.pi), val)

    # -- self pairs --------------------------------------------------------------
    def self_blocks(self, specs, p_idx):
        """2x2 blocks for the self pairs (p, p), vectorized over p_idx."""
        mesh, h = self.mesh, self.h
        ns = self.quad.singular_gauss_order
        _, X, T, Nrm, Curv = mesh.element_frames(ns)
        Xp, Tp, Np_, Cp = X[p_idx], T[p_idx], Nrm[p_idx], Curv[p_idx]
        diff = Xp[:, :, None, :] - Xp[:, None, :, :]
        d = np.sqrt(np.einsum("pgha,pgha->pgh", diff, diff))
        tau = h * (self._xs[None, :] - self._xs[:, None])  # s2 - s1 pattern
        diag = np.abs(tau) < 1e-300
        lnt = np.log(np.where(diag, 1.0, np.abs(tau)))[None, :, :]
        diag = np.broadcast_to(diag[None, :, :], d.shape)

        G = self._self_geometry()
        dlog = np.sqrt(np.sum((G["p1"][p_idx] - G["p2"][p_idx]) ** 2, axis=-1))
        wlog = G["tau_w"][None, :, None] * G["w_in"][None, :, :]
        u1, u2 = G["u1"], G["u2"]
        phi1 = np.stack([1.0 - u1, u1], axis=0)  # (2, nt, ns)
        phi2 = np.stack([1.0 - u2, u2], axis=0)

        out = []
        for kind, kappa in specs:
            if kind == "single_layer":
                B = self._smooth_single(kappa, d, lnt, diag)
                blocks = self._contract(B, self.WA_s, self.WA_s)
                A = -bessel_j01(kappa * dlog)[0] / (2.0 * np.pi)
                w = wlog * A  # (tau, sigma) are arclength coordinates
                cross = np.einsum(
                    "pts,ats,bts->pab", w, phi1, phi2
                ) + np.einsum("pts,ats,bts->pab", w, phi2, phi1)
                blocks = blocks + cross
            elif kind == "hypersingular":
                B = self._smooth_single(kappa, d, lnt, diag)
                tdot = np.einsum("pga,pha->pgh", Tp, Tp)
                blocks = self._contract(B, self.WD_s, self.WD_s)
                blocks = blocks - kappa**2 * self._contract(
                    B * tdot, self.WA_s, self.WA_s
                )
                A = -bessel_j01(kappa * dlog)[0] / (2.0 * np.pi)
                tlog = np.einsum(
                    "ptsa,ptsa->pts", G["t1"][p_idx], G["t2"][p_idx]
                )
                w = wlog * A
                dsign = np.array([-1.0, 1.0]) / h  # hat slopes
                deriv = 2.0 * np.einsum("pts->p", w)[:, None, None] * (
                    dsign[:, None] * dsign[None, :]
                )
                wv = w * tlog
                cross = np.einsum(
                    "pts,ats,bts->pab", wv, phi1, phi2
                ) + np.einsum("pts,ats,bts->pab", wv, phi2, phi1)
                blocks = blocks + deriv - kappa**2 * cross
            elif kind == "double_layer":
                rdot2 = np.einsum("pgha,pha->pgh", diff, Np_)
                curv_diag = np.broadcast_to(Cp[:, :, None], d.shape)
                B = self._smooth_double(kappa, d, lnt, rdot2, diag, curv_diag)
                blocks = self._contract(B, self.WA_s, self.WA_s)
                r12 = G["p1"][p_idx] - G["p2"][p_idx]
                j1 = bessel_j01(kappa * dlog)[1]
                coef = -kappa * j1 / (2.0 * np.pi) / dlog
                A1 = coef * np.einsum("ptsa,ptsa->pts", r12, G["n2"][p_idx])
                A2 = coef * np.einsum("ptsa,ptsa->pts", -r12, G["n1"][p_idx])
                cross = np.einsum(
                    "pts,ats,bts->pab", wlog * A1, phi1, phi2
                ) + np.einsum("pts,ats,bts->pab", wlog * A2, phi2, phi1)
                blocks = blocks + cross
            else:  # pragma: no cover
                raise AssemblyError(f"unsupported kind {kind}")
            out.append(blocks)
        return out

    # -- adjacent pairs ------------------------------------------------------------
    def adjacent_blocks(self, specs, p_idx):
        """Blocks for pairs (p, p+1) [forward] and (p+1, p) [reverse]."""
        mesh, h = self.mesh, self.h
        n = mesh.n
        ns = self.quad.singular_gauss_order
        _, X, T, Nrm, _ = mesh.element_frames(ns)
        q_idx = (p_idx + 1) % n
        X1, T1, N1 = X[p_idx], T[p_idx], Nrm[p_idx]
        X2, T2, N2 = X[q_idx], T[q_idx], Nrm[q_idx]
        diff = X1[:, :, None, :] - X2[:, None, :, :]
        d = np.sqrt(np.einsum("pgha,pgha->pgh", diff, diff))
        tau = h * (1.0 + self._xs[None, :] - self._xs[:, None])
        lnt = np.log(tau)[None, :, :]

        G = self._adjacent_geometry()
        r12 = G["p1"][p_idx] - G["p2"][p_idx]
        dlog = np.sqrt(np.sum(r12**2, axis=-1))
        wlog = G["tau_w"][None, :, None] * G["w_in"][None, :, :]
        u1, u2 = G["u1"], G["u2"]
        phi1 = np.stack([1.0 - u1, u1], axis=0)
        phi2 = np.stack([1.0 - u2, u2], axis=0)

        fwd_out, rev_out = [], []
        for kind, kappa in specs:
            if kind == "single_layer":
                B = self._smooth_single(kappa, d, lnt)
                fwd = self._contract(B, self.WA_s, self.WA_s)
                A = -bessel_j01(kappa * dlog)[0] / (2.0 * np.pi)
                fwd = fwd + np.einsum("pts,ats,bts->pab", wlog * A, phi1, phi2)
                rev = fwd.transpose(0, 2, 1)
            elif kind == "hypersingular":
                B = self._smooth_single(kappa, d, lnt)
                tdot = np.einsum("pga,pha->pgh", T1, T2)
                fwd = self._contract(B, self.WD_s, self.WD_s)
                fwd = fwd - kappa**2 * self._contract(B * tdot, self.WA_s, self.WA_s)
                A = -bessel_j01(kappa * dlog)[0] / (2.0 * np.pi)
                tlog = np.einsum("ptsa,ptsa->pts", G["t1"][p_idx], G["t2"][p_idx])
                w = wlog * A
                dsign = np.array([-1.0, 1.0]) / h
                deriv = np.einsum("pts->p", w)[:, None, None] * (
                    dsign[:, None] * dsign[None, :]
                )
                fwd = fwd + deriv - kappa**2 * np.einsum(
                    "pts,ats,bts->pab", w * tlog, phi1, phi2
                )
                rev = fwd.transpose(0, 2, 1)
            elif kind == "double_layer":
                rdot_fwd = np.einsum("pgha,pha->pgh", diff, N2)
                B = self._smooth_double(kappa, d, lnt, rdot_fwd)
                fwd = self._contract(B, self.WA_s, self.WA_s)
                j1 = bessel_j01(kappa * dlog)[1]
                coef = -kappa * j1 / (2.0 * np.pi) / dlog
                A1 = coef * np.einsum("ptsa,ptsa->pts", r12, G["n2"][p_idx])
                fwd = fwd + np.einsum("pts,ats,bts->pab", wlog * A1, phi1, phi2)
                # reverse orientation: test on element p+1, trial on p
                rdot_rev = -np.einsum("pgha,pga->pgh", diff, N1)
                Brev = self._smooth_double(kappa, d, lnt, rdot_rev)
                rev = self._contract(Brev, self.WA_s, self.WA_s).transpose(0, 2, 1)
                A2 = coef * np.einsum("ptsa,ptsa->pts", -r12, G["n1"][p_idx])
                rev = rev + np.einsum("pts,ats,bts->pab", wlog * A2, phi2, phi1)
            else:  # pragma: no cover
                raise AssemblyError(f"unsupported kind {kind}")
            fwd_out.append(fwd)
            rev_out.append(rev)
        return fwd_out, rev_out

    # -- full assembly ------------------------------------------------------------
    @staticmethod
    def _scatter(mat, P, Q, blocks):
        n = mat.shape[0]
        for a in (0, 1):
            rows = (P + a) % n
            for b in (0, 1):
                cols = (Q + b) % n
                mat[rows, cols] += blocks[:, a, b]

    def assemble(self, specs):
        mesh = self.mesh
        n = mesh.n
        mats = [np.zeros((n, n), dtype=complex) for _ in specs]
        P = np.arange(n)

        # self and adjacent pairs
        for mat, blocks in zip(mats, self.self_blocks(specs, P)):
            self._scatter(mat, P, P, blocks)
        fwd, rev = self.adjacent_blocks(specs, P)
        Q1 = (P + 1) % n
        for mat, bf, br in zip(mats, fwd, rev):
            self._scatter(mat, P, Q1, bf)
            self._scatter(mat, Q1, P, br)

        # separated pairs, one diagonal offset at a time; mirror blocks give
        # the opposite offset from the same kernel data
        for o in range(2, n // 2 + 1):
            Q = (P + o) % n
            mirror = 2 * o != n
            blocks, mblocks = self.pair_blocks(specs, P, Q, want_mirror=mirror)
            for mat, b, bm in zip(mats, blocks, mblocks):
                self._scatter(mat, P, Q, b)
                if mirror:
                    self._scatter(mat, Q, P, bm)
        return mats

    def assemble_rows(self, specs):
        """Row 0 (test node 0) of each operator."""
        mesh = self.mesh
        n = mesh.n
        rows = [np.zeros(n, dtype=complex) for _ in specs]

        # test elements that touch node 0: element n-1 (local shape 1) and
        # element 0 (local shape 0)
        for e, a_sel in ((n - 1, 1), (0, 0)):
            p = np.array([e])
            for row, blocks in zip(rows, self.self_blocks(specs, p)):
                for b in (0, 1):
                    row[(e + b) % n] += blocks[0, a_sel, b]
            # forward adjacency (e, e+1)
            fwd, _ = self.adjacent_blocks(specs, p)
            for row, bf in zip(rows, fwd):
                for b in (0, 1):
                    row[(e + 1 + b) % n] += bf[0, a_sel, b]
            # reverse adjacency (e, e-1) comes from pair index e-1
            _, rev = self.adjacent_blocks(specs, np.array([(e - 1) % n]))
            for row, br in zip(rows, rev):
                for b in (0, 1):
                    row[(e - 1 + b) % n] += br[0, a_sel, b]
            # separated trial elements
            trial = np.array([q for q in range(n) if (q - e) % n not in (0, 1) and (e - q) % n != 1])
            Ptest = np.full(trial.shape, e)
            blocks, _ = self.pair_blocks(specs, Ptest, trial)
            for row, b in zip(rows, blocks):
                for bb in (0, 1):
                    np.add.at(row, (trial + bb) % n, b[:, a_sel, bb])
        return rows


# ---------------------------------------------------------------------------
# binary dump (debugging aid)
# ---------------------------------------------------------------------------
def save_matrix(gm: GalerkinMatrix, path) -> None:
    """Binary dump: 32-byte header (magic, N, kind, k), then row-major data."""
    k = gm.k if gm.k is not None else 0.0
    header = _MAGIC + struct.pack(
        "<II", gm.n, _KIND_CODES[gm.kind]
    ) + struct.pack("<dd", complex(k).real, complex(k).imag)
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(gm.mat, dtype=np.complex128).tobytes())


def load_matrix(path) -> tuple[np.ndarray, str, complex]:
    with open(path, "rb") as f:
        header = f.read(32)
        if header[:8] != _MAGIC:
            raise ValueError("not a circbem matrix dump")
        n, code = struct.unpack("<II", header[8:16])
        kre, kim = struct.unpack("<dd", header[16:32])
        data = np.frombuffer(f.read(), dtype=np.complex128).reshape(n, n)
    kind = {v: k for k, v in _KIND_CODES.items()}[code]
    return data, kind, complex(kre, kim)
