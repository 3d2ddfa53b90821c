import numpy as np
import pytest
from scipy.integrate import quad

from circbem.bem import (
    _Engine,
    assemble_operator,
    assemble_operator_rows,
    assemble_operators,
    element_pair_integral,
    gram_matrix,
    load_matrix,
    save_matrix,
)
from circbem.geometry import Circle, Ellipse, GeometryError, build_uniform_mesh
from circbem.quadrature import QuadratureConfig
from circbem.specfun import hankel1


@pytest.fixture(scope="module")
def circle_mesh():
    return build_uniform_mesh(Circle(1.0), 64)


@pytest.fixture(scope="module")
def circle_ops(circle_mesh):
    k, kt = 3.0, 3.0 + 0.6j
    ops = assemble_operators(
        circle_mesh,
        [
            ("single_layer", k),
            ("double_layer", k),
            ("hypersingular", k),
            ("single_layer", kt),
        ],
    )
    return {t: g for t, g in zip(("S", "D", "N", "St"), ops)}


# ---------------------------------------------------------------------------
# Gram matrix
# ---------------------------------------------------------------------------
def test_gram_entries_and_row_sums():
    mesh = build_uniform_mesh(Ellipse(2.0, 1.0), 40)
    G = gram_matrix(mesh).mat
    h = mesh.h
    assert np.allclose(np.diag(G), 2 * h / 3, atol=1e-15)
    assert abs(G[3, 4] - h / 6) < 1e-15 and abs(G[0, 39] - h / 6) < 1e-15
    assert np.max(np.abs(G.sum(axis=1) - h)) < 1e-14
    assert abs(G[2, 7]) == 0.0
    # symbol h(2 + cos theta)/3 >= h/3: positive definite
    sym = np.fft.fft(G[:, 0]).real
    theta = 2 * np.pi * np.arange(mesh.n) / mesh.n
    assert np.max(np.abs(sym - h * (2 + np.cos(theta)) / 3)) < 1e-14
    assert sym.min() >= h / 3 - 1e-14


# ---------------------------------------------------------------------------
# element-pair quadrature vs independent adaptive oracle
# ---------------------------------------------------------------------------
def _scalar_frame(mesh):
    """Fast scalar-geometry closure independent of the assembly paths."""
    geom = mesh.geometry
    if isinstance(geom, Circle):
        R = geom.radius

        def frame(s):
            ang = s / R
            c, si = np.cos(ang), np.sin(ang)
            return np.array([R * c, R * si]), np.array([-si, c]), np.array([c, si])

        return frame
    from scipy.interpolate import CubicSpline

    L = geom.perimeter
    sg = np.linspace(0, L, 20001)
    p = geom.position(sg[:-1])
    p = np.vstack([p, p[:1]])
    sx = CubicSpline(sg, p[:, 0], bc_type="periodic")
    sy = CubicSpline(sg, p[:, 1], bc_type="periodic")

    def frame(s):
        s = np.mod(s, L)
        x = np.array([sx(s), sy(s)])
        t = np.array([sx(s, 1), sy(s, 1)])
        t /= np.hypot(t[0], t[1])
        return x, t, np.array([t[1], -t[0]])

    return frame


def _oracle_block(kind, mesh, p, q, k):
    """Nested adaptive quadrature with the singular line flagged to quad."""
    h = mesh.h
    sp_, sq_ = mesh.s[p], mesh.s[q]
    frame = _scalar_frame(mesh)

    def f(u, v, a, b):
        x, tx, _ = frame(sp_ + h * u)
        y, ty, ny = frame(sq_ + h * v)
        d = np.hypot(x[0] - y[0], x[1] - y[1])
        pa, pb = (1 - u, u)[a], (1 - v, v)[b]
        if kind == "single_layer":
            return 0.25j * hankel1(0, k * d) * pa * pb * h * h
        if kind == "double_layer":
            rd = (x[0] - y[0]) * ny[0] + (x[1] - y[1]) * ny[1]
            return 0.25j * k * hankel1(1, k * d) * rd / d * pa * pb * h * h
        da, db = (-1 / h, 1 / h)[a], (-1 / h, 1 / h)[b]
        tt = tx @ ty
        return 0.25j * hankel1(0, k * d) * (da * db - k * k * tt * pa * pb) * h * h

    out = np.zeros((2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            def inner(u, part):
                pts = [u] if p == q and 0 < u < 1 else None
                fn = lambda v: getattr(f(u, v, a, b), part)
                val, _ = quad(fn, 0, 1, points=pts, limit=120, epsabs=1e-12, epsrel=1e-11)
                return val

            re, _ = quad(lambda u: inner(u, "real"), 0, 1, limit=120, epsabs=1e-11, epsrel=1e-10)
            im, _ = quad(lambda u: inner(u, "imag"), 0, 1, limit=120, epsabs=1e-11, epsrel=1e-10)
            out[a, b] = re + 1j * im
    return out


@pytest.mark.parametrize("geom,kind,pair", [
    ("circle", "single_layer", (3, 3)),    # self pair, log singularity
    ("circle", "single_layer", (3, 4)),    # adjacent forward
    ("circle", "hypersingular", (3, 3)),
    # ellipse exercises the source-normal orientations where the circle's
    # symmetry could mask a swap
    ("ellipse", "double_layer", (3, 4)),
    ("ellipse", "double_layer", (4, 3)),
])
def test_pair_blocks_match_adaptive_oracle(geom, kind, pair):
    curve = Circle(1.0) if geom == "circle" else Ellipse(2.0, 1.0)
    mesh = build_uniform_mesh(curve, 16)
    k = 1.0
    mine = element_pair_integral(kind, mesh, *pair, k)
    ref = _oracle_block(kind, mesh, *pair, k)
    scale = np.max(np.abs(ref))
    assert np.max(np.abs(mine - ref)) < 1e-8 * scale


def test_single_layer_self_entry_unit_circle():
    # assembled S[0,0] at N=64, k=1 vs the oracle summed over the four
    # element pairs in the support of the two hat functions
    mesh = build_uniform_mesh(Circle(1.0), 64)
    S = assemble_operator("single_layer", mesh, 1.0).mat
    n = mesh.n
    ref = 0
    for ei, a in ((n - 1, 1), (0, 0)):
        for ej, b in ((n - 1, 1), (0, 0)):
            ref += _oracle_block("single_layer", mesh, ei, ej, 1.0)[a, b]
    assert abs(S[0, 0] - ref) < 1e-9 * abs(ref)


def test_separated_pair_quadrature_convergence():
    # Gauss order q vs q+4 on an analytic integrand, plus design-order decay
    mesh = build_uniform_mesh(Ellipse(2.0, 1.0), 32)
    k = 2.0
    ref = element_pair_integral(
        "single_layer", mesh, 3, 12, k, QuadratureConfig(regular_order=24)
    )
    prev = None
    for q in (2, 4, 6, 8):
        val = element_pair_integral(
            "single_layer", mesh, 3, 12, k, QuadratureConfig(regular_order=q)
        )
        err = np.max(np.abs(val - ref)) / np.max(np.abs(ref))
        if prev is not None:
            assert err < prev
        prev = err
    q8 = element_pair_integral(
        "single_layer", mesh, 3, 12, k, QuadratureConfig(regular_order=8)
    )
    q12 = element_pair_integral(
        "single_layer", mesh, 3, 12, k, QuadratureConfig(regular_order=12)
    )
    assert np.max(np.abs(q8 - q12)) < 1e-10 * np.max(np.abs(q12))


def test_double_layer_flat_limit_product():
    # far-separated small elements: block ~ kernel(midpoints) x hat weights
    mesh = build_uniform_mesh(Circle(1.0), 65536)
    k = 1e-6
    i, j = 0, 32768
    blk = element_pair_integral("double_layer", mesh, i, j, k)
    h = mesh.h
    smid_i, smid_j = mesh.s[i] + h / 2, mesh.s[j] + h / 2
    x = mesh.geometry.position(np.array([smid_i]))[0]
    y, _, ny, _ = mesh.geometry.frame(np.array([smid_j]))
    y, ny = y[0], ny[0]
    d = np.linalg.norm(x - y)
    kern = 0.25j * k * hankel1(1, k * d) * np.dot(x - y, ny) / d
    ref = kern * (h / 2) ** 2
    assert np.max(np.abs(blk - ref)) < 1e-8 * abs(ref)


def test_pair_kernel_symmetry_single_layer():
    mesh = build_uniform_mesh(Ellipse(2.0, 1.0), 24)
    bij = element_pair_integral("single_layer", mesh, 2, 9, 2.0)
    bji = element_pair_integral("single_layer", mesh, 9, 2, 2.0)
    assert np.max(np.abs(bij - bji.T)) < 1e-13 * np.max(np.abs(bij))


# ---------------------------------------------------------------------------
# assembled-matrix invariants
# ---------------------------------------------------------------------------
def test_complex_symmetry(circle_ops):
    for t in ("S", "N", "St"):
        M = circle_ops[t].mat
        assert np.max(np.abs(M - M.T)) <= 1e-10 * np.max(np.abs(M))


def test_circulant_structure_on_circle(circle_ops):
    for t in ("S", "D", "N"):
        M = circle_ops[t].mat
        n = M.shape[0]
        c0 = M[:, 0]
        dev = max(
            np.max(np.abs(M[:, j] - np.roll(c0, j))) for j in range(0, n, 7)
        )
        assert dev <= 1e-12 * np.max(np.abs(M))


def test_ellipse_assembly_is_not_circulant():
    mesh = build_uniform_mesh(Ellipse(2.0, 1.0), 32)
    S = assemble_operator("single_layer", mesh, 2.0).mat
    assert np.max(np.abs(S[:, 1] - np.roll(S[:, 0], 1))) > 1e-6 * np.max(np.abs(S))


def test_row_assembly_matches_full(circle_mesh, circle_ops):
    rows = assemble_operator_rows(
        circle_mesh,
        [("single_layer", 3.0), ("double_layer", 3.0), ("hypersingular", 3.0), ("gram", None)],
    )
    for row, t in zip(rows[:3], ("S", "D", "N")):
        M = circle_ops[t].mat
        assert np.max(np.abs(row - M[0])) <= 1e-13 * np.max(np.abs(M))
    G = gram_matrix(circle_mesh).mat
    assert np.max(np.abs(rows[3] - G[0])) < 1e-15


def test_entry_equals_scattered_pair_blocks(circle_mesh, circle_ops):
    n = circle_mesh.n
    for t, kind in (("S", "single_layer"), ("D", "double_layer"), ("N", "hypersingular")):
        M = circle_ops[t].mat
        for (i, j) in ((0, 0), (5, 6), (10, 30)):
            val = 0
            for ei, a in (((i - 1) % n, 1), (i, 0)):
                for ej, b in (((j - 1) % n, 1), (j, 0)):
                    val += element_pair_integral(kind, circle_mesh, ei, ej, 3.0)[a, b]
            assert abs(M[i, j] - val) < 1e-12 * np.max(np.abs(M))


def test_misclassified_pair_distance_underflow(circle_mesh):
    engine = _Engine(circle_mesh, QuadratureConfig())
    with pytest.raises(GeometryError, match="underflow"):
        engine.pair_blocks([("single_layer", 1.0)], np.array([3]), np.array([3]))


def test_wavenumber_validation(circle_mesh):
    with pytest.raises(ValueError):
        assemble_operator("single_layer", circle_mesh, None)
    with pytest.raises(ValueError):
        assemble_operator("single_layer", circle_mesh, 1.0 - 0.2j)
    with pytest.raises(ValueError):
        assemble_operator("mass", circle_mesh, 1.0)


def test_matrix_dump_roundtrip(tmp_path, circle_ops):
    gm = circle_ops["St"]
    path = tmp_path / "st.bin"
    save_matrix(gm, path)
    data, kind, k = load_matrix(path)
    assert kind == "single_layer"
    assert k == pytest.approx(3.0 + 0.6j)
    assert np.array_equal(data, gm.mat)
