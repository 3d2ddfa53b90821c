import numpy as np
import pytest

from circbem.bem import gram_matrix
from circbem.circulant import CirculantOperator
from circbem.geometry import Circle, Ellipse, build_uniform_mesh
from circbem.physics import MediumParameters, PlaneWaveExcitation
from circbem.system import (
    PreconditionedSystem,
    build_system,
    damped_wavenumber,
)


def test_damped_wavenumber_examples():
    assert damped_wavenumber(8.0, 1.0) == pytest.approx(8 + 0.8j)
    assert damped_wavenumber(27.0, 8.0) == pytest.approx(27 + 0.3j)
    assert damped_wavenumber(1.0, 1.0) == pytest.approx(1 + 0.4j)
    with pytest.raises(ValueError):
        damped_wavenumber(-1.0, 1.0)
    with pytest.raises(ValueError):
        damped_wavenumber(1.0, 0.0)


def _zeroed_system(mesh, k=2.0):
    sys_ = build_system(mesh, k)
    z = np.zeros((mesh.n, mesh.n), dtype=complex)
    for name in ("single_tilde", "double_tilde", "double", "hyper"):
        getattr(sys_, name).mat[:] = z
    sys_.dense = None
    return sys_


def test_dense_reduces_to_quarter_gram_when_operators_vanish():
    mesh = build_uniform_mesh(Circle(1.0), 16)
    sys_ = _zeroed_system(mesh)
    C = sys_.assemble_dense()
    G = gram_matrix(mesh).mat
    assert np.max(np.abs(C - G / 4)) <= 1e-14 * np.max(np.abs(G))


def test_dense_matches_dense_lu_composition(cache):
    sys_ = cache.system("ellipse21", 10.0)
    C = sys_.assemble_dense()
    G = sys_.gram.mat
    Gi = np.linalg.inv(G)
    Cd = (G / 2 + sys_.double_tilde.mat) @ Gi @ (G / 2 - sys_.double.mat) + (
        sys_.single_tilde.mat @ Gi @ sys_.hyper.mat
    )
    num = np.linalg.norm(C - Cd)
    assert num <= 1e-11 * np.linalg.norm(Cd)


def test_matvec_path_matches_dense(cache):
    sys_ = cache.system("ellipse21", 10.0)
    dense = sys_.assemble_dense()
    rng = np.random.default_rng(0)
    saved, sys_.dense = sys_.dense, None
    try:
        for _ in range(3):
            x = rng.standard_normal(sys_.n) + 1j * rng.standard_normal(sys_.n)
            assert np.linalg.norm(sys_.apply(x) - dense @ x) <= 1e-11 * np.linalg.norm(
                dense @ x
            )
            y = sys_.apply_adjoint(x)
            assert np.linalg.norm(y - dense.conj().T @ x) <= 1e-11 * np.linalg.norm(y)
    finally:
        sys_.dense = saved


def test_circle_dense_equals_circulant_counterpart(cache):
    sys_ = cache.system("circle1", 10.0)
    C = sys_.assemble_dense()
    Cc = sys_.circle_counterpart().to_dense()
    assert np.max(np.abs(C - Cc)) <= 1e-11 * np.max(np.abs(C))


def test_rhs_zero_excitation(cache):
    sys_ = cache.system("circle1", 10.0)
    exc = PlaneWaveExcitation(0.3, amplitude=0.0, medium=MediumParameters.free_space(10.0))
    assert np.linalg.norm(sys_.assemble_rhs(exc)) == 0.0


def test_rhs_linearity(cache):
    sys_ = cache.system("circle1", 10.0)
    med = MediumParameters.free_space(10.0)
    alpha = 0.7 - 1.3j
    b1 = sys_.assemble_rhs(PlaneWaveExcitation(0.3, amplitude=1.0, medium=med))
    b2 = sys_.assemble_rhs(PlaneWaveExcitation(0.3, amplitude=alpha, medium=med))
    assert np.linalg.norm(b2 - alpha * b1) <= 1e-12 * np.linalg.norm(b2)


def test_rhs_matches_dense_gram_inverse(cache):
    from circbem.physics import project_excitation

    sys_ = cache.system("circle1", 5.0)
    med = MediumParameters.free_space(5.0)
    exc = PlaneWaveExcitation(0.0, medium=med)
    b = sys_.assemble_rhs(exc)
    e, h = project_excitation(sys_.mesh, exc, sys_.quad.regular_order)
    Gi = np.linalg.inv(sys_.gram.mat)
    ref = -(1j * sys_.k / sys_.eta) * (sys_.single_tilde.mat @ (Gi @ e)) - (
        sys_.gram.mat / 2 + sys_.double_tilde.mat
    ) @ (Gi @ h)
    assert np.linalg.norm(b - ref) <= 1e-12 * np.linalg.norm(ref)


def test_build_system_rejects_bad_wavenumber():
    mesh = build_uniform_mesh(Circle(1.0), 16)
    with pytest.raises(ValueError):
        build_system(mesh, -2.0)


def test_unpreconditioned_combined_field_fixture(cache):
    # The plain combined-field system (1/(ik)) N j + (G/2 - D) j = -e/eta - h
    # is not a supported solver mode, but its solution must agree with the
    # preconditioned one up to discretization error.  Validated against the
    # analytic circle series at ppw = 10.
    from circbem.physics import (
        circle_current_at_angles,
        current_l2_error,
        project_excitation,
    )

    k = 10.0
    sys_ = cache.system("circle1", k)
    exc = PlaneWaveExcitation(0.0, medium=MediumParameters.free_space(k))
    e, h = project_excitation(sys_.mesh, exc, sys_.quad.regular_order)
    A = sys_.hyper.mat / (1j * k) + sys_.gram.mat / 2 - sys_.double.mat
    j_plain = np.linalg.solve(A, -e / sys_.eta - h)
    j_precond = np.linalg.solve(sys_.assemble_dense(), sys_.assemble_rhs(exc))
    ref = lambda s: circle_current_at_angles(1.0, k, exc, s)
    err_plain = current_l2_error(j_plain, ref, sys_.mesh)
    err_precond = current_l2_error(j_precond, ref, sys_.mesh)
    assert err_plain <= 0.05
    assert err_precond <= 0.05
    assert np.linalg.norm(j_plain - j_precond) <= 0.05 * np.linalg.norm(j_precond)
