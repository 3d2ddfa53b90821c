import numpy as np
import pytest
import scipy.special as sp

from circbem.specfun import bessel_j01, bessel_jy, green_kernel, hankel1

# frozen with mpmath at 30 digits
H0_AT_1 = 0.7651976865579666 + 0.0882569642156769j
H1_AT_1 = 0.4400505857449335 - 0.7812128213002887j
GREEN_K1_D1 = -0.0220642410539192 + 0.1912994216394916j


def _mp_hankel(order, z):
    import mpmath as mp

    mp.mp.dps = 35 + int(2.2 * abs(np.imag(z)))
    return complex(mp.hankel1(order, mp.mpc(z)))


def test_hankel_reference_values():
    assert abs(hankel1(0, 1.0) - H0_AT_1) < 1e-14
    assert abs(hankel1(1, 1.0) - H1_AT_1) < 1e-14


def test_hankel_accuracy_against_mpmath():
    # spec targets: 1e-12 for |z| <= 20, 1e-10 for 20 < |z| <= 2000
    rng = np.random.default_rng(7)
    for _ in range(60):
        r = np.exp(rng.uniform(np.log(0.05), np.log(2000)))
        im = rng.uniform(0.0, min(40.0, r))
        re = np.sqrt(max(r * r - im * im, 0.0)) * (1 if rng.random() < 0.8 else -1)
        z = re + 1j * im if rng.random() < 0.7 else abs(re) + 0.0
        if z == 0:
            continue
        tol = 1e-12 if abs(z) <= 20 else 1e-10
        for order in (0, 1):
            ref = _mp_hankel(order, z)
            assert abs(complex(hankel1(order, z)) - ref) <= tol * abs(ref)


def test_hankel_upper_half_plane_decay():
    assert abs(hankel1(0, 10 + 5j)) < abs(hankel1(0, 10.0))


def test_hankel_domain_errors():
    with pytest.raises(ValueError):
        hankel1(0, 0.0)
    with pytest.raises(ValueError):
        hankel1(1, 1.0 - 0.5j)
    with pytest.raises(ValueError):
        hankel1(2, 1.0)


def test_hankel_derivative_identity():
    # d H_0 / dz = -H_1, central differences on a complex grid
    rng = np.random.default_rng(3)
    for _ in range(20):
        z = rng.uniform(0.5, 30) + 1j * rng.uniform(0.1, 5)
        eps = 1e-6 * abs(z)
        fd = (hankel1(0, z + eps) - hankel1(0, z - eps)) / (2 * eps)
        assert abs(fd + hankel1(1, z)) <= 1e-6 * abs(hankel1(1, z))


def test_bessel_jy_matches_scipy():
    for x in (0.1, 0.9, 7.3, 57.3, 199.0):
        J, Y = bessel_jy(60, x)
        Jref = sp.jn(np.arange(61), x)
        Yref = sp.yn(np.arange(61), x)
        jscale = np.maximum(np.abs(Jref), np.max(np.abs(Jref)) * 1e-6)
        assert np.max(np.abs(J - Jref) / jscale) < 1e-10
        assert np.max(np.abs(Y - Yref) / np.abs(Yref)) < 1e-10


@pytest.mark.parametrize("x", np.logspace(-1, np.log10(200.0), 9))
def test_wronskian_identity(x):
    # J_m Y'_m - J'_m Y_m = 2 / (pi x), scaled residual below 1e-10
    M = 60
    J, Y = bessel_jy(M, x)
    m = np.arange(1, M)
    Jd = np.concatenate([[-J[1]], J[:-2] - m / x * J[1:-1]])
    Yd = np.concatenate([[-Y[1]], Y[:-2] - m / x * Y[1:-1]])
    resid = (J[:-1] * Yd - Jd * Y[:-1] - 2.0 / (np.pi * x)) * (np.pi * x / 2.0)
    assert np.max(np.abs(resid)) < 1e-10


def test_bessel_j_decays_in_order():
    J, _ = bessel_jy(60, 10.0)
    assert np.all(np.diff(np.abs(J[40:61])) < 0)


def test_bessel_jy_overflow_reported():
    with pytest.raises(ValueError, match="out of range"):
        bessel_jy(400, 0.05)


def test_bessel_j01_series_complex():
    z = np.array([0.3 + 0.1j, 2.0 + 1.0j, 5.0 + 0j, 7.5 + 0.3j])
    j0, j1 = bessel_j01(z)
    assert np.max(np.abs(j0 - sp.jv(0, z)) / np.abs(sp.jv(0, z))) < 1e-12
    assert np.max(np.abs(j1 - sp.jv(1, z)) / np.abs(sp.jv(1, z))) < 1e-12
    with pytest.raises(ValueError):
        bessel_j01(9.0)


def test_green_kernel_value_and_symmetry():
    assert abs(green_kernel(1.0, 1.0) - GREEN_K1_D1) < 1e-14
    # distance-only dependence
    d = np.array([0.3, 1.7, 4.0])
    assert np.allclose(green_kernel(2.0, d), green_kernel(2.0, d[::-1])[::-1])
    with pytest.raises(ValueError):
        green_kernel(1.0, 0.0)


def test_green_kernel_damped_decay():
    k = 2.0 + 0.5j
    vals = np.abs(green_kernel(k, np.array([5.0, 20.0, 60.0])))
    assert vals[1] < vals[0] and vals[2] < vals[1] * 1e-3
