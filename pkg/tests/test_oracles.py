import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import jvp

from neumann_hadamard.oracles import (
    bessel_derivative_zeros,
    dilation_shift,
    disk_cos2_splitting,
    disk_mode,
    disk_neumann_eigs,
    rect_neumann_eigs,
)

PI2 = math.pi**2


def test_unit_square():
    np.testing.assert_allclose(rect_neumann_eigs(1, 1, 4), [0, PI2, PI2, 2 * PI2], rtol=1e-15)


def test_two_by_one():
    np.testing.assert_allclose(rect_neumann_eigs(2, 1, 2), [0, PI2 / 4], rtol=1e-15)


def test_count_one():
    assert rect_neumann_eigs(1, 1, 1) == [0.0]
    assert disk_neumann_eigs(1) == [0.0]


def test_rect_against_brute_force():
    a, b = 1.7, 0.6
    brute = sorted(PI2 * (m * m / a**2 + n * n / b**2) for m in range(40) for n in range(40))
    np.testing.assert_allclose(rect_neumann_eigs(a, b, 60), brute[:60], rtol=1e-14)


def test_rect_rejects_bad_sides():
    with pytest.raises(ValueError):
        rect_neumann_eigs(0, 1, 3)


def test_bessel_derivative_zeros_table():
    # tabulated j'_{n,s}
    assert bessel_derivative_zeros(1, 6)[0] == pytest.approx(1.8411837813, abs=1e-9)
    assert bessel_derivative_zeros(2, 4)[0] == pytest.approx(3.0542369282, abs=1e-9)
    assert bessel_derivative_zeros(0, 8)[0] == pytest.approx(3.8317059702, abs=1e-9)
    for n in (0, 1, 3):
        for z in bessel_derivative_zeros(n, 15):
            assert abs(jvp(n, z)) < 1e-10


def test_disk_spectrum():
    v = disk_neumann_eigs(7)
    assert v[0] == 0.0
    assert v[1] == v[2] == pytest.approx(1.8411837813**2, rel=1e-10)
    assert v[1] == pytest.approx(3.3900, abs=1e-4)
    assert v[3] == v[4] == pytest.approx(9.3284, abs=1e-4)
    assert v[5] == pytest.approx(3.8317059702**2, rel=1e-9)  # simple, angular order 0
    assert v[6] == pytest.approx(4.2011889412**2, rel=1e-9)
    assert v == sorted(v)


def test_disk_radius_scaling():
    np.testing.assert_allclose(disk_neumann_eigs(6, 2.0), np.array(disk_neumann_eigs(6)) / 4, rtol=1e-15)


@pytest.mark.parametrize("n,kind", [(0, "cos"), (1, "cos"), (1, "sin"), (2, "cos"), (3, "sin")])
def test_disk_mode_normalized_and_neumann(n, kind):
    s = 2 if n == 0 else 1
    lam, f = disk_mode(n, s, kind)

    def integrand(r, t):
        return f(r * np.cos(t), r * np.sin(t))[0] ** 2 * r

    norm, _ = integrate.dblquad(integrand, 0, 2 * np.pi, 0, 1, epsabs=1e-10)
    assert norm == pytest.approx(1.0, abs=1e-7)
    t = np.linspace(0, 2 * np.pi, 37)
    _, g = f(np.cos(t), np.sin(t))
    radial = g[:, 0] * np.cos(t) + g[:, 1] * np.sin(t)
    np.testing.assert_allclose(radial, 0.0, atol=1e-9)


def test_disk_mode_gradient_finite_difference():
    _, f = disk_mode(2, 1, "cos")
    p = np.array([0.3, -0.45])
    _, g = f(*p)
    h = 1e-6
    fd = [(f(p[0] + h, p[1])[0] - f(p[0] - h, p[1])[0]) / (2 * h),
          (f(p[0], p[1] + h)[0] - f(p[0], p[1] - h)[0]) / (2 * h)]
    np.testing.assert_allclose(g, fd, atol=1e-7)


def test_disk_mode_is_eigenfunction():
    lam, f = disk_mode(1, 1, "sin")
    p = np.array([0.2, 0.5])
    h = 1e-4
    lap = (f(p[0] + h, p[1])[0] + f(p[0] - h, p[1])[0] + f(p[0], p[1] + h)[0] + f(p[0], p[1] - h)[0]
           - 4 * f(*p)[0]) / h**2
    assert -lap == pytest.approx(lam * f(*p)[0], rel=1e-5)


def test_cos2_splitting_against_quadrature():
    lam, fc = disk_mode(1, 1, "cos")
    _, fs = disk_mode(1, 1, "sin")
    n = 2048
    t = np.arange(n) * 2 * np.pi / n
    x, y = np.cos(t), np.sin(t)
    h = np.cos(2 * t)
    vals, grads = zip(fc(x, y), fs(x, y))
    A = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            integrand = h * ((grads[i] * grads[j]).sum(-1) - lam * vals[i] * vals[j])
            A[i, j] = integrand.sum() * 2 * np.pi / n
    kappa = np.linalg.eigvalsh(A)
    expected = disk_cos2_splitting(lam)
    np.testing.assert_allclose(kappa, [-expected, expected], rtol=1e-10)
    assert expected == pytest.approx(6.227, abs=5e-4)


def test_dilation_shift():
    assert dilation_shift(PI2, 0.01) == pytest.approx(PI2 / 1.01**2 - PI2, rel=1e-15)
