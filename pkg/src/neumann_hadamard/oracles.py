"""Closed-form Neumann spectra used as references."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import jv, jvp


def rect_neumann_eigs(a: float, b: float, count: int) -> list[float]:
    """Smallest ``count`` values of ``pi^2 (m^2/a^2 + n^2/b^2)``, ``m, n >= 0``."""
    if a <= 0 or b <= 0:
        raise ValueError("rectangle sides must be positive")
    if count < 1:
        return []
    mmax = nmax = int(math.ceil(math.sqrt(count))) + 1
    while True:
        vals = sorted(
            math.pi**2 * (m * m / a**2 + n * n / b**2)
            for m in range(mmax + 1)
            for n in range(nmax + 1)
        )
        cut = min(math.pi**2 * (mmax + 1) ** 2 / a**2, math.pi**2 * (nmax + 1) ** 2 / b**2)
        if len(vals) >= count and vals[count - 1] < cut:
            return vals[:count]
        mmax *= 2
        nmax *= 2


def _bisect(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    flo = f(lo)
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bessel_derivative_zeros(n: int, xmax: float, step: float = 0.05) -> list[float]:
    """Positive zeros of ``J_n'`` below ``xmax`` (bracketing scan + bisection)."""
    def f(x):
        return float(jvp(n, x))

    roots = []
    x0 = 1e-6
    f0 = f(x0)
    x = x0
    while x < xmax:
        x1 = min(x + step, xmax)
        f1 = f(x1)
        if f0 == 0.0:
            roots.append(x)
        elif (f0 > 0) != (f1 > 0):
            roots.append(_bisect(f, x, x1))
        x, f0 = x1, f1
    return roots


def disk_neumann_eigs(count: int, radius: float = 1.0) -> list[float]:
    """Smallest ``count`` Neumann eigenvalues of a disk, with multiplicity.

    ``Lambda = (j'_{n,s} / R)^2`` over zeros of ``J_n'``; orders ``n >= 1``
    are doubled (cos and sin modes); ``0`` is the constant mode.
    """
    if count < 1:
        return []
    xmax = 4.0
    while True:
        vals = [0.0]
        for n in range(0, int(xmax) + 2):
            for z in bessel_derivative_zeros(n, xmax):
                vals.extend([z * z] * (1 if n == 0 else 2))
        vals.sort()
        # all zeros below xmax are found once n exceeds xmax (j'_{n,1} > n)
        if len(vals) >= count and vals[count - 1] < xmax**2:
            return [v / radius**2 for v in vals[:count]]
        xmax *= 1.5


def disk_mode(n: int, s: int = 1, kind: str = "cos"):
    """Mass-normalized Neumann eigenfunction of the unit disk.

    Returns ``(Lambda, f)`` where ``f(x, y) -> (value, grad)`` and the
    angular factor is ``cos(n theta)`` or ``sin(n theta)``.
    """
    zeros = bessel_derivative_zeros(n, 10.0 + 2 * n + 4 * s)
    k = zeros[s - 1]
    # int_0^1 J_n(kr)^2 r dr = (1 - n^2/k^2) J_n(k)^2 / 2 when J_n'(k) = 0
    radial = 0.5 * (1.0 - n * n / (k * k)) * jv(n, k) ** 2
    ang = 2.0 * math.pi if n == 0 else math.pi
    c = 1.0 / math.sqrt(radial * ang)

    def f(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        t = np.arctan2(y, x)
        if kind == "cos":
            a, da = np.cos(n * t), -n * np.sin(n * t)
        else:
            a, da = np.sin(n * t), n * np.cos(n * t)
        J = jv(n, k * r)
        dJ = k * jvp(n, k * r)
        with np.errstate(invalid="ignore", divide="ignore"):
            jr = np.where(r > 0, J / np.where(r > 0, r, 1.0), 0.5 * k if n == 1 else 0.0)
        val = c * J * a
        gr = c * dJ * a
        gt = c * jr * da
        gx = gr * np.cos(t) - gt * np.sin(t)
        gy = gr * np.sin(t) + gt * np.cos(t)
        return val, np.stack([gx, gy], axis=-1)

    return k * k, f


def dilation_shift(value: float, eps: float) -> float:
    """Exact ``Lambda((1 + eps) Omega) - Lambda(Omega)``."""
    return value / (1.0 + eps) ** 2 - value


def disk_cos2_splitting(value: float) -> float:
    """``kappa / eps`` magnitude for ``h = eps cos 2 theta`` on an angular-order-1 cluster.

    ``Lambda (Lambda + 1) / (Lambda - 1)``, obtained from the two analytic
    modes ``J_1(k r) cos theta`` and ``J_1(k r) sin theta``.
    """
    return value * (value + 1.0) / (value - 1.0)
