"""Star-shaped planar domains, boundary perturbations and Hausdorff distance.

A :class:`StarDomain` stores its boundary radius as a truncated trigonometric
series about a fixed center,

    rho(theta) = a0 + sum_n a_n cos(n theta) + b_n sin(n theta).

Boundary perturbations ``h`` are functions of the boundary parameter (the
polar angle for star domains, arc length for rectangles) and displace the
boundary along the outward normal; ``h > 0`` moves the boundary outward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .errors import FitResidualTooLarge, NonPositiveRadius, OffsetNotStarShaped

TWO_PI = 2.0 * math.pi
_POSITIVITY_SAMPLES = 4096


@dataclass(frozen=True)
class StarDomain:
    """Domain ``{c + r (cos t, sin t) : 0 <= r < rho(t)}``.

    Use :func:`make_star_domain` to construct one; it enforces ``rho > 0``.
    """

    a: tuple[float, ...]
    b: tuple[float, ...] = ()
    center: tuple[float, float] = (0.0, 0.0)
    fit_residual: float = 0.0

    period = TWO_PI

    @property
    def order(self) -> int:
        return max(len(self.a) - 1, len(self.b))

    def _coeffs(self):
        n = self.order
        a = np.zeros(n + 1)
        a[: len(self.a)] = self.a
        b = np.zeros(n + 1)
        b[1 : len(self.b) + 1] = self.b
        return a, b

    def radius(self, theta, derivative: int = 0) -> np.ndarray:
        """rho or one of its derivatives (0, 1 or 2) at ``theta``."""
        theta = np.asarray(theta, dtype=float)
        a, b = self._coeffs()
        n = np.arange(1, len(a))
        if derivative == 0:
            out = np.full(theta.shape, a[0])
        else:
            out = np.zeros(theta.shape)
        if len(n) == 0:
            return out
        nt = np.multiply.outer(theta, n)
        c, s = np.cos(nt), np.sin(nt)
        if derivative == 0:
            return out + c @ a[1:] + s @ b[1:]
        if derivative == 1:
            return (-s * n) @ a[1:] + (c * n) @ b[1:]
        if derivative == 2:
            return (-c * n**2) @ a[1:] + (-s * n**2) @ b[1:]
        raise ValueError("derivative must be 0, 1 or 2")

    def frame(self, theta):
        """Boundary points, outward unit normals and arclength factors.

        The arclength factor is ``|dx/dtheta| = sqrt(rho^2 + rho'^2)``.
        """
        theta = np.asarray(theta, dtype=float)
        rho = self.radius(theta)
        drho = self.radius(theta, 1)
        c, s = np.cos(theta), np.sin(theta)
        pts = np.stack([self.center[0] + rho * c, self.center[1] + rho * s], axis=-1)
        tx = drho * c - rho * s
        ty = drho * s + rho * c
        factor = np.hypot(rho, drho)
        normals = np.stack([ty / factor, -tx / factor], axis=-1)
        return pts, normals, factor

    def area(self) -> float:
        a, b = self._coeffs()
        return math.pi * (a[0] ** 2 * 2 + np.sum(a[1:] ** 2) + np.sum(b[1:] ** 2)) / 2.0

    def polar(self, points):
        """Angle in ``[0, 2 pi)`` and distance of ``points`` about the center."""
        p = np.asarray(points, dtype=float)
        dx = p[..., 0] - self.center[0]
        dy = p[..., 1] - self.center[1]
        return np.mod(np.arctan2(dy, dx), TWO_PI), np.hypot(dx, dy)

    def contains(self, points, closed: bool = True) -> np.ndarray:
        theta, r = self.polar(points)
        rho = self.radius(theta)
        return r <= rho if closed else r < rho


def make_star_domain(a, b=(), center=(0.0, 0.0)) -> StarDomain:
    """Validate coefficients and build a :class:`StarDomain`.

    Raises :class:`NonPositiveRadius` if ``rho`` is not positive on a
    4096-point sample of the circle.
    """
    a = tuple(float(x) for x in a)
    b = tuple(float(x) for x in b)
    if len(a) == 0:
        raise NonPositiveRadius("no radius coefficients given")
    if not all(math.isfinite(x) for x in a + b):
        raise NonPositiveRadius("non-finite radius coefficient")
    dom = StarDomain(a, b, (float(center[0]), float(center[1])))
    theta = np.arange(_POSITIVITY_SAMPLES) * (TWO_PI / _POSITIVITY_SAMPLES)
    rmin = float(dom.radius(theta).min())
    if rmin <= 0.0:
        raise NonPositiveRadius(f"sampled minimum radius {rmin:.3e} <= 0")
    return dom


def unit_disk() -> StarDomain:
    return make_star_domain([1.0])


def boundary_frame(domain, theta):
    """Point, outward unit normal and arclength factor at boundary parameter ``theta``."""
    return domain.frame(theta)


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle ``[0, width] x [0, height]``.

    The boundary parameter is arc length, counterclockwise from the origin.
    """

    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise NonPositiveRadius("rectangle sides must be positive")

    @property
    def period(self) -> float:
        return 2.0 * (self.width + self.height)

    @property
    def corners(self) -> tuple[float, ...]:
        w, h = self.width, self.height
        return (0.0, w, w + h, 2 * w + h)

    def frame(self, s):
        s = np.mod(np.asarray(s, dtype=float), self.period)
        w, h = self.width, self.height
        pts = np.empty(s.shape + (2,))
        nrm = np.empty(s.shape + (2,))
        bottom = s < w
        right = (s >= w) & (s < w + h)
        top = (s >= w + h) & (s < 2 * w + h)
        left = s >= 2 * w + h
        pts[bottom] = np.stack([s[bottom], np.zeros(bottom.sum())], -1)
        nrm[bottom] = (0.0, -1.0)
        pts[right] = np.stack([np.full(right.sum(), w), s[right] - w], -1)
        nrm[right] = (1.0, 0.0)
        pts[top] = np.stack([w - (s[top] - w - h), np.full(top.sum(), h)], -1)
        nrm[top] = (0.0, 1.0)
        pts[left] = np.stack([np.zeros(left.sum()), h - (s[left] - 2 * w - h)], -1)
        nrm[left] = (-1.0, 0.0)
        return pts, nrm, np.ones(s.shape)

    def area(self) -> float:
        return self.width * self.height


# ---------------------------------------------------------------------------
# perturbation fields and families


@dataclass(frozen=True)
class PerturbationField:
    """Boundary displacement ``h(t) = amplitude * profile(t)``.

    ``sup_grad`` is the sup of ``|dh/dt|``; on the unit circle ``t`` is arc
    length. ``oscillations`` counts periods of the fastest harmonic over one
    boundary period and drives quadrature/mesh resolution checks.
    """

    amplitude: float
    profile: Callable[[np.ndarray], np.ndarray]
    dprofile: Callable[[np.ndarray], np.ndarray]
    oscillations: int = 1
    sup_abs: float = 0.0
    sup_grad: float = 0.0
    label: str = ""

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.amplitude == 0.0:
            return np.zeros(t.shape)
        return self.amplitude * self.profile(t)

    def derivative(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.amplitude == 0.0:
            return np.zeros(t.shape)
        return self.amplitude * self.dprofile(t)

    def scaled(self, c: float) -> "PerturbationField":
        return PerturbationField(
            self.amplitude * c, self.profile, self.dprofile, self.oscillations,
            abs(c) * self.sup_abs, abs(c) * self.sup_grad, self.label,
        )


def _ones(t):
    return np.ones(np.shape(t))


def _zeros(t):
    return np.zeros(np.shape(t))


def zero_field() -> PerturbationField:
    return PerturbationField(0.0, _ones, _zeros, 0, 0.0, 0.0, "zero")


def constant_field(eps: float) -> PerturbationField:
    """Uniform normal displacement (a dilation on the unit disk)."""
    return PerturbationField(eps, _ones, _zeros, 0, abs(eps), 0.0, "const")


def cosine_field(eps: float, n: int, phase: float = 0.0) -> PerturbationField:
    return PerturbationField(
        eps,
        lambda t: np.cos(n * t + phase),
        lambda t: -n * np.sin(n * t + phase),
        n, abs(eps), abs(eps) * n, f"cos{n}",
    )


def side_shift_field(rect: Rectangle, eps: float) -> PerturbationField:
    """``h = eps`` on the side ``x = width``, zero on the other sides.

    The two corners of the shifted side carry ``eps/2`` so that trapezoidal
    quadrature with nodes on the corners stays second order across the jumps.
    """
    w, hgt = rect.width, rect.height
    lo, hi = w, w + hgt
    tol = 1e-12 * rect.period

    def profile(s):
        s = np.mod(np.asarray(s, dtype=float), rect.period)
        out = np.where((s > lo) & (s < hi), 1.0, 0.0)
        out = np.where(np.abs(s - lo) <= tol, 0.5, out)
        return np.where(np.abs(s - hi) <= tol, 0.5, out)

    return PerturbationField(eps, profile, _zeros, 1, abs(eps), 0.0, "side_shift")


# base profiles g on [0, 2 pi): (g, g', highest harmonic)
def _sawtooth(harmonics: int):
    ks = np.arange(1, 2 * harmonics, 2, dtype=float)
    w = 1.0 / ks**2
    w = w / w.sum()

    def g(x):
        return np.cos(np.multiply.outer(x, ks)) @ w

    def dg(x):
        return -np.sin(np.multiply.outer(x, ks)) @ (w * ks)

    return g, dg, int(ks[-1])


PROFILES = ("cos", "const", "bump", "dent", "sawtooth", "zero")


def base_profile(name: str, harmonics: int = 3):
    if name == "cos":
        return np.cos, lambda x: -np.sin(x), 1
    if name == "const":
        return _ones, _zeros, 0
    if name == "bump":
        return (lambda x: 0.5 * (1.0 + np.cos(x))), (lambda x: -0.5 * np.sin(x)), 1
    if name == "dent":
        return (lambda x: 0.5 * (np.cos(x) - 1.0)), (lambda x: -0.5 * np.sin(x)), 1
    if name == "sawtooth":
        return _sawtooth(harmonics)
    if name == "zero":
        return _zeros, _zeros, 0
    raise ValueError(f"unknown profile {name!r}; expected one of {PROFILES}")


FAMILY_CLASSES = ("smooth", "holder", "c1", "lipschitz")


def _ceil(x: float) -> int:
    # guards against x = 100.00000000000001 from a pow() that should be exact
    return max(1, math.ceil(x - 1e-9 * max(1.0, abs(x))))


@dataclass(frozen=True)
class PerturbationFamily:
    """Amplitude-indexed family ``h_eps(t) = eps * g(N(eps) t)``.

    The frequency law sets how ``sup |h_eps'|`` scales with ``eps``:

    ===========  ==========================  ====================
    class        N(eps)                      sup |h'|
    ===========  ==========================  ====================
    smooth       n0                          O(eps)
    holder       ceil(eps^-(1 - alpha))      Theta(eps^alpha)
    c1           ceil(eps^-1/2)              Theta(eps^1/2)
    lipschitz    ceil(c / eps)               Theta(1)
    ===========  ==========================  ====================
    """

    kind: str = "smooth"
    profile: str = "cos"
    alpha: float = 0.5
    n0: int = 2
    c: float = 1.0
    harmonics: int = 3

    def __post_init__(self):
        if self.kind not in FAMILY_CLASSES:
            raise ValueError(f"unknown family class {self.kind!r}")
        if self.kind == "holder" and not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.n0 < 0 or self.c <= 0 or self.harmonics < 1:
            raise ValueError("n0 >= 0, c > 0 and harmonics >= 1 required")
        base_profile(self.profile, self.harmonics)

    @property
    def exponent(self) -> float:
        """Expected exponent of ``sup |h_eps'|`` in ``eps``."""
        return {"smooth": 1.0, "holder": self.alpha, "c1": 0.5, "lipschitz": 0.0}[self.kind]

    def frequency(self, eps: float) -> int:
        if eps <= 0:
            raise ValueError("eps must be positive")
        if self.kind == "smooth":
            return self.n0
        if self.kind == "holder":
            return _ceil(eps ** -(1.0 - self.alpha))
        if self.kind == "c1":
            return _ceil(eps**-0.5)
        return _ceil(self.c / eps)

    def oscillations(self, eps: float) -> int:
        top = base_profile(self.profile, self.harmonics)[2]
        return self.frequency(eps) * top

    def describe(self) -> str:
        extra = {"smooth": f"n0={self.n0}", "holder": f"alpha={self.alpha:g}",
                 "c1": "", "lipschitz": f"c={self.c:g}"}[self.kind]
        if self.profile == "sawtooth":
            extra += f" harmonics={self.harmonics}"
        return f"{self.kind}({self.profile}{', ' + extra.strip() if extra.strip() else ''})"


def family_field(family: PerturbationFamily, eps: float) -> PerturbationField:
    """The member ``h_eps`` of ``family``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = family.frequency(eps)
    g, dg, top = base_profile(family.profile, family.harmonics)
    x = np.arange(4096) * (TWO_PI / 4096)
    gmax = float(np.max(np.abs(g(x))))
    dgmax = float(np.max(np.abs(dg(x))))
    if top == 0:
        return PerturbationField(eps, g, dg, 0, eps * gmax, 0.0, family.describe())
    return PerturbationField(
        eps,
        lambda t: g(n * np.asarray(t, dtype=float)),
        lambda t: n * dg(n * np.asarray(t, dtype=float)),
        n * top,
        eps * gmax,
        eps * n * dgmax,
        family.describe(),
    )


# ---------------------------------------------------------------------------
# normal offset and Hausdorff distance


def _fit_uniform(r: np.ndarray, order: int):
    m = len(r)
    spec = np.fft.rfft(r) / m
    order = min(order, m // 2 - 1)
    a = [spec[0].real] + list(2.0 * spec[1 : order + 1].real)
    b = list(-2.0 * spec[1 : order + 1].imag)
    return a, b


def _fit_lstsq(phi: np.ndarray, r: np.ndarray, order: int):
    nt = np.multiply.outer(phi, np.arange(1, order + 1))
    design = np.hstack([np.ones((len(phi), 1)), np.cos(nt), np.sin(nt)])
    coef, *_ = np.linalg.lstsq(design, r, rcond=None)
    return list(coef[: order + 1]), list(coef[order + 1 :])


def _offset_polar(domain: StarDomain, h: PerturbationField, theta):
    pts, nrm, _ = domain.frame(theta)
    q = pts + h(theta)[:, None] * nrm
    phi, r = domain.polar(q)
    return phi, r


def apply_normal_offset(domain: StarDomain, h: PerturbationField, fit_order: int) -> StarDomain:
    """Offset ``domain``'s boundary by ``h`` along the normal and refit.

    The offset curve ``x + h(theta(x)) n(x)`` must stay star-shaped about the
    center; it is re-expressed as a radius series of order ``fit_order``. The
    max deviation between the fitted radius and the offset curve (measured at
    points interleaved with the fitting samples) is stored in
    ``fit_residual`` and must be below ``1e-3 * h.amplitude``.
    """
    if h.amplitude == 0.0 or h.sup_abs == 0.0:
        return domain
    if fit_order < 0:
        raise ValueError("fit_order must be non-negative")
    m = max(4096, 8 * fit_order)
    m += m % 2
    theta = np.arange(m) * (TWO_PI / m)
    phi, r = _offset_polar(domain, h, theta)
    dev = np.angle(np.exp(1j * (phi - theta)))
    if np.any(r <= 0) or np.max(np.abs(dev)) >= 0.5 * math.pi:
        raise OffsetNotStarShaped("offset curve passes through the center")
    steps = np.diff(np.unwrap(np.concatenate([phi, phi[:1]])))
    if np.any(steps <= 0) or abs(np.sum(steps) - TWO_PI) > 1e-8:
        raise OffsetNotStarShaped("offset curve is not star-shaped about the center")

    if np.max(np.abs(dev)) < 1e-12:
        a, b = _fit_uniform(r, fit_order)
    else:
        a, b = _fit_lstsq(phi, r, fit_order)
    fitted = StarDomain(tuple(a), tuple(b), domain.center)

    mid = theta + math.pi / m
    phi_c, r_c = _offset_polar(domain, h, mid)
    residual = float(np.max(np.abs(fitted.radius(phi_c) - r_c)))
    residual = max(residual, float(np.max(np.abs(fitted.radius(phi) - r))))
    if residual >= 1e-3 * abs(h.amplitude):
        raise FitResidualTooLarge(
            f"fit residual {residual:.3e} >= 1e-3 * eps with fit_order={fit_order}"
        )
    out = make_star_domain(a, b, domain.center)
    return StarDomain(out.a, out.b, out.center, residual)


def _polyline_distance(points: np.ndarray, poly: np.ndarray, tree: cKDTree) -> np.ndarray:
    """Distance from ``points`` to the closed polygon with vertices ``poly``."""
    n = len(poly)
    _, idx = tree.query(points)
    best = np.full(len(points), np.inf)
    for shift in (-1, 0):
        i0 = (idx + shift) % n
        p0, p1 = poly[i0], poly[(i0 + 1) % n]
        seg = p1 - p0
        ll = np.einsum("ij,ij->i", seg, seg)
        t = np.clip(np.einsum("ij,ij->i", points - p0, seg) / ll, 0.0, 1.0)
        proj = p0 + t[:, None] * seg
        best = np.minimum(best, np.hypot(*(points - proj).T))
    return best


def hausdorff_distance(omega1: StarDomain, omega2: StarDomain, n_samples: int = 4096) -> float:
    """Hausdorff distance between the closed sets ``omega1`` and ``omega2``.

    ``sup_{x in omega1} dist(x, omega2)`` is attained on the part of the
    boundary of ``omega1`` lying outside ``omega2``; the distance is measured
    to the boundary polygon of ``omega2`` through ``n_samples`` vertices.
    """
    if omega1.center != omega2.center:
        raise ValueError("domains must share a center")
    theta = np.arange(n_samples) * (TWO_PI / n_samples)
    p1 = omega1.frame(theta)[0]
    p2 = omega2.frame(theta)[0]
    d = 0.0
    for src, dst, dom in ((p1, p2, omega2), (p2, p1, omega1)):
        outside = ~dom.contains(src)
        if not np.any(outside):
            continue
        dist = _polyline_distance(src[outside], dst, cKDTree(dst))
        d = max(d, float(dist.max()))
    return d
