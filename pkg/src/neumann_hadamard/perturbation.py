"""First-order eigenvalue shifts under boundary perturbation.

For a cluster ``Lambda_m`` of multiplicity ``J`` with eigenspace basis
``phi_1..phi_J`` the predicted shifts ``Lambda'_k - Lambda_m`` are the
eigenvalues ``kappa`` of the ``J x J`` pencil ``A v = kappa G v`` with
``G_ij = <phi_i, phi_j>_{L2(Omega_1)}`` and one of

* boundary form  ``A_ij = int_{dOmega} h (grad phi_i . grad phi_j - Lambda_m phi_i phi_j) dS``
* volume form    the same integrand integrated over the shell between the
  two boundaries, *signed*: ``int_{dOmega} int_0^{h} ... dt dS``.

Sign convention: the volume form is a signed shell integral so that a
uniform inward shift of the unit disk (``h = -eps``) predicts
``+2 Lambda eps``, matching the dilation law ``Lambda / (1 - eps)^2``. An
unsigned integral over ``Omega_1 \\ Omega_2`` would give the opposite sign
for inward perturbations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from .errors import AmbiguousCluster, LengthMismatch, QuadratureUnderResolved, ShellNotResolved
from .fem import EigenSolution, boundary_gradient_sq, boundary_point, boundary_trace, interpolate, mass_inner
from .geometry import PerturbationField

BOUNDARY = "boundary"
VOLUME = "volume"
OPERATOR_BOUNDARY = "operator_boundary"

LAMBDA_DIFFERENCE = "lambda_difference"
INVERSE_OPERATOR_DIFFERENCE = "inverse_operator_difference"


@dataclass(frozen=True)
class EigenCluster:
    index: int
    value: float
    multiplicity: int
    members: tuple[int, ...]
    tolerance: float
    gap: float


@dataclass(frozen=True, eq=False)
class PerturbationPrediction:
    form: str
    matrix: np.ndarray
    gram: np.ndarray
    values: np.ndarray
    convention: str
    cluster: EigenCluster


def find_cluster(sol, target: float, rel_tol: float = 1e-3, error_estimate: float = 0.0,
                 complete: bool | None = None) -> EigenCluster:
    """Maximal run of consecutive eigenvalues around the one nearest ``target``.

    Members lie within ``rel_tol * |target|`` of each other. Raises
    :class:`AmbiguousCluster` when the gap to the nearest non-member is below
    three times ``error_estimate``, or when the run reaches the end of a
    truncated spectrum. ``complete`` defaults to False for an
    :class:`EigenSolution` (only the lowest pairs were computed) and True for
    a plain array.
    """
    if complete is None:
        complete = not isinstance(sol, EigenSolution)
    lam = np.asarray(sol.eigenvalues if isinstance(sol, EigenSolution) else sol, dtype=float)
    tol = rel_tol * max(abs(target), 1e-12)
    if not lam[0] - tol <= target <= lam[-1] + tol:
        raise AmbiguousCluster(f"target {target} outside the computed range [{lam[0]:g}, {lam[-1]:g}]")
    i0 = int(np.argmin(np.abs(lam - target)))
    lo = hi = i0
    while lo > 0 and lam[hi] - lam[lo - 1] <= tol:
        lo -= 1
    while hi + 1 < len(lam) and lam[hi + 1] - lam[lo] <= tol:
        hi += 1
    if hi + 1 >= len(lam) and not complete:
        raise AmbiguousCluster("cluster touches the end of the computed spectrum; request more eigenpairs")
    gaps = []
    if hi + 1 < len(lam):
        gaps.append(lam[hi + 1] - lam[hi])
    if lo > 0:
        gaps.append(lam[lo] - lam[lo - 1])
    gap = float(min(gaps)) if gaps else math.inf
    if gap <= tol or gap < 3.0 * error_estimate:
        raise AmbiguousCluster(f"gap {gap:.3e} too small (tol {tol:.1e}, error {error_estimate:.1e})")
    members = tuple(range(lo, hi + 1))
    return EigenCluster(i0, float(np.mean(lam[lo : hi + 1])), len(members), members, tol, gap)


def _solve_pencil(A, G):
    A = 0.5 * (A + A.T)
    G = 0.5 * (G + G.T)
    w = scipy.linalg.eigh(A, G, eigvals_only=True)
    return np.sort(w) + 0.0


def _check_quadrature(n: int, h: PerturbationField, exc):
    need = 8 * max(h.oscillations, 1)
    if n < need:
        raise exc(f"{n} samples < 8 x {h.oscillations} oscillations")


def boundary_matrix(cluster: EigenCluster, sol: EigenSolution, h: PerturbationField, n_quad: int,
                    gradient: str = "tangential") -> np.ndarray:
    """``int h (grad phi_i . grad phi_j - Lambda_m phi_i phi_j) dS`` by the periodic trapezoidal rule."""
    _check_quadrature(n_quad, h, QuadratureUnderResolved)
    mesh = sol.mesh
    ks = list(cluster.members)
    t = np.arange(n_quad) * (mesh.period / n_quad)
    hv = h(t)
    J = len(ks)
    if not np.any(hv):
        return np.zeros((J, J))
    _, _, factor = mesh.domain.frame(t)
    w = hv * factor * (mesh.period / n_quad)
    vals, _ = boundary_trace(sol, ks, t)
    gg = boundary_gradient_sq(sol, ks, t, gradient)
    A = np.einsum("ijp,p->ij", gg, w) - cluster.value * (vals * w) @ vals.T
    return 0.5 * (A + A.T)


def kappa_boundary(cluster: EigenCluster, sol: EigenSolution, h: PerturbationField, n_quad: int,
                   gradient: str = "tangential") -> PerturbationPrediction:
    """Boundary-form prediction of ``Lambda'_k - Lambda_m``."""
    A = boundary_matrix(cluster, sol, h, n_quad, gradient)
    G = mass_inner(sol, list(cluster.members))
    return PerturbationPrediction(BOUNDARY, A, G, _solve_pencil(A, G), LAMBDA_DIFFERENCE, cluster)


def kappa_operator_boundary(cluster: EigenCluster, sol: EigenSolution, h: PerturbationField,
                            n_quad: int) -> PerturbationPrediction:
    """Prediction of ``1/lambda_m - 1/mu_k`` for the shifted operator ``1 - Delta``.

    ``A_op = lambda_m^-2 int h ((1 - lambda_m) phi_i phi_j + grad phi_i . grad phi_j) dS``
    with ``lambda_m = Lambda_m + 1``; this is the boundary-form matrix divided
    by ``lambda_m^2``.
    """
    lam = cluster.value + 1.0
    A = boundary_matrix(cluster, sol, h, n_quad) / lam**2
    G = mass_inner(sol, list(cluster.members))
    return PerturbationPrediction(OPERATOR_BOUNDARY, A, G, _solve_pencil(A, G), INVERSE_OPERATOR_DIFFERENCE, cluster)


def tau_volume(cluster: EigenCluster, sol: EigenSolution, omega2, h: PerturbationField,
               quad: tuple[int, int] = (4, 0)) -> PerturbationPrediction:
    """Signed shell-integral prediction of ``Lambda'_k - Lambda_m``.

    The shell is parameterized by ``(theta, t)`` with ``x = x_b(theta) + t n(theta)``
    and ``t`` between 0 and ``h(theta)``; midpoint rule with ``n_t`` nodes in
    ``t``, trapezoidal with ``n_theta`` nodes in ``theta``. Inside
    ``Omega_1`` (``t < 0``) the P1 value and element gradient are sampled.
    Outside (``t > 0``) each eigenfunction is continued constantly along the
    normal: value = boundary trace, gradient = tangential trace.

    ``omega2`` (optional) is checked against the offset points.
    """
    n_t, n_theta = quad
    mesh = sol.mesh
    if n_theta <= 0:
        n_theta = max(8 * max(h.oscillations, 1), 2 * len(mesh.boundary_vertices))
    _check_quadrature(n_theta, h, ShellNotResolved)
    if n_t < 1:
        raise ShellNotResolved("need at least one node across the shell")
    ks = list(cluster.members)
    J = len(ks)
    G = mass_inner(sol, ks)
    theta = np.arange(n_theta) * (mesh.period / n_theta)
    hv = h(theta)
    if not np.any(hv):
        A = np.zeros((J, J))
        return PerturbationPrediction(VOLUME, A, G, _solve_pencil(A, G), LAMBDA_DIFFERENCE, cluster)
    _, nrm, factor = mesh.domain.frame(theta)
    if omega2 is not None:
        _check_offset(mesh.domain, omega2, theta, hv, h)
    base = boundary_point(mesh, theta)
    lam = cluster.value
    wtheta = factor * (mesh.period / n_theta)
    A = np.zeros((J, J))

    out = hv > 0
    if np.any(out):
        vals, dds = boundary_trace(sol, ks, theta[out])
        w = wtheta[out] * hv[out]
        A += (dds * w) @ dds.T - lam * (vals * w) @ vals.T

    inn = np.flatnonzero(hv < 0)
    if len(inn):
        frac = (np.arange(n_t) + 0.5) / n_t
        t = np.multiply.outer(hv[inn], frac)  # (P, n_t), negative
        pts = base[inn, None, :] + t[..., None] * nrm[inn, None, :]
        vals, grads = interpolate(sol, ks, pts.reshape(-1, 2))
        w = np.repeat(wtheta[inn] * hv[inn] / n_t, n_t)
        A += np.einsum("ipd,jpd,p->ij", grads, grads, w) - lam * (vals * w) @ vals.T
    A = 0.5 * (A + A.T)
    return PerturbationPrediction(VOLUME, A, G, _solve_pencil(A, G), LAMBDA_DIFFERENCE, cluster)


def _check_offset(omega1, omega2, theta, hv, h):
    if not hasattr(omega2, "polar"):
        return
    pts, nrm, _ = omega1.frame(theta)
    phi, r = omega2.polar(pts + hv[:, None] * nrm)
    miss = float(np.max(np.abs(omega2.radius(phi) - r)))
    allowed = max(1e-3 * abs(h.amplitude), 10.0 * getattr(omega2, "fit_residual", 0.0), 1e-12)
    if miss > allowed:
        raise ValueError(f"omega2 is not the normal offset of omega1 by h (mismatch {miss:.2e})")


def operator_identity(lam: float, mu: float) -> float:
    """``lam^-2 (mu - lam - (mu - lam)^2 / mu)``, which equals ``1/lam - 1/mu``.

    Evaluated in exact rational arithmetic from the float inputs (the float
    formula loses up to ``log10(mu/lam)`` digits to cancellation), then
    checked against ``1/lam - 1/mu``.
    """
    if not (lam > 0 and mu > 0):
        raise ValueError("lam and mu must be positive")
    L, U = Fraction(lam), Fraction(mu)
    d = U - L
    value = (d - d * d / U) / (L * L)
    ref = 1 / L - 1 / U
    assert value == ref
    out = float(value)
    r = float(ref)
    assert abs(out - r) <= 1e-14 * abs(r)
    return out


def pair_predictions(predicted, measured):
    """Pair predicted and measured shifts by rank (both sorted ascending)."""
    predicted = list(predicted)
    measured = list(measured)
    if len(predicted) != len(measured):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(measured)} measured shifts")
    return list(zip(sorted(predicted), sorted(measured)))
