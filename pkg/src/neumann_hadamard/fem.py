"""P1 finite elements for the Neumann Laplacian.

The weak form ``int grad u . grad v = Lambda int u v`` is assembled with
piecewise linear hat functions; the Neumann condition is natural, so no
boundary rows are touched.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import DegenerateTriangle, PointOutsideDomain, SolverNoConvergence
from .geometry import TWO_PI
from .meshing import TriangleMesh

log = logging.getLogger(__name__)

DENSE_THRESHOLD = 800


def element_stiffness(p: np.ndarray) -> np.ndarray:
    """Element stiffness ``A * G G^T`` for a triangle with vertices ``p`` (3x2)."""
    return _element_matrices(np.asarray(p, dtype=float)[None])[0][0]


def element_mass(p: np.ndarray) -> np.ndarray:
    """Consistent element mass ``A/12 * (1 + I)``."""
    return _element_matrices(np.asarray(p, dtype=float)[None])[1][0]


def _gradients(p: np.ndarray):
    """Signed areas and constant gradients of the barycentric coordinates."""
    x, y = p[..., 0], p[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    grads = np.stack([gx, gy], axis=-1) / (2.0 * area)[:, None, None]
    return area, grads


def _element_matrices(p: np.ndarray):
    area, g = _gradients(p)
    ke = area[:, None, None] * np.einsum("eik,ejk->eij", g, g)
    me = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))
    return ke, me, area


def assemble(mesh: TriangleMesh):
    """Global stiffness ``K`` and mass ``M`` as CSR matrices.

    Duplicate entries are summed in the fixed COO order, so assembly is
    bit-reproducible.
    """
    p = mesh.vertices[mesh.triangles]
    area = mesh.signed_areas()
    tol = 1e-14 * mesh.scale() ** 2
    bad = np.flatnonzero(area < tol)
    if len(bad):
        raise DegenerateTriangle(f"{len(bad)} triangles with area < {tol:.1e} (first: {bad[0]})")
    ke, me, _ = _element_matrices(p)
    n = mesh.n_vertices
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K = (K + K.T) * 0.5
    M = (M + M.T) * 0.5
    return K.tocsr(), M.tocsr()


@dataclass(frozen=True, eq=False)
class EigenSolution:
    """Smallest Neumann eigenpairs on ``mesh``; ``vectors[:, k]`` is mass-normalized."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    mesh: TriangleMesh
    mass: sp.csr_matrix
    iterations: int = 0

    def __len__(self):
        return len(self.eigenvalues)

    def shifted(self) -> np.ndarray:
        """Eigenvalues of ``1 - Delta``: ``lambda = Lambda + 1``."""
        return self.eigenvalues + 1.0


def _rayleigh_ritz(K, M, X):
    KX = K @ X
    MX = M @ X
    A = X.T @ KX
    B = X.T @ MX
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    w, Q = scipy.linalg.eigh(A, B)
    return w, X @ Q, KX @ Q, MX @ Q


def _start_block(n: int, p: int) -> np.ndarray:
    rng = np.random.default_rng(20240607)
    X = rng.standard_normal((n, p))
    X[:, 0] = 1.0
    return X


def _subspace_iteration(K, M, count, tol, max_iter, shift):
    n = K.shape[0]
    p = min(n - 1, max(2 * count, count + 8))
    lu = splu((K - shift * M).tocsc(), permc_spec="COLAMD")
    X = _start_block(n, p)
    w = None
    res = None
    for it in range(1, max_iter + 1):
        X = lu.solve(np.asarray(M @ X))
        X, _ = np.linalg.qr(X)
        w, X, KX, MX = _rayleigh_ritz(K, M, X)
        R = KX[:, :count] - MX[:, :count] * w[:count]
        scale = np.linalg.norm(KX[:, :count], axis=0) + (np.abs(w[:count]) + abs(shift)) * np.linalg.norm(
            MX[:, :count], axis=0
        )
        res = np.linalg.norm(R, axis=0) / np.maximum(scale, 1e-300)
        if np.all(res < tol):
            return w[:count], X[:, :count], it
    raise SolverNoConvergence(
        f"subspace iteration: max relative residual {np.max(res):.2e} after {max_iter} iterations",
        iterations=max_iter, residuals=res,
    )


def _normalize(vectors, M):
    # deterministic sign: largest-magnitude entry positive
    norms = np.sqrt(np.einsum("ik,ik->k", vectors, M @ vectors))
    vectors = vectors / norms
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def solve_eigs(
    K,
    M,
    count: int,
    tol: float = 1e-8,
    mesh: TriangleMesh | None = None,
    dense_threshold: int = DENSE_THRESHOLD,
    max_iter: int = 300,
    shift: float = -1.0,
) -> EigenSolution:
    """Smallest ``count`` eigenpairs of ``K v = Lambda M v``.

    Small problems go through LAPACK (Cholesky reduction, tridiagonalization,
    QR). Larger ones use block subspace iteration with ``(K - shift M)^-1 M``;
    the default ``shift = -1`` makes that operator the discrete solution
    operator of ``(1 - Delta) W = f`` with Neumann data, whose eigenvalues
    are ``1 / (Lambda + 1)``.
    """
    n = K.shape[0]
    if count < 1 or count >= n:
        raise ValueError(f"need 1 <= count < dimension ({n}), got {count}")
    if n <= dense_threshold:
        w, V = scipy.linalg.eigh(K.toarray(), M.toarray(), subset_by_index=[0, count - 1])
        its = 0
    else:
        w, V, its = _subspace_iteration(K, M, count, tol, max_iter, shift)
    order = np.argsort(w, kind="stable")
    w, V = w[order], V[:, order]
    V = _normalize(V, M)
    log.debug("solve_eigs n=%d count=%d iterations=%d", n, count, its)
    return EigenSolution(w, V, mesh, M, its)


def solve_mesh(mesh: TriangleMesh, count: int, tol: float = 1e-8, **kw) -> EigenSolution:
    K, M = assemble(mesh)
    return solve_eigs(K, M, count, tol, mesh=mesh, **kw)


# ---------------------------------------------------------------------------
# boundary traces


def _loop_arclength(mesh: TriangleMesh):
    pts = mesh.vertices[mesh.boundary_vertices]
    seg = np.hypot(*(np.roll(pts, -1, axis=0) - pts).T)
    return seg


def _periodic_interp(t, params, values, period):
    """Linear interpolation along the closed boundary loop (values: (..., n))."""
    t = np.mod(np.asarray(t, dtype=float), period)
    xp = np.concatenate([params, [params[0] + period]])
    idx = np.clip(np.searchsorted(xp, t, side="right") - 1, 0, len(params) - 1)
    w = (t - xp[idx]) / (xp[idx + 1] - xp[idx])
    v = np.asarray(values)
    vn = np.concatenate([v, v[..., :1]], axis=-1)
    return vn[..., idx] * (1.0 - w) + vn[..., idx + 1] * w


def _members(k):
    scalar = np.isscalar(k) or np.ndim(k) == 0
    return scalar, np.atleast_1d(np.asarray(k, dtype=int))


def nodal_tangential_derivative(sol: EigenSolution, k) -> np.ndarray:
    """Periodic central differences of boundary nodal values w.r.t. arc length."""
    _, ks = _members(k)
    vals = sol.vectors[sol.mesh.boundary_vertices][:, ks].T
    seg = _loop_arclength(sol.mesh)
    span = seg + np.roll(seg, 1)
    return (np.roll(vals, -1, axis=1) - np.roll(vals, 1, axis=1)) / span


def boundary_trace(sol: EigenSolution, k, theta_grid):
    """Values and tangential derivatives of eigenvector(s) ``k`` on the boundary.

    Nodal values along the boundary loop are interpolated linearly to
    ``theta_grid``; ``d/ds`` comes from periodic central differences. With
    ``dphi/dnu = 0`` the boundary gradient is ``(dphi/ds) * tangent``.
    """
    scalar, ks = _members(k)
    mesh = sol.mesh
    vals = sol.vectors[mesh.boundary_vertices][:, ks].T
    dds = nodal_tangential_derivative(sol, ks)
    v = _periodic_interp(theta_grid, mesh.boundary_params, vals, mesh.period)
    d = _periodic_interp(theta_grid, mesh.boundary_params, dds, mesh.period)
    if scalar:
        return v[0], d[0]
    return v, d


def boundary_point(mesh: TriangleMesh, theta) -> np.ndarray:
    """Point on the boundary polygon at parameter ``theta``."""
    pts = mesh.vertices[mesh.boundary_vertices].T
    return _periodic_interp(theta, mesh.boundary_params, pts, mesh.period).T


def boundary_gradient_sq(sol: EigenSolution, ks, theta_grid, mode: str = "tangential"):
    """``grad phi_i . grad phi_j`` on the boundary, shape (J, J, n).

    ``mode="element"`` uses the piecewise-constant gradient of the triangle
    owning the boundary edge instead of the tangential trace (diagnostic).
    """
    _, ks = _members(ks)
    if mode == "tangential":
        _, d = boundary_trace(sol, ks, theta_grid)
        return d[:, None, :] * d[None, :, :]
    if mode != "element":
        raise ValueError("mode must be 'tangential' or 'element'")
    mesh = sol.mesh
    pts = boundary_point(mesh, theta_grid)
    _, nrm, _ = mesh.domain.frame(theta_grid)
    inner = pts - 1e-9 * mesh.scale() * nrm
    _, grads = interpolate(sol, ks, inner)
    return np.einsum("ipd,jpd->ijp", grads, grads)


# ---------------------------------------------------------------------------
# point location and interpolation


def _polar_candidates(mesh: TriangleMesh, pts: np.ndarray) -> np.ndarray:
    n_rad, n_ang = mesh.resolution
    theta, r = mesh.domain.polar(pts)
    rho = mesh.domain.radius(theta)
    s2 = (r / rho) ** 2
    layer = np.clip(np.floor(s2 * n_rad).astype(int), 0, n_rad - 1)
    sector = np.floor(theta / (TWO_PI / n_ang)).astype(int) % n_ang
    cands = []
    for dl in (-1, 0, 1):
        lay = np.clip(layer + dl, 0, n_rad - 1)
        for dj in (-1, 0, 1):
            j = (sector + dj) % n_ang
            fan = j
            ring0 = n_ang + (lay - 1) * 2 * n_ang + 2 * j
            cands.append(np.where(lay == 0, fan, ring0))
            cands.append(np.where(lay == 0, fan, ring0 + 1))
    return np.stack(cands, axis=1)


def _grid_candidates(mesh: TriangleMesh, pts: np.ndarray) -> np.ndarray:
    ny, nx = mesh.resolution
    rect = mesh.domain
    i = np.clip(np.floor(pts[:, 0] / rect.width * nx).astype(int), 0, nx - 1)
    j = np.clip(np.floor(pts[:, 1] / rect.height * ny).astype(int), 0, ny - 1)
    cands = []
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            ii = np.clip(i + di, 0, nx - 1)
            jj = np.clip(j + dj, 0, ny - 1)
            cell = jj * nx + ii
            cands.append(2 * cell)
            cands.append(2 * cell + 1)
    return np.stack(cands, axis=1)


def _barycentric(mesh: TriangleMesh, tri_idx: np.ndarray, pts: np.ndarray):
    p = mesh.vertices[mesh.triangles[tri_idx]]  # (..., 3, 2)
    v0 = p[..., 1, :] - p[..., 0, :]
    v1 = p[..., 2, :] - p[..., 0, :]
    v2 = pts - p[..., 0, :]
    det = v0[..., 0] * v1[..., 1] - v0[..., 1] * v1[..., 0]
    l1 = (v2[..., 0] * v1[..., 1] - v2[..., 1] * v1[..., 0]) / det
    l2 = (v0[..., 0] * v2[..., 1] - v0[..., 1] * v2[..., 0]) / det
    return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)


def locate(mesh: TriangleMesh, points, tol: float = 1e-10):
    """Containing triangle and barycentric coordinates for each point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if mesh.kind == "polar":
        cands = _polar_candidates(mesh, pts)
    elif mesh.kind == "grid":
        cands = _grid_candidates(mesh, pts)
    else:
        cands = np.broadcast_to(np.arange(mesh.n_triangles), (len(pts), mesh.n_triangles))
    lam = _barycentric(mesh, cands, pts[:, None, :])
    score = lam.min(axis=-1)
    best = np.argmax(score, axis=1)
    rows = np.arange(len(pts))
    if np.any(score[rows, best] < -tol):
        bad = int(np.flatnonzero(score[rows, best] < -tol)[0])
        raise PointOutsideDomain(f"point {pts[bad].tolist()} is outside the mesh")
    return cands[rows, best], lam[rows, best]


def interpolate(sol: EigenSolution, k, p):
    """P1 value and element gradient of eigenvector(s) ``k`` at point(s) ``p``.

    Scalar ``k`` and a single point give ``(value, gradient[2])``; arrays give
    values of shape (J, P) and gradients (J, P, 2).
    """
    scalar_k, ks = _members(k)
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    mesh = sol.mesh
    tri, lam = locate(mesh, p)
    nodes = mesh.triangles[tri]  # (P, 3)
    coef = sol.vectors[:, ks][nodes]  # (P, 3, J)
    vals = np.einsum("pa,paj->jp", lam, coef)
    _, g = _gradients(mesh.vertices[nodes])  # (P, 3, 2)
    grads = np.einsum("pad,paj->jpd", g, coef)
    if single:
        vals, grads = vals[:, 0], grads[:, 0]
    if scalar_k:
        return vals[0], grads[0]
    return vals, grads


def richardson(coarse, fine, order: float = 2.0):
    """Extrapolated value and error estimate from two meshes with ratio 2."""
    coarse = np.asarray(coarse, dtype=float)
    fine = np.asarray(fine, dtype=float)
    f = 2.0**order
    return (f * fine - coarse) / (f - 1.0), np.abs(fine - coarse)


def mass_inner(sol: EigenSolution, ks) -> np.ndarray:
    V = sol.vectors[:, ks]
    G = V.T @ (sol.mass @ V)
    return 0.5 * (G + G.T)


__all__ = [
    "assemble", "element_stiffness", "element_mass", "EigenSolution", "solve_eigs",
    "solve_mesh", "boundary_trace", "boundary_point", "boundary_gradient_sq",
    "interpolate", "locate", "richardson", "mass_inner", "nodal_tangential_derivative",
]

