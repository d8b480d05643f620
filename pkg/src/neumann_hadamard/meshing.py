"""Mapped polar triangulations of star domains and structured rectangle meshes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidResolution, ResolutionBudgetExceeded
from .geometry import TWO_PI, PerturbationFamily, Rectangle, StarDomain

DEFAULT_MAX_VERTICES = 200_000


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Conforming P1 triangulation.

    ``boundary_vertices`` lists the boundary loop counterclockwise and
    ``boundary_params`` the matching boundary parameter (polar angle for
    star domains, arc length for rectangles). ``kind`` selects the O(1)
    point locator: ``"polar"`` or ``"grid"``.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_vertices: np.ndarray
    boundary_params: np.ndarray
    resolution: tuple[int, int]
    domain: object
    kind: str

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def area(self) -> float:
        return float(np.sum(self.signed_areas()))

    def scale(self) -> float:
        ext = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.max(ext))

    @property
    def period(self) -> float:
        return self.domain.period


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


def ring_fractions(n_radial: int) -> np.ndarray:
    """Square-root graded ring positions ``s_i = sqrt(i / n_radial)``, i = 1..n.

    Every ring annulus has the same area; radial spacing at the boundary is
    about ``1 / (2 n_radial)``.
    """
    return np.sqrt(np.arange(1, n_radial + 1) / n_radial)


def generate_mesh(domain: StarDomain, n_radial: int, n_angular: int) -> TriangleMesh:
    """Mapped polar mesh: rings at ``s_i * rho(theta_j)`` plus a central fan.

    Vertex 0 is the center; ring ``i`` (1-based), angle ``j`` is vertex
    ``1 + (i - 1) * n_angular + j``. Triangles: the fan first (``n_angular``),
    then two per quad, ring by ring.
    """
    if n_radial < 1 or n_angular < 3:
        raise InvalidResolution(f"need n_radial >= 1 and n_angular >= 3, got {n_radial}, {n_angular}")
    n_radial, n_angular = int(n_radial), int(n_angular)
    theta = np.arange(n_angular) * (TWO_PI / n_angular)
    rho = domain.radius(theta)
    s = ring_fractions(n_radial)
    cx, cy = domain.center
    r = np.outer(s, rho)
    verts = np.empty((1 + n_radial * n_angular, 2))
    verts[0] = (cx, cy)
    verts[1:, 0] = (cx + r * np.cos(theta)).ravel()
    verts[1:, 1] = (cy + r * np.sin(theta)).ravel()
    # exact boundary ring
    verts[1 + (n_radial - 1) * n_angular :, 0] = cx + rho * np.cos(theta)
    verts[1 + (n_radial - 1) * n_angular :, 1] = cy + rho * np.sin(theta)

    j = np.arange(n_angular)
    jn = (j + 1) % n_angular
    fan = np.stack([np.zeros(n_angular, dtype=np.int64), 1 + j, 1 + jn], axis=1)
    tris = [fan]
    for i in range(1, n_radial):
        a = 1 + (i - 1) * n_angular + j
        b = 1 + (i - 1) * n_angular + jn
        c = 1 + i * n_angular + jn
        d = 1 + i * n_angular + j
        pair = np.empty((2 * n_angular, 3), dtype=np.int64)
        pair[0::2] = np.stack([a, d, c], axis=1)
        pair[1::2] = np.stack([a, c, b], axis=1)
        tris.append(pair)
    tri = np.vstack(tris).astype(np.int64)
    bverts = 1 + (n_radial - 1) * n_angular + j
    mesh = TriangleMesh(verts, tri, bverts.astype(np.int64), theta, (n_radial, n_angular), domain, "polar")
    _freeze(verts, tri, mesh.boundary_vertices, theta)
    return mesh


def rectangle_mesh(rect: Rectangle, nx: int, ny: int) -> TriangleMesh:
    """Structured mesh of ``rect`` with ``nx * ny`` cells, each split along
    its (0,0)-(1,1) diagonal. ``resolution`` is ``(ny, nx)``."""
    if nx < 1 or ny < 1:
        raise InvalidResolution("need nx, ny >= 1")
    x = np.linspace(0.0, rect.width, nx + 1)
    y = np.linspace(0.0, rect.height, ny + 1)
    X, Y = np.meshgrid(x, y, indexing="xy")
    verts = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return j * (nx + 1) + i

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    p00, p10 = vid(ii, jj), vid(ii + 1, jj)
    p11, p01 = vid(ii + 1, jj + 1), vid(ii, jj + 1)
    tri = np.empty((2 * len(ii), 3), dtype=np.int64)
    tri[0::2] = np.stack([p00, p10, p11], axis=1)
    tri[1::2] = np.stack([p00, p11, p01], axis=1)

    bottom = [vid(i, 0) for i in range(nx)]
    right = [vid(nx, j) for j in range(ny)]
    top = [vid(i, ny) for i in range(nx, 0, -1)]
    left = [vid(0, j) for j in range(ny, 0, -1)]
    bverts = np.array(bottom + right + top + left, dtype=np.int64)
    w, h = rect.width, rect.height
    params = np.concatenate([
        x[:-1],
        w + y[:-1],
        w + h + (w - x[::-1][:-1]),
        2 * w + h + (h - y[::-1][:-1]),
    ])
    mesh = TriangleMesh(verts, tri, bverts, params, (ny, nx), rect, "grid")
    _freeze(verts, tri, bverts, params)
    return mesh


def mesh_for(domain, resolution: tuple[int, int]) -> TriangleMesh:
    if isinstance(domain, Rectangle):
        ny, nx = resolution
        return rectangle_mesh(domain, nx, ny)
    return generate_mesh(domain, *resolution)


def refine(resolution: tuple[int, int]) -> tuple[int, int]:
    return (2 * resolution[0], 2 * resolution[1])


def radial_for(n_angular: int) -> int:
    """Rings needed for unit aspect ratio at the boundary of a near-unit disk."""
    return max(1, math.ceil(n_angular / (2.0 * TWO_PI)))


def resolution_for(
    family: PerturbationFamily,
    eps: float,
    elements_per_oscillation: int = 10,
    min_angular: int = 64,
    max_vertices: int = DEFAULT_MAX_VERTICES,
) -> tuple[int, int]:
    """Coarsest mesh resolving ``family``'s member at ``eps``.

    ``n_angular`` is the larger of ``min_angular`` and
    ``elements_per_oscillation`` times the oscillation count, rounded up to a
    multiple of 4; ``n_radial`` follows from :func:`radial_for`.
    """
    if elements_per_oscillation < 4:
        raise InvalidResolution("elements_per_oscillation must be >= 4")
    n_ang = max(min_angular, elements_per_oscillation * family.oscillations(eps))
    n_ang = 4 * math.ceil(n_ang / 4)
    n_rad = radial_for(n_ang)
    count = 1 + n_rad * n_ang
    if count > max_vertices:
        raise ResolutionBudgetExceeded(
            f"{count} vertices (n_radial={n_rad}, n_angular={n_ang}) exceed cap {max_vertices}"
        )
    return n_rad, n_ang


def dump_mesh(mesh: TriangleMesh, path) -> None:
    """Plain-text dump: ``v x y`` lines, then ``t i j k`` lines (0-based)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# vertices {mesh.n_vertices} triangles {mesh.n_triangles}\n")
        for x, y in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"t {i} {j} {k}\n")
