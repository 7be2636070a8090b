"""Uniform triangulations of axis-aligned rectangles with lumped quadrature.

Each grid cell is split along its lower-left-to-upper-right diagonal.  All
zeroth-order integrands use the lumped vertex rule (node weight = one third
of the area of the triangles touching the node; exact for piecewise-linear
integrands), gradient integrands use the one-point centroid rule, and
boundary integrals use the lumped edge rule (half the length of the
touching boundary edges).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Mesh", "build_rect_mesh", "gradient_on_triangle", "gradients"]


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray            # (M, 2) coordinates, row-major node order
    triangles: np.ndarray        # (T, 3) vertex indices, counterclockwise
    tri_area: np.ndarray         # (T,)
    tri_grads: np.ndarray        # (T, 3, 2) constant gradient of each vertex basis
    centroids: np.ndarray        # (T, 2)
    node_weight: np.ndarray      # (M,) lumped interior quadrature weights
    boundary_nodes: np.ndarray   # (B,) indices of nodes on the rectangle boundary
    boundary_weight: np.ndarray  # (M,) lumped boundary weights, zero off the boundary
    boundary_edges: np.ndarray   # (E, 2) node index pairs of boundary edges
    rect: tuple

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def area(self) -> float:
        x0, y0, x1, y1 = self.rect
        return (x1 - x0) * (y1 - y0)

    @property
    def perimeter(self) -> float:
        x0, y0, x1, y1 = self.rect
        return 2.0 * ((x1 - x0) + (y1 - y0))


def build_rect_mesh(nx: int, ny: int, rect=(0.0, 0.0, 1.0, 1.0)) -> Mesh:
    """Triangulate [x0,x1] x [y0,y1] into 2*nx*ny triangles.

    (nx+1)(ny+1) nodes in row-major order (x fastest); deterministic
    triangle numbering.  Rejects nonpositive subdivision counts and
    degenerate rectangles.
    """
    if nx < 1 or ny < 1:
        raise ValueError(f"subdivision counts must be >= 1, got nx={nx}, ny={ny}")
    x0, y0, x1, y1 = (float(v) for v in rect)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate rectangle {rect}")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    xx, yy = np.meshgrid(xs, ys)            # shape (ny+1, nx+1); row-major => x fastest
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    def nid(ix, iy):
        return iy * (nx + 1) + ix

    tris = []
    for iy in range(ny):
        for ix in range(nx):
            ll, lr = nid(ix, iy), nid(ix + 1, iy)
            ul, ur = nid(ix, iy + 1), nid(ix + 1, iy + 1)
            tris.append((ll, lr, ur))       # below the ll-ur diagonal
            tris.append((ll, ur, ul))       # above it
    triangles = np.array(tris, dtype=np.intp)

    p1 = nodes[triangles[:, 0]]
    p2 = nodes[triangles[:, 1]]
    p3 = nodes[triangles[:, 2]]
    det = (p2[:, 0] - p1[:, 0]) * (p3[:, 1] - p1[:, 1]) - (p3[:, 0] - p1[:, 0]) * (p2[:, 1] - p1[:, 1])
    tri_area = 0.5 * det
    if np.any(tri_area <= 0):
        raise ValueError("mesh construction produced a nonpositive triangle area")
    centroids = (p1 + p2 + p3) / 3.0

    # grad of the vertex basis at corner i: rotate the opposite edge by 90 degrees / (2A)
    tri_grads = np.empty((len(triangles), 3, 2))
    corners = (p1, p2, p3)
    for i in range(3):
        pj = corners[(i + 1) % 3]
        pk = corners[(i + 2) % 3]
        tri_grads[:, i, 0] = (pj[:, 1] - pk[:, 1]) / det
        tri_grads[:, i, 1] = (pk[:, 0] - pj[:, 0]) / det

    node_weight = np.zeros(len(nodes))
    np.add.at(node_weight, triangles, (tri_area / 3.0)[:, None])

    edges = []
    for ix in range(nx):                    # bottom and top rows
        edges.append((nid(ix, 0), nid(ix + 1, 0)))
        edges.append((nid(ix, ny), nid(ix + 1, ny)))
    for iy in range(ny):                    # left and right columns
        edges.append((nid(0, iy), nid(0, iy + 1)))
        edges.append((nid(nx, iy), nid(nx, iy + 1)))
    boundary_edges = np.array(edges, dtype=np.intp)
    lengths = np.linalg.norm(nodes[boundary_edges[:, 0]] - nodes[boundary_edges[:, 1]], axis=1)
    boundary_weight = np.zeros(len(nodes))
    np.add.at(boundary_weight, boundary_edges, (lengths / 2.0)[:, None])
    boundary_nodes = np.flatnonzero(boundary_weight > 0)

    return Mesh(
        nodes=nodes,
        triangles=triangles,
        tri_area=tri_area,
        tri_grads=tri_grads,
        centroids=centroids,
        node_weight=node_weight,
        boundary_nodes=boundary_nodes,
        boundary_weight=boundary_weight,
        boundary_edges=boundary_edges,
        rect=(x0, y0, x1, y1),
    )


def gradients(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    """Per-triangle constant gradient of the piecewise-linear interpolant, shape (T, 2)."""
    vals = np.asarray(u, dtype=float)[mesh.triangles]       # (T, 3)
    return np.einsum("tv,tvd->td", vals, mesh.tri_grads)


def gradient_on_triangle(mesh: Mesh, tri: int, u: np.ndarray) -> tuple[float, float]:
    """Gradient of the linear interpolant of u on one triangle."""
    if not 0 <= tri < mesh.num_triangles:
        raise IndexError(f"triangle index {tri} out of range")
    idx = mesh.triangles[tri]
    vals = np.asarray(u, dtype=float)[idx]
    g = vals @ mesh.tri_grads[tri]
    return float(g[0]), float(g[1])
