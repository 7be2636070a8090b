import math

import numpy as np
import pytest

from doublephase import ProblemData, build_rect_mesh

PRESET = dict(p=1.5, q=1.8, kappa=0.5, q1=4.0, lam=0.1, mu="x", alpha="1", beta="1", zeta="1")


@pytest.fixture(scope="session")
def preset_data():
    return ProblemData(**PRESET)


@pytest.fixture(scope="session")
def mesh1():
    return build_rect_mesh(1, 1)


@pytest.fixture(scope="session")
def mesh2():
    return build_rect_mesh(2, 2)


@pytest.fixture(scope="session")
def mesh4():
    return build_rect_mesh(4, 4)


@pytest.fixture(scope="session")
def mesh16():
    return build_rect_mesh(16, 16)


def rng(seed=0):
    return np.random.default_rng(seed)


# --- independent re-summation oracle -------------------------------------
#
# Pure-Python re-summation of the six discrete integrals: triangle measures
# by the shoelace formula, gradients by solving the 2x2 interpolation system,
# lumped weights rebuilt from scratch.  Only the mesh connectivity is reused.


def oracle_gradient(mesh, tri, u):
    i, j, k = mesh.triangles[tri]
    (x1, y1), (x2, y2), (x3, y3) = mesh.nodes[[i, j, k]]
    A = np.array([[x2 - x1, y2 - y1], [x3 - x1, y3 - y1]])
    b = np.array([u[j] - u[i], u[k] - u[i]])
    return np.linalg.solve(A, b)


def oracle_area(mesh, tri):
    i, j, k = mesh.triangles[tri]
    (x1, y1), (x2, y2), (x3, y3) = mesh.nodes[[i, j, k]]
    return 0.5 * abs((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))


def oracle_breakdown(mesh, data, u):
    """Naive loop evaluation of (grad_p, grad_q_mu, mass_p_alpha, bdry, sing, mass_q1)."""
    u = np.asarray(u, dtype=float)
    grad_p = grad_q = 0.0
    node_w = [0.0] * mesh.num_nodes
    for t in range(mesh.num_triangles):
        area = oracle_area(mesh, t)
        g = oracle_gradient(mesh, t, u)
        gn = math.hypot(g[0], g[1])
        cx = sum(mesh.nodes[v, 0] for v in mesh.triangles[t]) / 3.0
        cy = sum(mesh.nodes[v, 1] for v in mesh.triangles[t]) / 3.0
        grad_p += area * gn**data.p
        grad_q += area * float(data.mu(cx, cy)) * gn**data.q
        for v in mesh.triangles[t]:
            node_w[v] += area / 3.0
    mass_p = sing = mass_q1 = 0.0
    for i in range(mesh.num_nodes):
        x, y = mesh.nodes[i]
        m = node_w[i]
        a = abs(u[i])
        mass_p += m * float(data.alpha(x, y)) * a**data.p
        sing += m * float(data.zeta(x, y)) * a ** (1.0 - data.kappa)
        mass_q1 += m * a**data.q1
    bdry_w = [0.0] * mesh.num_nodes
    for i, j in mesh.boundary_edges:
        length = math.hypot(
            mesh.nodes[j, 0] - mesh.nodes[i, 0], mesh.nodes[j, 1] - mesh.nodes[i, 1]
        )
        bdry_w[i] += length / 2.0
        bdry_w[j] += length / 2.0
    bdry = 0.0
    for i in range(mesh.num_nodes):
        if bdry_w[i] > 0:
            x, y = mesh.nodes[i]
            bdry += bdry_w[i] * float(data.beta(x, y)) * abs(u[i]) ** data.p_lower_star
    return grad_p, grad_q, mass_p, bdry, sing, mass_q1


def oracle_bisect(f, lo, hi, iters=200):
    flo, fhi = f(lo), f(hi)
    assert flo * fhi <= 0, (lo, hi, flo, fhi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
