"""Energy functional, its nodal gradient, the monotone operator pairing and
weak-form residuals.

The energy is

    (1/p)(|grad u|_p^p + int alpha |u|^p) + (1/q) int mu |grad u|^q
    + (1/p_*) bdry int beta |u|^{p_*}
    - (1/(1-kappa)) int zeta |u|^{1-kappa} - (lam/q1) int |u|^{q1},

with lumped vertex quadrature for all zeroth-order terms and centroid
quadrature for the gradient terms.  |grad u|^{p-2} grad u is extended by 0
at grad u = 0 (the continuous extension of the monotone operator for
p < 2); the singular term's derivative is floored at max(u_i, eps)^(-kappa)
and the floored nodes are flagged.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mesh import Mesh, gradients
from .problem import ProblemData
from .space import FieldSamples, modular_breakdown, sample_fields

__all__ = [
    "EnergyValue",
    "GradientResult",
    "ResidualReport",
    "energy",
    "apply_operator_A",
    "energy_gradient",
    "weak_residual",
    "hat_norms_1p",
]

DEFAULT_FLOOR = 1e-10


@dataclass(frozen=True)
class EnergyValue:
    total: float
    kinetic_p: float      # (1/p)(|grad u|_p^p + int alpha|u|^p)
    kinetic_q_mu: float   # (1/q) int mu |grad u|^q
    boundary: float       # (1/p_*) bdry int beta |u|^{p_*}
    singular: float       # -(1/(1-kappa)) int zeta |u|^{1-kappa}
    superlinear: float    # -(lam/q1) int |u|^{q1}

    @property
    def parts(self) -> dict:
        return {
            "kinetic_p": self.kinetic_p,
            "kinetic_q_mu": self.kinetic_q_mu,
            "boundary": self.boundary,
            "singular": self.singular,
            "superlinear": self.superlinear,
        }


@dataclass(frozen=True)
class GradientResult:
    values: np.ndarray        # (M,) nodal partial derivatives
    floor_active: np.ndarray  # (M,) bool, True where max(u_i, eps) != u_i


@dataclass(frozen=True)
class ResidualReport:
    """Max weak-form defect over nodal hat test functions, each normalized by
    the test function's norm_1p, plus the per-term maxima."""

    residual_norm: float
    term_max: dict

    def __str__(self):
        terms = ", ".join(f"{k}={v:.3e}" for k, v in self.term_max.items())
        return f"residual {self.residual_norm:.3e} ({terms})"


def energy(
    mesh: Mesh, data: ProblemData, u, lam: float, fields: Optional[FieldSamples] = None
) -> EnergyValue:
    bd = modular_breakdown(mesh, data, u, fields)
    kinetic_p = (bd.grad_p + bd.mass_p_alpha) / data.p
    kinetic_q_mu = bd.grad_q_mu / data.q
    boundary = bd.bdry_pstar_beta / data.p_lower_star
    singular = -bd.zeta_sing / (1.0 - data.kappa)
    superlinear = -lam * bd.mass_q1 / data.q1
    total = kinetic_p + kinetic_q_mu + boundary + singular + superlinear
    return EnergyValue(total, kinetic_p, kinetic_q_mu, boundary, singular, superlinear)


def _grad_weight(gn: np.ndarray, expo: float) -> np.ndarray:
    """|g|^expo with the continuous extension 0 at g = 0 (expo may be negative)."""
    out = np.zeros_like(gn)
    nz = gn > 0.0
    out[nz] = gn[nz] ** expo
    return out


def _signed_power(u: np.ndarray, expo: float) -> np.ndarray:
    """sign(u)|u|^expo, with value 0 at u = 0 (expo > 0 throughout the model)."""
    return np.sign(u) * np.abs(u) ** expo


def _operator_vectors(mesh: Mesh, data: ProblemData, u: np.ndarray, fields: FieldSamples):
    """Nodal vectors of the three operator terms: the double phase gradient
    part, the alpha mass part and the beta boundary part."""
    g = gradients(mesh, u)
    gn = np.hypot(g[:, 0], g[:, 1])
    w = _grad_weight(gn, data.p - 2.0) + fields.mu_centroid * _grad_weight(gn, data.q - 2.0)
    coef = (mesh.tri_area * w)[:, None] * g                       # (T, 2)
    contrib = np.einsum("td,tvd->tv", coef, mesh.tri_grads)       # (T, 3)
    grad_vec = np.zeros(mesh.num_nodes)
    np.add.at(grad_vec, mesh.triangles, contrib)
    alpha_vec = mesh.node_weight * fields.alpha_node * _signed_power(u, data.p - 1.0)
    beta_vec = mesh.boundary_weight * fields.beta_node * _signed_power(u, data.p_lower_star - 1.0)
    return grad_vec, alpha_vec, beta_vec


def apply_operator_A(
    mesh: Mesh, data: ProblemData, u, h, fields: Optional[FieldSamples] = None
) -> float:
    """Duality pairing of the double phase operator (plus mass and boundary
    terms) of u against h."""
    if fields is None:
        fields = sample_fields(mesh, data)
    u = np.asarray(u, dtype=float)
    h = np.asarray(h, dtype=float)
    gu = gradients(mesh, u)
    gh = gradients(mesh, h)
    gn = np.hypot(gu[:, 0], gu[:, 1])
    w = _grad_weight(gn, data.p - 2.0) + fields.mu_centroid * _grad_weight(gn, data.q - 2.0)
    grad_term = float(mesh.tri_area @ (w * np.einsum("td,td->t", gu, gh)))
    alpha_term = float(mesh.node_weight @ (fields.alpha_node * _signed_power(u, data.p - 1.0) * h))
    beta_term = float(
        mesh.boundary_weight @ (fields.beta_node * _signed_power(u, data.p_lower_star - 1.0) * h)
    )
    return grad_term + alpha_term + beta_term


def energy_gradient(
    mesh: Mesh,
    data: ProblemData,
    u,
    lam: float,
    floor: float = DEFAULT_FLOOR,
    fields: Optional[FieldSamples] = None,
) -> GradientResult:
    """Nodal gradient of the discrete energy.

    The singular term uses max(u_i, floor) inside u^(-kappa); nodes where
    the floor engaged are flagged (diagnostic, not a failure).
    """
    if fields is None:
        fields = sample_fields(mesh, data)
    u = np.asarray(u, dtype=float)
    grad_vec, alpha_vec, beta_vec = _operator_vectors(mesh, data, u, fields)
    floored = np.maximum(u, floor)
    sing_vec = mesh.node_weight * fields.zeta_node * floored ** (-data.kappa)
    super_vec = lam * mesh.node_weight * _signed_power(u, data.q1 - 1.0)
    values = grad_vec + alpha_vec + beta_vec - sing_vec - super_vec
    return GradientResult(values=values, floor_active=u < floor)


def hat_norms_1p(
    mesh: Mesh, data: ProblemData, fields: Optional[FieldSamples] = None
) -> np.ndarray:
    """norm_1p of every nodal hat function (used to normalize residuals)."""
    if fields is None:
        fields = sample_fields(mesh, data)
    gn = np.linalg.norm(mesh.tri_grads, axis=2)                   # (T, 3)
    contrib = mesh.tri_area[:, None] * gn**data.p
    grad_p = np.zeros(mesh.num_nodes)
    np.add.at(grad_p, mesh.triangles, contrib)
    return (grad_p + mesh.node_weight * fields.alpha_node) ** (1.0 / data.p)


def weak_residual(
    mesh: Mesh, data: ProblemData, u, lam: float, fields: Optional[FieldSamples] = None
) -> ResidualReport:
    """Maximal normalized defect of the weak-solution identity over all nodal
    hat functions.  Requires strictly positive nodal values (the identity's
    singular integral is otherwise undefined)."""
    if fields is None:
        fields = sample_fields(mesh, data)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("weak_residual requires u > 0 at every node")
    grad_vec, alpha_vec, beta_vec = _operator_vectors(mesh, data, u, fields)
    sing_vec = mesh.node_weight * fields.zeta_node * u ** (-data.kappa)
    super_vec = lam * mesh.node_weight * u ** (data.q1 - 1.0)
    defect = grad_vec + alpha_vec + beta_vec - sing_vec - super_vec
    hn = hat_norms_1p(mesh, data, fields)
    term_max = {
        "gradient": float(np.max(np.abs(grad_vec) / hn)),
        "alpha_mass": float(np.max(np.abs(alpha_vec) / hn)),
        "beta_boundary": float(np.max(np.abs(beta_vec) / hn)),
        "singular": float(np.max(np.abs(sing_vec) / hn)),
        "superlinear": float(np.max(np.abs(super_vec) / hn)),
    }
    return ResidualReport(residual_norm=float(np.max(np.abs(defect) / hn)), term_max=term_max)
