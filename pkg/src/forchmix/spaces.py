"""Lowest-order mixed spaces on triangles.

Provides symmetric triangle quadrature, the lowest-order Raviart-Thomas (RT0)
basis with the mesh's global edge orientation, piecewise-constant L2
projections, the H(div) edge-flux interpolant, and the (bi)linear-form blocks
of the expanded mixed scheme.  The RT0 degree of freedom on an edge is the
average normal flux, so the basis function of an edge has unit normal trace
on that edge and zero normal trace on the other two.

Velocity fields satisfy u.n = 0 on the domain boundary strongly: boundary
edges carry no degree of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.sparse as sp

from .mesh import TriMesh

# 6-point symmetric rule, exact through total degree 4; weights sum to 1
_DEGREE4_WEIGHTS = (0.223381589678011, 0.109951743655322)
_DEGREE4_ABSCISSAE = (
    (0.108103018168070, 0.445948490915965),
    (0.816847572980459, 0.091576213509771),
)


@dataclass(frozen=True)
class QuadratureRule:
    """Triangle rule in barycentric coordinates; weights sum to 1 and are
    scaled by the cell area at use."""

    points: np.ndarray
    weights: np.ndarray
    degree: int


def _symmetric_orbit(first: float, other: float) -> list[tuple[float, float, float]]:
    return [(first, other, other), (other, first, other), (other, other, first)]


def _collapsed_rule(degree: int) -> QuadratureRule:
    """Tensor Gauss rule mapped to the triangle by collapsing one square edge.

    With m Gauss points per axis the rule integrates total degree 2m - 2
    exactly (the collapse adds one degree in the first variable); weights stay
    positive.
    """
    m = degree // 2 + 2
    nodes, gw = np.polynomial.legendre.leggauss(m)
    u = 0.5 * (nodes + 1.0)
    wu = 0.5 * gw
    uu, vv = np.meshgrid(u, u, indexing="ij")
    ww = np.outer(wu, wu) * (1.0 - uu)
    x = uu.ravel()
    y = (vv * (1.0 - uu)).ravel()
    weights = ww.ravel()
    points = np.column_stack([1.0 - x - y, x, y])
    return QuadratureRule(points=points, weights=weights / weights.sum(), degree=2 * m - 2)


def triangle_quadrature(degree: int = 4) -> QuadratureRule:
    """Symmetric rule exact for polynomials of the given total degree."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if degree <= 1:
        points = np.array([[1.0, 1.0, 1.0]]) / 3.0
        return QuadratureRule(points=points, weights=np.array([1.0]), degree=1)
    if degree <= 2:
        points = np.array(_symmetric_orbit(2.0 / 3.0, 1.0 / 6.0))
        return QuadratureRule(points=points, weights=np.full(3, 1.0 / 3.0), degree=2)
    if degree <= 4:
        points = []
        weights = []
        for (first, other), w in zip(_DEGREE4_ABSCISSAE, _DEGREE4_WEIGHTS):
            points.extend(_symmetric_orbit(first, other))
            weights.extend([w] * 3)
        return QuadratureRule(points=np.array(points), weights=np.array(weights), degree=4)
    return _collapsed_rule(degree)


def reference_monomial_integral(p: int, q: int) -> float:
    """Exact integral of x^p y^q over the unit right triangle."""
    return factorial(p) * factorial(q) / factorial(p + q + 2)


def cell_points(mesh: TriMesh, rule: QuadratureRule) -> np.ndarray:
    """Physical quadrature points on every cell, shape (F, m, 2)."""
    return np.einsum("qk,fkd->fqd", rule.points, mesh.vertices[mesh.triangles])


def integrate_cellwise(mesh: TriMesh, rule: QuadratureRule, values: np.ndarray) -> np.ndarray:
    """Cell integrals from point values of shape (F, m): |T| * sum(w * v)."""
    return mesh.areas * (values @ rule.weights)


@dataclass(frozen=True)
class DofMap:
    """Degrees of freedom: one RT0 dof per interior edge, one scalar and two
    vector dofs per triangle."""

    edge_dof: np.ndarray
    dof_edge: np.ndarray
    n_rt0: int
    n_p: int
    n_s: int


def build_dofmap(mesh: TriMesh) -> DofMap:
    interior = np.flatnonzero(~mesh.boundary_edge)
    edge_dof = np.full(mesh.num_edges, -1, dtype=np.int64)
    edge_dof[interior] = np.arange(len(interior))
    return DofMap(
        edge_dof=edge_dof,
        dof_edge=interior,
        n_rt0=len(interior),
        n_p=mesh.num_triangles,
        n_s=2 * mesh.num_triangles,
    )


def rt0_eval(mesh: TriMesh, t: int, k: int, x) -> np.ndarray:
    """RT0 basis of local edge k on triangle t at points x of shape (..., 2).

    phi = sign * |e| / (2|T|) * (x - p_opp) where p_opp is the vertex opposite
    the edge; its normal trace is 1 on edge k (along the global edge normal)
    and 0 on the other edges.
    """
    if not 0 <= k < 3:
        raise IndexError(f"local edge index {k} out of range")
    e = mesh.tri_edges[t, k]
    scale = mesh.tri_edge_signs[t, k] * mesh.edge_lengths[e] / (2.0 * mesh.areas[t])
    opp = mesh.vertices[mesh.triangles[t, k]]
    return scale * (np.asarray(x, dtype=float) - opp)


def rt0_div(mesh: TriMesh, t: int, k: int) -> float:
    """Constant divergence sign * |e| / |T| of the basis of local edge k."""
    if not 0 <= k < 3:
        raise IndexError(f"local edge index {k} out of range")
    e = mesh.tri_edges[t, k]
    return float(mesh.tri_edge_signs[t, k] * mesh.edge_lengths[e] / mesh.areas[t])


def rt0_cell_affine(mesh: TriMesh, dofmap: DofMap, coeffs: np.ndarray):
    """Per-cell affine form of an RT0 field: u(x) = d_T + gamma_T * x.

    Returns (gamma, d) with shapes (F,) and (F, 2).  Boundary edges contribute
    nothing because their flux is constrained to zero.
    """
    num_tris = mesh.num_triangles
    gamma = np.zeros(num_tris)
    d = np.zeros((num_tris, 2))
    dofs = dofmap.edge_dof[mesh.tri_edges]
    for k in range(3):
        have = dofs[:, k] >= 0
        c = np.zeros(num_tris)
        c[have] = coeffs[dofs[have, k]]
        factor = c * mesh.tri_edge_signs[:, k] * mesh.edge_lengths[mesh.tri_edges[:, k]]
        factor = factor / (2.0 * mesh.areas)
        gamma += factor
        d -= factor[:, None] * mesh.vertices[mesh.triangles[:, k]]
    return gamma, d


def rt0_at_cell_points(
    mesh: TriMesh, dofmap: DofMap, coeffs: np.ndarray, points: np.ndarray
) -> np.ndarray:
    """Evaluate an RT0 coefficient vector at per-cell points (F, m, 2)."""
    gamma, d = rt0_cell_affine(mesh, dofmap, coeffs)
    return d[:, None, :] + gamma[:, None, None] * points


def rt0_as_callable(mesh: TriMesh, dofmap: DofMap, coeffs: np.ndarray):
    """Pointwise evaluator (x, y) -> (..., 2) for structured meshes."""
    from .mesh import locate_cell

    gamma, d = rt0_cell_affine(mesh, dofmap, coeffs)

    def evaluate(x, y):
        cells = locate_cell(mesh, x, y)
        pts = np.stack([np.asarray(x, dtype=float), np.asarray(y, dtype=float)], axis=-1)
        return d[cells] + gamma[cells][..., None] * pts

    return evaluate


def l2_project_scalar(mesh: TriMesh, f, rule: QuadratureRule | None = None) -> np.ndarray:
    """Cellwise L2 projection (cell averages) of a scalar field f(x, y)."""
    rule = rule or triangle_quadrature(4)
    pts = cell_points(mesh, rule)
    values = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)
    return values @ rule.weights


def l2_project_vector(mesh: TriMesh, z, rule: QuadratureRule | None = None) -> np.ndarray:
    """Componentwise cell averages of a vector field z(x, y) -> (..., 2)."""
    rule = rule or triangle_quadrature(4)
    pts = cell_points(mesh, rule)
    values = np.asarray(z(pts[..., 0], pts[..., 1]), dtype=float)
    return np.einsum("fqd,q->fd", values, rule.weights)


def hdiv_interpolate(
    mesh: TriMesh,
    dofmap: DofMap,
    v,
    n_gauss: int = 5,
    boundary_tol: float = 1e-10,
) -> np.ndarray:
    """Edge-flux interpolant: dof on edge e is the average of v.n over e.

    The field must have (numerically) zero normal flux on boundary edges;
    a larger flux raises ValueError because the constrained space cannot
    represent it.  Averages use n_gauss-point Gauss quadrature per edge.
    """
    nodes, gw = np.polynomial.legendre.leggauss(n_gauss)
    frac = 0.5 * (nodes + 1.0)
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    pts = a[:, None, :] + frac[None, :, None] * (b - a)[:, None, :]
    values = np.asarray(v(pts[..., 0], pts[..., 1]), dtype=float)
    normal_flux = np.einsum("eqd,ed->eq", values, mesh.edge_normals)
    fluxes = 0.5 * (normal_flux @ gw)

    interior_scale = 1.0
    if dofmap.n_rt0 > 0:
        interior_scale += float(np.max(np.abs(fluxes[dofmap.dof_edge])))
    worst_boundary = float(np.max(np.abs(fluxes[mesh.boundary_edge]), initial=0.0))
    if worst_boundary > boundary_tol * interior_scale:
        raise ValueError(
            f"field has nonzero boundary normal flux {worst_boundary:.3e}; "
            "it is not representable with the zero-flux boundary condition"
        )
    return fluxes[dofmap.dof_edge]


@dataclass(frozen=True)
class FormBlocks:
    """Sparse blocks of the expanded mixed scheme.

    M_p: pressure mass matrix, diag of cell areas (F x F).
    B_div: divergence pairing (div u, w), entries sign * |e| (F x n_rt0).
    M_uz: velocity-against-constants pairing (u, z) (2F x n_rt0).
    M_sz: frozen-conductivity mass diag(kbar_T |T|) per component (2F x 2F).
    C_sv: gradient pairing (s, v) = M_uz transposed (n_rt0 x 2F).
    C_pv: pressure-divergence pairing (p, div v) = B_div transposed.
    """

    M_p: sp.csr_matrix
    B_div: sp.csr_matrix
    M_uz: sp.csr_matrix
    M_sz: sp.csr_matrix
    C_sv: sp.csr_matrix
    C_pv: sp.csr_matrix


def assemble_forms(mesh: TriMesh, dofmap: DofMap, kbar: np.ndarray) -> FormBlocks:
    """Assemble all scheme blocks for a cellwise-constant conductivity kbar.

    Every integrand is a polynomial of degree at most one once kbar is frozen
    per cell, so all entries are exact: the (u, z) pairing reduces to
    |T| * phi(centroid).
    """
    kbar = np.asarray(kbar, dtype=float)
    if kbar.shape != (mesh.num_triangles,):
        raise ValueError("kbar must hold one value per triangle")
    if np.any(kbar <= 0.0):
        raise ValueError("kbar must be positive")

    num_tris = mesh.num_triangles
    rows_b, cols_b, data_b = [], [], []
    rows_m, cols_m, data_m = [], [], []
    dofs = dofmap.edge_dof[mesh.tri_edges]
    for k in range(3):
        have = np.flatnonzero(dofs[:, k] >= 0)
        sign_len = (
            mesh.tri_edge_signs[have, k] * mesh.edge_lengths[mesh.tri_edges[have, k]]
        )
        rows_b.append(have)
        cols_b.append(dofs[have, k])
        data_b.append(sign_len)
        # |T| * phi(centroid) = sign * |e| * (centroid - p_opp) / 2
        moment = 0.5 * (mesh.centroids[have] - mesh.vertices[mesh.triangles[have, k]])
        for comp in range(2):
            rows_m.append(2 * have + comp)
            cols_m.append(dofs[have, k])
            data_m.append(sign_len * moment[:, comp])

    shape_b = (num_tris, dofmap.n_rt0)
    b_div = sp.coo_matrix(
        (np.concatenate(data_b), (np.concatenate(rows_b), np.concatenate(cols_b))),
        shape=shape_b,
    ).tocsr()
    m_uz = sp.coo_matrix(
        (np.concatenate(data_m), (np.concatenate(rows_m), np.concatenate(cols_m))),
        shape=(dofmap.n_s, dofmap.n_rt0),
    ).tocsr()
    m_sz = sp.diags(np.repeat(kbar * mesh.areas, 2)).tocsr()
    return FormBlocks(
        M_p=sp.diags(mesh.areas).tocsr(),
        B_div=b_div,
        M_uz=m_uz,
        M_sz=m_sz,
        C_sv=m_uz.T.tocsr(),
        C_pv=b_div.T.tocsr(),
    )
