"""Conforming triangulations of the unit square with oriented edges.

Each mesh stores, besides vertices and triangles, a global edge list with a
canonical unit normal per edge and the incidence signs that relate a
triangle's outward normal to that global normal.  Interior edges carry the
normal of their lower-indexed triangle, so the two incidence signs of an
interior edge always sum to zero; boundary edges carry the outward normal.
Meshes are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TriangleGeometry:
    """Per-triangle geometry; entry k refers to the edge opposite vertex k."""

    area: float
    centroid: np.ndarray
    edge_lengths: np.ndarray
    normals: np.ndarray


@dataclass(frozen=True)
class TriMesh:
    """Triangulation with oriented edges and triangle-edge incidence.

    Attributes:
        vertices: (V, 2) coordinates.
        triangles: (F, 3) vertex indices, counterclockwise.
        edges: (E, 2) vertex index pairs, lower index first.
        tri_edges: (F, 3) global edge index of the edge opposite local vertex k.
        tri_edge_signs: (F, 3) +1 where the triangle's outward normal equals
            the global edge normal, -1 otherwise.
        edge_tris: (E, 2) incident triangle indices, -1 padding on boundary.
        boundary_edge: (E,) boolean mask.
        edge_normals: (E, 2) canonical unit normal per edge.
        areas: (F,) triangle areas.
        centroids: (F, 2) triangle centroids.
        edge_lengths: (E,) edge lengths.
        h: maximum element diameter.
        grid_n: subdivision count for structured meshes, else None.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    tri_edges: np.ndarray
    tri_edge_signs: np.ndarray
    edge_tris: np.ndarray
    boundary_edge: np.ndarray
    edge_normals: np.ndarray
    areas: np.ndarray
    centroids: np.ndarray
    edge_lengths: np.ndarray
    h: float
    grid_n: int | None = None

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def _outward_normals(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Outward unit normal of each triangle on the edge opposite vertex k."""
    # edge opposite vertex k runs from vertex k+1 to vertex k+2 (ccw traversal),
    # so its right-hand normal (dy, -dx) points out of the triangle
    p = vertices[triangles]
    normals = np.empty((len(triangles), 3, 2))
    for k in range(3):
        d = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
        length = np.hypot(d[:, 0], d[:, 1])
        normals[:, k, 0] = d[:, 1] / length
        normals[:, k, 1] = -d[:, 0] / length
    return normals


def build_mesh(vertices, triangles, grid_n: int | None = None) -> TriMesh:
    """Assemble connectivity for a conforming set of ccw triangles."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    signed_area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    if np.any(signed_area <= 0.0):
        raise ValueError("triangles must be counterclockwise with positive area")

    # local edge k is opposite local vertex k
    local = np.stack(
        [triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]], axis=1
    )
    keys = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(keys, axis=0, return_inverse=True)
    tri_edges = inverse.reshape(-1, 3)

    num_edges = len(edges)
    edge_tris = np.full((num_edges, 2), -1, dtype=np.int64)
    for t in range(len(triangles)):
        for k in range(3):
            e = tri_edges[t, k]
            if edge_tris[e, 0] < 0:
                edge_tris[e, 0] = t
            elif edge_tris[e, 1] < 0:
                edge_tris[e, 1] = t
            else:
                raise ValueError(f"edge {e} is shared by more than two triangles")
    # keep the lower-indexed triangle first; it defines the edge normal
    swap = (edge_tris[:, 1] >= 0) & (edge_tris[:, 1] < edge_tris[:, 0])
    edge_tris[swap] = edge_tris[swap][:, ::-1]
    boundary_edge = edge_tris[:, 1] < 0

    signs = np.where(edge_tris[tri_edges, 0] == np.arange(len(triangles))[:, None], 1, -1)
    signs = signs.astype(np.int64)

    outward = _outward_normals(vertices, triangles)
    edge_normals = np.zeros((num_edges, 2))
    for t in range(len(triangles)):
        for k in range(3):
            e = tri_edges[t, k]
            if signs[t, k] == 1:
                edge_normals[e] = outward[t, k]

    edge_vec = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    edge_lengths = np.hypot(edge_vec[:, 0], edge_vec[:, 1])
    diameters = np.max(edge_lengths[tri_edges], axis=1)

    return TriMesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        tri_edges=tri_edges,
        tri_edge_signs=signs,
        edge_tris=edge_tris,
        boundary_edge=boundary_edge,
        edge_normals=edge_normals,
        areas=signed_area,
        centroids=p.mean(axis=1),
        edge_lengths=edge_lengths,
        h=float(np.max(diameters)),
        grid_n=grid_n,
    )


def unit_square_mesh(n: int) -> TriMesh:
    """Structured mesh of [0,1]^2: n x n squares, each split along the
    lower-left to upper-right diagonal into two right triangles.

    The result has (n+1)^2 vertices, 2n^2 triangles, 3n^2 + 2n edges, and
    mesh size h = sqrt(2)/n.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    ticks = np.linspace(0.0, 1.0, n + 1)
    grid_x, grid_y = np.meshgrid(ticks, ticks)
    vertices = np.column_stack([grid_x.ravel(), grid_y.ravel()])

    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    idx = 0
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10 = v00 + 1
            v01 = v00 + n + 1
            v11 = v01 + 1
            triangles[idx] = (v00, v10, v11)
            triangles[idx + 1] = (v00, v11, v01)
            idx += 2
    return build_mesh(vertices, triangles, grid_n=n)


def geometry(mesh: TriMesh, t: int) -> TriangleGeometry:
    """Area, centroid, edge lengths, and outward normals of triangle t."""
    if not 0 <= t < mesh.num_triangles:
        raise IndexError(f"triangle index {t} out of range")
    normals = mesh.edge_normals[mesh.tri_edges[t]] * mesh.tri_edge_signs[t][:, None]
    return TriangleGeometry(
        area=float(mesh.areas[t]),
        centroid=mesh.centroids[t].copy(),
        edge_lengths=mesh.edge_lengths[mesh.tri_edges[t]].copy(),
        normals=normals,
    )


def locate_cell(mesh: TriMesh, x, y) -> np.ndarray:
    """Map points to triangle indices; structured meshes only.

    Points on shared edges resolve to one of the incident triangles, which is
    adequate for evaluating quantities that are continuous across that edge.
    """
    if mesh.grid_n is None:
        raise ValueError("point location requires a structured mesh")
    n = mesh.grid_n
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    i = np.clip(np.floor(x_arr * n).astype(np.int64), 0, n - 1)
    j = np.clip(np.floor(y_arr * n).astype(np.int64), 0, n - 1)
    upper = (y_arr * n - j) > (x_arr * n - i)
    return 2 * (j * n + i) + upper


def dump(mesh: TriMesh) -> str:
    """Plain-text listing of vertices, triangles, and edges for debugging."""
    lines = [f"vertices {mesh.num_vertices}"]
    lines += [f"  {i}: ({x:.6f}, {y:.6f})" for i, (x, y) in enumerate(mesh.vertices)]
    lines.append(f"triangles {mesh.num_triangles}")
    lines += [
        f"  {t}: ({tri[0]}, {tri[1]}, {tri[2]})" for t, tri in enumerate(mesh.triangles)
    ]
    lines.append(f"edges {mesh.num_edges}")
    for e, (a, b) in enumerate(mesh.edges):
        tag = "boundary" if mesh.boundary_edge[e] else "interior"
        lines.append(f"  {e}: ({a}, {b}) {tag}")
    return "\n".join(lines)
