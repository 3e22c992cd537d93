"""Coupled bulk+surface P1 forms: mass, stiffness, loads, interpolation, Ritz map.

Both bilinear forms pair a bulk integral over the triangulated disk with a
boundary integral over the polygonal boundary, where the surface basis
functions are the traces of the bulk ones.  Mass and stiffness use exact
element formulas; load vectors use the fixed quadrature rules from
:mod:`chdisk.quadrature`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.io import mmwrite
from scipy.sparse import coo_matrix, csr_matrix

from .mesh import Mesh2D, signed_areas
from .potentials import PotentialPair
from .quadrature import EDGE_GAUSS2, TRI_DEG2
from .solvers import Factor, factorize

FieldVector = np.ndarray


@dataclass(frozen=True)
class AnalyticField:
    """Closed-form scalar field of (x, t), vectorised over point arrays.

    ``value(x, t)`` maps points of shape (..., 2) to values of shape (...,);
    ``gradient`` returns shape (..., 2).  The optional ``dt_*`` members carry
    the time derivative for consistency diagnostics.
    """

    value: Callable
    gradient: Callable | None = None
    dt_value: Callable | None = None
    dt_gradient: Callable | None = None

    def time_derivative(self) -> "AnalyticField":
        if self.dt_value is None:
            raise ValueError("field carries no time derivative")
        return AnalyticField(value=self.dt_value, gradient=self.dt_gradient)


def _element_gradients(mesh: Mesh2D):
    """Per-element areas and constant P1 basis gradients, shape (T, 3, 2)."""
    p = mesh.nodes[mesh.triangles]
    areas = signed_areas(mesh)
    opposite = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.empty_like(opposite)
    grads[:, :, 0] = -opposite[:, :, 1]
    grads[:, :, 1] = opposite[:, :, 0]
    grads /= (2.0 * areas)[:, None, None]
    return areas, grads


def _edge_geometry(mesh: Mesh2D):
    """Boundary edge endpoint coords, lengths and unit tangents."""
    pe = mesh.nodes[mesh.boundary_edges]
    d = pe[:, 1] - pe[:, 0]
    lengths = np.linalg.norm(d, axis=1)
    tangents = d / lengths[:, None]
    return pe, lengths, tangents


def _scatter(rows, cols, vals, shape) -> csr_matrix:
    m = coo_matrix((np.ravel(vals), (np.ravel(rows), np.ravel(cols))), shape=shape)
    return m.tocsr()


def assemble_mass(mesh: Mesh2D) -> csr_matrix:
    """Mass matrix of the combined L2 products over the bulk and the boundary."""
    n = mesh.n_nodes
    areas, _ = _element_gradients(mesh)
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    vals = areas[:, None, None] * local
    tri = mesh.triangles
    m = _scatter(np.repeat(tri, 3, axis=1), np.tile(tri, (1, 3)), vals, (n, n))
    if mesh.boundary_edges.size:
        _, lengths, _ = _edge_geometry(mesh)
        local_e = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
        vals_e = lengths[:, None, None] * local_e
        be = mesh.boundary_edges
        m = m + _scatter(np.repeat(be, 2, axis=1), np.tile(be, (1, 2)), vals_e, (n, n))
    return m.tocsr()


def assemble_stiffness(mesh: Mesh2D) -> csr_matrix:
    """Stiffness matrix: bulk gradients plus tangential gradients on the boundary.

    On a straight boundary edge the tangential gradient of a P1 trace is its
    arc-length derivative, so each edge of length L contributes
    (1/L) [[1, -1], [-1, 1]].
    """
    n = mesh.n_nodes
    areas, grads = _element_gradients(mesh)
    vals = np.einsum("eid,ejd->eij", grads, grads) * areas[:, None, None]
    tri = mesh.triangles
    a = _scatter(np.repeat(tri, 3, axis=1), np.tile(tri, (1, 3)), vals, (n, n))
    if mesh.boundary_edges.size:
        _, lengths, _ = _edge_geometry(mesh)
        local_e = np.array([[1.0, -1.0], [-1.0, 1.0]])
        vals_e = local_e / lengths[:, None, None]
        be = mesh.boundary_edges
        a = a + _scatter(np.repeat(be, 2, axis=1), np.tile(be, (1, 2)), vals_e, (n, n))
    return a.tocsr()


class MeshQuadrature:
    """Precomputed quadrature tables on one mesh for loads and error integrals.

    Attributes (Qb bulk points, Qs boundary points, N nodes, T triangles,
    B boundary edges):

    - ``bulk_points`` (Qb, 2), ``bulk_weights`` (Qb,): global points and
      weights (element area folded in).
    - ``bulk_basis`` (Qb, N) sparse: nodal values -> values at bulk points.
    - ``grad_x``, ``grad_y`` (T, N) sparse: nodal values -> constant element
      gradient components; ``bulk_element`` (Qb,) maps points to elements.
    - ``surf_points``, ``surf_weights``, ``surf_basis``: boundary analogues.
    - ``surf_dtan`` (B, N) sparse: nodal values -> arc-length derivative per
      edge; ``surf_edge`` (Qs,), ``surf_tangents`` (Qs, 2).
    """

    def __init__(self, mesh: Mesh2D, tri_rule=TRI_DEG2, edge_rule=EDGE_GAUSS2):
        self.mesh = mesh
        n = mesh.n_nodes
        bary, wq = tri_rule
        nq = len(wq)
        tri = mesh.triangles
        t_count = mesh.n_triangles
        p = mesh.nodes[tri]
        areas, grads = _element_gradients(mesh)

        self.bulk_points = np.einsum("qj,ejd->eqd", bary, p).reshape(-1, 2)
        self.bulk_weights = np.outer(areas, wq).ravel()
        rows = np.repeat(np.arange(t_count * nq), 3)
        cols = np.broadcast_to(tri[:, None, :], (t_count, nq, 3))
        vals = np.broadcast_to(bary[None, :, :], (t_count, nq, 3))
        self.bulk_basis = _scatter(rows, cols, vals, (t_count * nq, n))
        self.bulk_element = np.repeat(np.arange(t_count), nq)
        erows = np.repeat(np.arange(t_count), 3)
        self.grad_x = _scatter(erows, tri, grads[:, :, 0], (t_count, n))
        self.grad_y = _scatter(erows, tri, grads[:, :, 1], (t_count, n))

        xi, wxi = edge_rule
        ne = len(wxi)
        b_count = mesh.boundary_edges.shape[0]
        if b_count:
            pe, lengths, tangents = _edge_geometry(mesh)
            self.surf_points = (
                pe[:, None, 0, :] + xi[None, :, None] * (pe[:, 1, :] - pe[:, 0, :])[:, None, :]
            ).reshape(-1, 2)
            self.surf_weights = np.outer(lengths, wxi).ravel()
            be = mesh.boundary_edges
            rows = np.repeat(np.arange(b_count * ne), 2)
            cols = np.broadcast_to(be[:, None, :], (b_count, ne, 2))
            basis = np.stack([1.0 - xi, xi], axis=1)  # (ne, 2)
            vals = np.broadcast_to(basis[None, :, :], (b_count, ne, 2))
            self.surf_basis = _scatter(rows, cols, vals, (b_count * ne, n))
            self.surf_edge = np.repeat(np.arange(b_count), ne)
            self.surf_tangents = np.repeat(tangents, ne, axis=0)
            dvals = np.stack([-1.0 / lengths, 1.0 / lengths], axis=1)
            self.surf_dtan = _scatter(np.repeat(np.arange(b_count), 2), be, dvals, (b_count, n))
        else:
            self.surf_points = np.zeros((0, 2))
            self.surf_weights = np.zeros(0)
            self.surf_basis = csr_matrix((0, n))
            self.surf_edge = np.zeros(0, dtype=int)
            self.surf_tangents = np.zeros((0, 2))
            self.surf_dtan = csr_matrix((0, n))

    def nonlinear_load(self, pot: PotentialPair, u: FieldVector) -> FieldVector:
        load = self.bulk_basis.T @ (self.bulk_weights * pot.bulk.dw(self.bulk_basis @ u))
        if self.surf_weights.size:
            load = load + self.surf_basis.T @ (
                self.surf_weights * pot.surface.dw(self.surf_basis @ u)
            )
        return load

    def forcing_load(self, f_bulk: AnalyticField | None, f_surf: AnalyticField | None, t: float) -> FieldVector:
        load = np.zeros(self.mesh.n_nodes)
        if f_bulk is not None:
            load += self.bulk_basis.T @ (self.bulk_weights * f_bulk.value(self.bulk_points, t))
        if f_surf is not None and self.surf_weights.size:
            load += self.surf_basis.T @ (self.surf_weights * f_surf.value(self.surf_points, t))
        return load

    def ritz_rhs(self, v: AnalyticField, t: float) -> FieldVector:
        """Right-hand side pairing the exact field against every basis function.

        Bulk and boundary mass parts plus bulk gradient and boundary
        tangential-gradient parts; the exact tangential gradient is obtained
        by projecting the gradient with the exact circle normal at each
        boundary quadrature point.
        """
        if v.gradient is None:
            raise ValueError("ritz_rhs requires a field with a gradient")
        load = self.bulk_basis.T @ (self.bulk_weights * v.value(self.bulk_points, t))
        g = v.gradient(self.bulk_points, t)
        wg = self.bulk_weights[:, None] * g
        nq = self.bulk_weights.size // max(self.mesh.n_triangles, 1)
        per_elem = wg.reshape(self.mesh.n_triangles, nq, 2).sum(axis=1)
        load += self.grad_x.T @ per_elem[:, 0] + self.grad_y.T @ per_elem[:, 1]

        if self.surf_weights.size:
            load += self.surf_basis.T @ (self.surf_weights * v.value(self.surf_points, t))
            gs = v.gradient(self.surf_points, t)
            nu = self.surf_points / np.linalg.norm(self.surf_points, axis=1, keepdims=True)
            gs_tan = gs - (np.sum(gs * nu, axis=1, keepdims=True)) * nu
            along = np.sum(gs_tan * self.surf_tangents, axis=1) * self.surf_weights
            per_edge = np.zeros(self.surf_dtan.shape[0])
            np.add.at(per_edge, self.surf_edge, along)
            load += self.surf_dtan.T @ per_edge
        return load


def assemble_nonlinear_load(
    mesh: Mesh2D, pot: PotentialPair, u: FieldVector, quad: MeshQuadrature | None = None
) -> FieldVector:
    """Load vector of W'(u_h) paired against every basis function."""
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_nodes,):
        raise ValueError(f"coefficient vector has length {u.shape}, mesh has {mesh.n_nodes} nodes")
    quad = quad or MeshQuadrature(mesh)
    return quad.nonlinear_load(pot, u)


def assemble_forcing(
    mesh: Mesh2D,
    f_bulk: AnalyticField | None,
    f_surf: AnalyticField | None,
    t: float,
    quad: MeshQuadrature | None = None,
) -> FieldVector:
    """Load vector of the bulk and boundary inhomogeneities at time t."""
    quad = quad or MeshQuadrature(mesh)
    return quad.forcing_load(f_bulk, f_surf, t)


def interpolate(mesh: Mesh2D, v: AnalyticField, t: float) -> FieldVector:
    """Nodal interpolation: component i is v(node_i, t)."""
    return np.asarray(v.value(mesh.nodes, t), dtype=float)


def ritz_map(
    mesh: Mesh2D,
    v: AnalyticField,
    t: float,
    system: Factor | None = None,
    quad: MeshQuadrature | None = None,
) -> FieldVector:
    """Elliptic projection of an exact field into the P1 space.

    Solves (A + M) r = b with b the combined-form pairing of v against the
    basis; pass ``system`` (a factorisation of A + M) and ``quad`` to reuse
    them across calls.
    """
    if system is None:
        system = factorize(assemble_stiffness(mesh) + assemble_mass(mesh))
    quad = quad or MeshQuadrature(mesh)
    return system.solve(quad.ritz_rhs(v, t))


def write_matrix_market(path, matrix) -> None:
    """Export a sparse matrix in Matrix Market coordinate format."""
    mmwrite(path, coo_matrix(matrix))
