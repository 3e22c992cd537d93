"""Triangulations of a disk whose boundary nodes lie exactly on the circle.

The generator builds concentric rings of nodes (ring i carries 6i nodes at
radius i*R/n) joined by a greedy strip triangulation, which is deterministic,
quasi-uniform and symmetric under the dihedral group of order 12.  Red
refinement splits every triangle into four, projecting boundary midpoints
radially back onto the circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class MeshError(ValueError):
    """A mesh violates a structural invariant or an argument is out of range."""


@dataclass(frozen=True)
class Mesh2D:
    """Immutable triangulation of a disk of the given radius.

    Attributes
    ----------
    nodes : (N, 2) float array of node coordinates.
    triangles : (T, 3) int array, counter-clockwise node triples.
    boundary_edges : (B, 2) int array, directed edges forming one closed
        counter-clockwise cycle around the boundary (empty for test meshes).
    boundary_mask : (N,) bool array flagging boundary nodes.
    radius : nominal circle radius the boundary nodes sit on.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_mask: np.ndarray
    radius: float

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_boundary_nodes(self) -> int:
        return int(self.boundary_mask.sum())


@dataclass(frozen=True)
class MeshMetrics:
    """Exact geometric summary of a mesh (areas by cross product)."""

    h: float
    n_nodes: int
    n_boundary_nodes: int
    area: float
    perimeter: float


def _as_mesh(nodes, triangles, boundary_edges, boundary_mask, radius) -> Mesh2D:
    mesh = Mesh2D(
        nodes=np.ascontiguousarray(nodes, dtype=float),
        triangles=np.ascontiguousarray(triangles, dtype=np.int64),
        boundary_edges=np.ascontiguousarray(boundary_edges, dtype=np.int64).reshape(-1, 2),
        boundary_mask=np.ascontiguousarray(boundary_mask, dtype=bool),
        radius=float(radius),
    )
    mesh.nodes.setflags(write=False)
    mesh.triangles.setflags(write=False)
    mesh.boundary_edges.setflags(write=False)
    mesh.boundary_mask.setflags(write=False)
    return mesh


def signed_areas(mesh: Mesh2D) -> np.ndarray:
    """Signed area of every triangle (positive for counter-clockwise)."""
    p = mesh.nodes[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _triangle_edge_lengths(mesh: Mesh2D) -> np.ndarray:
    p = mesh.nodes[mesh.triangles]
    return np.stack(
        [
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
        ],
        axis=1,
    )


def mesh_width(mesh: Mesh2D) -> float:
    """Maximal element diameter: the longest triangle edge in the mesh."""
    return float(_triangle_edge_lengths(mesh).max())


def quasi_uniformity_ratio(mesh: Mesh2D) -> float:
    """Max element diameter over min inscribed-circle diameter."""
    lengths = _triangle_edge_lengths(mesh)
    areas = signed_areas(mesh)
    # inscribed radius = area / semi-perimeter
    inscribed = 2.0 * areas / lengths.sum(axis=1)
    return float(lengths.max() / (2.0 * inscribed.min()))


def metrics(mesh: Mesh2D) -> MeshMetrics:
    """Mesh width, node counts, polygon area and boundary perimeter."""
    area = float(signed_areas(mesh).sum())
    if mesh.boundary_edges.size:
        d = mesh.nodes[mesh.boundary_edges[:, 1]] - mesh.nodes[mesh.boundary_edges[:, 0]]
        perimeter = float(np.linalg.norm(d, axis=1).sum())
    else:
        perimeter = 0.0
    return MeshMetrics(
        h=mesh_width(mesh),
        n_nodes=mesh.n_nodes,
        n_boundary_nodes=mesh.n_boundary_nodes,
        area=area,
        perimeter=perimeter,
    )


def _strip_triangles(nodes, inner, outer):
    """Greedily zip two concentric node cycles into a strip of CCW triangles.

    Advances whichever pointer creates the shorter new diagonal; ties advance
    the outer cycle.  Produces len(inner) + len(outer) triangles.
    """
    m, big = len(inner), len(outer)
    tris = []
    p = q = 0
    while p < m or q < big:
        if p == m:
            advance_outer = True
        elif q == big:
            advance_outer = False
        else:
            d_outer = np.linalg.norm(nodes[inner[p % m]] - nodes[outer[(q + 1) % big]])
            d_inner = np.linalg.norm(nodes[inner[(p + 1) % m]] - nodes[outer[q % big]])
            advance_outer = d_outer <= d_inner
        if advance_outer:
            tris.append((inner[p % m], outer[q % big], outer[(q + 1) % big]))
            q += 1
        else:
            tris.append((inner[p % m], outer[q % big], inner[(p + 1) % m]))
            p += 1
    return tris


def ring_disk_mesh(radius: float, rings: int) -> Mesh2D:
    """Structured disk triangulation with the given number of concentric rings.

    Ring i holds 6i nodes at radius i*radius/rings, so the mesh has
    1 + 3*rings*(rings+1) nodes and 6*rings**2 triangles.
    """
    if radius <= 0:
        raise MeshError(f"radius must be positive, got {radius}")
    if rings < 1:
        raise MeshError(f"rings must be >= 1, got {rings}")
    pts = [(0.0, 0.0)]
    ring_index = [np.array([0])]
    for i in range(1, rings + 1):
        r = radius * i / rings
        start = len(pts)
        count = 6 * i
        angles = 2.0 * math.pi * np.arange(count) / count
        pts.extend(zip(r * np.cos(angles), r * np.sin(angles)))
        ring_index.append(np.arange(start, start + count))
    nodes = np.array(pts)

    tris = []
    center_fan = ring_index[1]
    for j in range(6):
        tris.append((0, center_fan[j], center_fan[(j + 1) % 6]))
    for i in range(2, rings + 1):
        tris.extend(_strip_triangles(nodes, ring_index[i - 1], ring_index[i]))

    outer = ring_index[rings]
    boundary_edges = np.column_stack([outer, np.roll(outer, -1)])
    boundary_mask = np.zeros(len(nodes), dtype=bool)
    boundary_mask[outer] = True

    mesh = _as_mesh(nodes, np.array(tris), boundary_edges, boundary_mask, radius)
    validate_mesh(mesh)
    return mesh


def generate_disk_mesh(radius: float, target_h: float) -> Mesh2D:
    """Deterministic quasi-uniform disk mesh with width <= ~1.5 * target_h."""
    if radius <= 0:
        raise MeshError(f"radius must be positive, got {radius}")
    if target_h <= 0:
        raise MeshError(f"target_h must be positive, got {target_h}")
    if target_h >= radius:
        raise MeshError(f"target_h must be smaller than radius, got {target_h} >= {radius}")
    rings = max(1, math.ceil(radius / target_h))
    return ring_disk_mesh(radius, rings)


def disk_mesh_family(radius: float, levels) -> list[Mesh2D]:
    """Disk meshes whose node counts track the doubling sequence 10 * 2**k.

    Level k picks the ring count minimising |1 + 3n(n+1) - 10*2**k|, giving
    node counts 19, 37, 91, 169, 331, 631, 1261, 2611, ... for k = 1, 2, ...
    """
    meshes = []
    for k in levels:
        if k < 1:
            raise MeshError(f"family level must be >= 1, got {k}")
        target = 10 * 2**k
        guess = (math.sqrt(1.0 + 4.0 * (target - 1) / 3.0) - 1.0) / 2.0
        candidates = [m for m in (math.floor(guess), math.ceil(guess)) if m >= 1] or [1]
        best = min(candidates, key=lambda m: (abs(1 + 3 * m * (m + 1) - target), m))
        meshes.append(ring_disk_mesh(radius, best))
    return meshes


def refine(mesh: Mesh2D) -> Mesh2D:
    """Red refinement: split each triangle into 4 via edge midpoints.

    Interior midpoints are arithmetic means of the edge endpoints; boundary
    midpoints are projected radially onto the circle of the mesh radius.
    Parent node coordinates are unchanged in the child mesh.
    """
    nodes = [tuple(p) for p in mesh.nodes]
    midpoint = {}

    def mid(i, j):
        key = (i, j) if i < j else (j, i)
        idx = midpoint.get(key)
        if idx is None:
            idx = len(nodes)
            midpoint[key] = idx
            nodes.append(tuple(0.5 * (mesh.nodes[i] + mesh.nodes[j])))
        return idx

    tris = []
    for a, b, c in mesh.triangles:
        mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
        tris.extend([(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)])

    boundary_edges = []
    boundary_nodes = set(np.flatnonzero(mesh.boundary_mask))
    for i, j in mesh.boundary_edges:
        m = midpoint[(i, j) if i < j else (j, i)]
        x, y = nodes[m]
        scale = mesh.radius / math.hypot(x, y)
        nodes[m] = (x * scale, y * scale)
        boundary_nodes.add(m)
        boundary_edges.extend([(i, m), (m, j)])

    mask = np.zeros(len(nodes), dtype=bool)
    mask[list(boundary_nodes)] = True
    child = _as_mesh(np.array(nodes), np.array(tris), np.array(boundary_edges), mask, mesh.radius)
    validate_mesh(child, require_boundary=mesh.boundary_edges.size > 0)
    return child


def validate_mesh(mesh: Mesh2D, require_boundary: bool = True) -> None:
    """Check the structural invariants; raise MeshError on the first failure."""
    if mesh.nodes.ndim != 2 or mesh.nodes.shape[1] != 2 or not np.isfinite(mesh.nodes).all():
        raise MeshError("nodes must be a finite (N, 2) array")
    if mesh.triangles.min(initial=0) < 0 or mesh.triangles.max(initial=-1) >= mesh.n_nodes:
        raise MeshError("triangle indices out of range")

    areas = signed_areas(mesh)
    if not (areas > 0).all():
        bad = int(np.argmin(areas))
        raise MeshError(f"triangle {bad} has non-positive signed area {areas[bad]:.3e}")

    # undirected edge -> number of adjacent triangles
    counts: dict[tuple[int, int], int] = {}
    for a, b, c in mesh.triangles:
        for i, j in ((a, b), (b, c), (c, a)):
            key = (i, j) if i < j else (j, i)
            counts[key] = counts.get(key, 0) + 1
    if any(v > 2 for v in counts.values()):
        raise MeshError("an edge is shared by more than two triangles")

    free = {e for e, v in counts.items() if v == 1}
    declared = {(min(i, j), max(i, j)) for i, j in mesh.boundary_edges}
    if require_boundary:
        if free != declared:
            raise MeshError("boundary_edges do not match the edges with exactly one triangle")
        edges = mesh.boundary_edges
        if not (edges[:, 1] == np.roll(edges[:, 0], -1)).all():
            raise MeshError("boundary_edges are not an ordered closed cycle")
        cycle_nodes = set(edges[:, 0].tolist())
        if len(cycle_nodes) != len(edges):
            raise MeshError("boundary cycle revisits a node (more than one cycle?)")
        if cycle_nodes != set(np.flatnonzero(mesh.boundary_mask).tolist()):
            raise MeshError("boundary_mask does not match the boundary cycle")
        r = np.linalg.norm(mesh.nodes[mesh.boundary_mask], axis=1)
        err = np.abs(r - mesh.radius).max(initial=0.0)
        if err > 1e-12 * mesh.radius:
            raise MeshError(f"a boundary node is off the circle by {err:.3e}")
