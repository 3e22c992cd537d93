"""Mesh and snapshot export: legacy VTK ASCII, plain text, and checkpoints.

The VTK writer emits an unstructured grid with the triangles as cells of
type 5 and the boundary edges as line cells of type 3; nodal fields go into
POINT_DATA scalars.  The plain-text format is documented in the README.
"""

from __future__ import annotations

import re

import numpy as np

from .mesh import Mesh2D, validate_mesh

VTK_TRIANGLE = 5
VTK_LINE = 3


def write_vtk(path, mesh: Mesh2D, point_data: dict | None = None) -> None:
    """Write the mesh (and optional nodal scalar fields) as legacy ASCII VTK."""
    tris = mesh.triangles
    lines = mesh.boundary_edges
    n_cells = len(tris) + len(lines)
    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write(f"chdisk mesh radius={mesh.radius:.17g}\n")
        f.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {mesh.n_nodes} double\n")
        for x, y in mesh.nodes:
            f.write(f"{x:.17g} {y:.17g} 0\n")
        f.write(f"CELLS {n_cells} {4 * len(tris) + 3 * len(lines)}\n")
        for a, b, c in tris:
            f.write(f"3 {a} {b} {c}\n")
        for a, b in lines:
            f.write(f"2 {a} {b}\n")
        f.write(f"CELL_TYPES {n_cells}\n")
        f.write("\n".join([str(VTK_TRIANGLE)] * len(tris) + [str(VTK_LINE)] * len(lines)) + "\n")
        if point_data:
            f.write(f"POINT_DATA {mesh.n_nodes}\n")
            for name, values in point_data.items():
                f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for v in np.asarray(values, dtype=float):
                    f.write(f"{v:.17g}\n")


def read_vtk(path) -> tuple[Mesh2D, dict]:
    """Read a mesh written by :func:`write_vtk`; returns (mesh, point_data)."""
    with open(path) as f:
        tokens_lines = f.readlines()
    title = tokens_lines[1] if len(tokens_lines) > 1 else ""
    match = re.search(r"radius=([0-9eE+\-.]+)", title)
    radius = float(match.group(1)) if match else 1.0

    flat: list[str] = []
    for line in tokens_lines[2:]:
        flat.extend(line.split())
    pos = 0

    def expect(word):
        nonlocal pos
        if flat[pos].upper() != word:
            raise ValueError(f"{path}: expected {word}, got {flat[pos]!r}")
        pos += 1

    expect("ASCII")
    expect("DATASET")
    expect("UNSTRUCTURED_GRID")
    expect("POINTS")
    n = int(flat[pos]); pos += 2  # count, dtype
    coords = np.array(flat[pos : pos + 3 * n], dtype=float).reshape(n, 3)
    pos += 3 * n
    expect("CELLS")
    n_cells = int(flat[pos]); total = int(flat[pos + 1]); pos += 2
    cells = []
    for _ in range(n_cells):
        k = int(flat[pos])
        cells.append([int(v) for v in flat[pos + 1 : pos + 1 + k]])
        pos += 1 + k
    expect("CELL_TYPES")
    pos += 1  # count
    types = [int(flat[pos + i]) for i in range(n_cells)]
    pos += n_cells

    point_data: dict[str, np.ndarray] = {}
    while pos < len(flat):
        if flat[pos].upper() == "POINT_DATA":
            pos += 2
        elif flat[pos].upper() == "SCALARS":
            name = flat[pos + 1]
            pos += 4  # SCALARS name dtype ncomp
            if flat[pos].upper() == "LOOKUP_TABLE":
                pos += 2
            point_data[name] = np.array(flat[pos : pos + n], dtype=float)
            pos += n
        else:
            raise ValueError(f"{path}: unexpected token {flat[pos]!r}")

    tris = np.array([c for c, t in zip(cells, types) if t == VTK_TRIANGLE], dtype=np.int64)
    edges = np.array([c for c, t in zip(cells, types) if t == VTK_LINE], dtype=np.int64).reshape(-1, 2)
    mask = np.zeros(n, dtype=bool)
    if edges.size:
        mask[edges.ravel()] = True
    mesh = Mesh2D(
        nodes=coords[:, :2], triangles=tris, boundary_edges=edges, boundary_mask=mask, radius=radius
    )
    validate_mesh(mesh, require_boundary=bool(edges.size))
    return mesh, point_data


def write_mesh_txt(path, mesh: Mesh2D) -> None:
    """Plain-text node/element format (see README: nodes, triangles, boundary)."""
    with open(path, "w") as f:
        f.write(f"radius {mesh.radius:.17g}\n")
        f.write(f"nodes {mesh.n_nodes}\n")
        for (x, y), on_boundary in zip(mesh.nodes, mesh.boundary_mask):
            f.write(f"{x:.17g} {y:.17g} {int(on_boundary)}\n")
        f.write(f"triangles {mesh.n_triangles}\n")
        for a, b, c in mesh.triangles:
            f.write(f"{a} {b} {c}\n")
        f.write(f"boundary_edges {len(mesh.boundary_edges)}\n")
        for a, b in mesh.boundary_edges:
            f.write(f"{a} {b}\n")


def read_mesh_txt(path) -> Mesh2D:
    """Read the plain-text format written by :func:`write_mesh_txt`."""
    with open(path) as f:
        words = f.read().split()
    pos = 0

    def section(name, per_row):
        nonlocal pos
        if words[pos] != name:
            raise ValueError(f"{path}: expected section {name!r}, got {words[pos]!r}")
        count = int(words[pos + 1])
        pos += 2
        rows = np.array(words[pos : pos + per_row * count]).reshape(count, per_row)
        pos += per_row * count
        return rows

    if words[0] != "radius":
        raise ValueError(f"{path}: expected 'radius', got {words[0]!r}")
    radius = float(words[1])
    pos = 2
    node_rows = section("nodes", 3)
    tri_rows = section("triangles", 3).astype(np.int64)
    edge_rows = section("boundary_edges", 2).astype(np.int64)
    mesh = Mesh2D(
        nodes=node_rows[:, :2].astype(float),
        triangles=tri_rows,
        boundary_edges=edge_rows,
        boundary_mask=node_rows[:, 2].astype(int).astype(bool),
        radius=radius,
    )
    validate_mesh(mesh, require_boundary=bool(edge_rows.size))
    return mesh


def save_checkpoint(path, state) -> None:
    """Binary (t, u, w) dump of one time level."""
    np.savez(path, t=state.t, u=state.u, w=state.w)


def load_checkpoint(path):
    data = np.load(path)
    return float(data["t"]), data["u"], data["w"]
