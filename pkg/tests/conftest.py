import numpy as np
import pytest

from chdisk.mesh import Mesh2D, refine, ring_disk_mesh


def make_mesh(nodes, triangles, boundary_edges=(), radius=1.0):
    """Bare test mesh; no disk invariants enforced."""
    nodes = np.asarray(nodes, dtype=float)
    boundary_edges = np.asarray(boundary_edges, dtype=np.int64).reshape(-1, 2)
    mask = np.zeros(len(nodes), dtype=bool)
    if boundary_edges.size:
        mask[boundary_edges.ravel()] = True
    return Mesh2D(
        nodes=nodes,
        triangles=np.asarray(triangles, dtype=np.int64),
        boundary_edges=boundary_edges,
        boundary_mask=mask,
        radius=radius,
    )


@pytest.fixture(scope="session")
def reference_triangle():
    return make_mesh([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], [(0, 1, 2)])


@pytest.fixture(scope="session")
def unit_square():
    return make_mesh([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2), (0, 2, 3)])


@pytest.fixture(scope="session")
def disk19():
    return ring_disk_mesh(1.0, 2)


@pytest.fixture(scope="session")
def disk7():
    return ring_disk_mesh(1.0, 1)


@pytest.fixture(scope="session")
def refinement_chain(disk19):
    chain = [disk19]
    for _ in range(4):
        chain.append(refine(chain[-1]))
    return chain
