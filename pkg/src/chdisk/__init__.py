"""Bulk-surface P1 finite elements for Cahn-Hilliard dynamics on a disk.

The package couples a bulk phase-field equation with a dynamic boundary
condition of the same type, discretised by piecewise-linear finite elements
in the bulk and on the polygonal boundary, and advanced in time by linearly
implicit backward differentiation formulae.
"""

__version__ = "0.1.0"

from .mesh import (
    Mesh2D,
    MeshMetrics,
    MeshError,
    disk_mesh_family,
    generate_disk_mesh,
    mesh_width,
    metrics,
    refine,
    ring_disk_mesh,
)
from .potentials import Potential, PotentialPair, double_well, zero_potential
from .assembly import (
    AnalyticField,
    assemble_forcing,
    assemble_mass,
    assemble_nonlinear_load,
    assemble_stiffness,
    interpolate,
    ritz_map,
)
from .timestepping import (
    BdfScheme,
    BdfStepper,
    FieldState,
    History,
    bdf_coefficients,
    bootstrap,
    compute_initial_w,
    compute_theta,
    integrate,
    step,
)
from .diagnostics import (
    EnergyTrace,
    ErrorReport,
    ExactSolution,
    defect_dual_norms,
    discrete_norms,
    energy,
    eoc,
    error_vs_exact,
    manufactured_solution_xy,
)
from .scenario import Scenario, parse_config

__all__ = [name for name in dir() if not name.startswith("_")]
