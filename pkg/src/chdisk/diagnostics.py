"""Discrete norms, energy, errors against exact solutions, defects and EOC."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import AnalyticField, FieldVector, MeshQuadrature, ritz_map
from .mesh import Mesh2D
from .potentials import PotentialPair, double_well
from .quadrature import EDGE_GAUSS3, TRI_DEG4
from .solvers import Factor, factorize
from .timestepping import FieldState

#: Column order of the error CSV written by the convergence driver.
ERROR_COLUMNS = (
    "err_u_L2_bulk",
    "err_u_L2_surf",
    "err_u_H1_bulk",
    "err_u_H1_surf",
    "err_w_L2_bulk",
    "err_w_L2_surf",
    "err_w_H1_bulk",
    "err_w_H1_surf",
)


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solution pair with the inhomogeneities that force it."""

    u: AnalyticField
    w: AnalyticField
    forcing_u_bulk: AnalyticField | None = None
    forcing_u_surf: AnalyticField | None = None
    forcing_w_bulk: AnalyticField | None = None
    forcing_w_surf: AnalyticField | None = None


@dataclass
class ErrorReport:
    """Per-run maxima over recorded times of all error components."""

    h: float
    tau: float
    errors: dict
    eoc: list | None = None


@dataclass
class EnergyTrace:
    """Sampled free-energy values along a trajectory."""

    times: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def append(self, t: float, value: float) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError(f"energy trace times must increase, got {t} after {self.times[-1]}")
        self.times.append(float(t))
        self.values.append(float(value))

    def write_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("t,energy\n")
            for t, e in zip(self.times, self.values):
                f.write(f"{t:.17g},{e:.17g}\n")


def discrete_norms(M, A, v: FieldVector) -> tuple[float, float, float]:
    """(L2, H1, gradient-seminorm) of a coefficient vector in the discrete forms."""
    mv = float(v @ (M @ v))
    av = float(v @ (A @ v))
    l2 = math.sqrt(max(mv, 0.0))
    semi = math.sqrt(max(av, 0.0))
    return l2, math.sqrt(max(mv + av, 0.0)), semi


def energy(mesh: Mesh2D, pot: PotentialPair, A, u: FieldVector, quad: MeshQuadrature | None = None) -> float:
    """Free energy: combined Dirichlet term plus integrated potentials."""
    quad = quad or MeshQuadrature(mesh)
    value = float(u @ (A @ u))
    value += float(quad.bulk_weights @ pot.bulk.w(quad.bulk_basis @ u))
    if quad.surf_weights.size:
        value += float(quad.surf_weights @ pot.surface.w(quad.surf_basis @ u))
    return value


def error_quadrature(mesh: Mesh2D) -> MeshQuadrature:
    """Sharper quadrature (degree 4 bulk, 3-point edges) for error integrals."""
    return MeshQuadrature(mesh, tri_rule=TRI_DEG4, edge_rule=EDGE_GAUSS3)


def _field_errors(quad: MeshQuadrature, coeffs: FieldVector, exact: AnalyticField, t: float):
    """Squared L2/H1 errors of one P1 field against an exact field, per region."""
    diff = quad.bulk_basis @ coeffs - exact.value(quad.bulk_points, t)
    l2_bulk = float(quad.bulk_weights @ np.square(diff))
    g = exact.gradient(quad.bulk_points, t)
    gx = (quad.grad_x @ coeffs)[quad.bulk_element] - g[:, 0]
    gy = (quad.grad_y @ coeffs)[quad.bulk_element] - g[:, 1]
    h1_bulk = l2_bulk + float(quad.bulk_weights @ (np.square(gx) + np.square(gy)))

    l2_surf = 0.0
    h1_surf = 0.0
    if quad.surf_weights.size:
        diff_s = quad.surf_basis @ coeffs - exact.value(quad.surf_points, t)
        l2_surf = float(quad.surf_weights @ np.square(diff_s))
        gs = exact.gradient(quad.surf_points, t)
        exact_tan = np.sum(gs * quad.surf_tangents, axis=1)
        dt = (quad.surf_dtan @ coeffs)[quad.surf_edge] - exact_tan
        h1_surf = l2_surf + float(quad.surf_weights @ np.square(dt))
    return l2_bulk, l2_surf, h1_bulk, h1_surf


def error_vs_exact(
    mesh: Mesh2D, state: FieldState, exact: ExactSolution, quad: MeshQuadrature | None = None
) -> dict:
    """Elementwise-quadrature errors of both variables, split by region and norm.

    Returns a dict keyed by :data:`ERROR_COLUMNS`.  L2 and H1 are the usual
    integral norms over the polygonal domain and its boundary, with the exact
    solution evaluated there.
    """
    quad = quad or error_quadrature(mesh)
    out = {}
    for name, coeffs, ex in (("u", state.u, exact.u), ("w", state.w, exact.w)):
        l2b, l2s, h1b, h1s = _field_errors(quad, coeffs, ex, state.t)
        out[f"err_{name}_L2_bulk"] = math.sqrt(l2b)
        out[f"err_{name}_L2_surf"] = math.sqrt(l2s)
        out[f"err_{name}_H1_bulk"] = math.sqrt(h1b)
        out[f"err_{name}_H1_surf"] = math.sqrt(h1s)
    return out


def max_errors(a: dict | None, b: dict) -> dict:
    """Componentwise running maximum for the uniform-in-time error."""
    if a is None:
        return dict(b)
    return {k: max(a[k], b[k]) for k in b}


def defect_dual_norms(
    mesh: Mesh2D,
    M,
    A,
    pot: PotentialPair,
    exact: ExactSolution,
    t: float,
    quad: MeshQuadrature | None = None,
    star_factor: Factor | None = None,
) -> tuple[float, float]:
    """Dual norms of both residuals left by the elliptic projection of the exact pair.

    Builds the projections of u, w and du/dt, forms the residual vectors of
    both equations (including forcing), and measures each in the dual norm
    sqrt(r^T (A+M)^{-1} r) that the combined-form inner product induces.
    """
    quad = quad or MeshQuadrature(mesh)
    star_factor = star_factor or factorize(A + M)
    u_star = ritz_map(mesh, exact.u, t, system=star_factor, quad=quad)
    w_star = ritz_map(mesh, exact.w, t, system=star_factor, quad=quad)
    udot_star = ritz_map(mesh, exact.u.time_derivative(), t, system=star_factor, quad=quad)
    f_u = quad.forcing_load(exact.forcing_u_bulk, exact.forcing_u_surf, t)
    f_w = quad.forcing_load(exact.forcing_w_bulk, exact.forcing_w_surf, t)

    r_u = M @ udot_star + A @ w_star - f_u
    r_w = M @ w_star - A @ u_star - quad.nonlinear_load(pot, u_star) - f_w
    d_u = math.sqrt(max(float(r_u @ star_factor.solve(r_u)), 0.0))
    d_w = math.sqrt(max(float(r_w @ star_factor.solve(r_w)), 0.0))
    return d_u, d_w


def eoc(values, hs) -> list[float]:
    """Pairwise experimental orders log(e_i/e_{i+1}) / log(h_i/h_{i+1})."""
    values = [float(v) for v in values]
    hs = [float(h) for h in hs]
    if len(values) != len(hs) or len(values) < 2:
        raise ValueError("need equally many values and hs, at least two")
    if any(v <= 0 for v in values) or any(h <= 0 for h in hs):
        raise ValueError("values and hs must be positive")
    if any(h2 >= h1 for h1, h2 in zip(hs, hs[1:])):
        raise ValueError("hs must be strictly decreasing")
    return [
        math.log(e1 / e2) / math.log(h1 / h2)
        for (e1, e2), (h1, h2) in zip(zip(values, values[1:]), zip(hs, hs[1:]))
    ]


def eoc_fit(values, hs, points: int = 3) -> float:
    """Least-squares slope of log(e) vs log(h) over the finest `points` entries."""
    k = min(points, len(values))
    if k < 2:
        raise ValueError("need at least two points for a fitted order")
    x = np.log(np.asarray(hs[-k:], dtype=float))
    y = np.log(np.asarray(values[-k:], dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def write_error_csv(path, reports) -> None:
    """One row per (mesh, tau) run with the documented fixed header."""
    with open(path, "w") as f:
        f.write("h,tau," + ",".join(ERROR_COLUMNS) + "\n")
        for r in reports:
            cells = [f"{r.h:.17g}", f"{r.tau:.17g}"]
            cells += [f"{r.errors[c]:.17g}" for c in ERROR_COLUMNS]
            f.write(",".join(cells) + "\n")


def write_eoc_csv(path, rows) -> None:
    """EOC summary rows (tau, column, fitted order over the finest points)."""
    with open(path, "w") as f:
        f.write("tau,column,eoc\n")
        for tau, column, value in rows:
            f.write(f"{tau:.17g},{column},{value:.17g}\n")


def manufactured_solution_xy(potentials: PotentialPair | None = None) -> ExactSolution:
    """The forced unit-disk solution u = w = exp(-t) x1 x2.

    The product x1 x2 is harmonic, so the bulk forcings reduce to
    -u and u - W'(u); on the unit circle its tangential Laplacian is
    -4 x1 x2 and its normal derivative 2 x1 x2, which fixes the boundary
    forcings of both equations.  Valid on the unit disk only.
    """
    pot = potentials or PotentialPair(bulk=double_well(0.25), surface=double_well(0.25))

    def val(x, t):
        return math.exp(-t) * x[..., 0] * x[..., 1]

    def grad(x, t):
        return math.exp(-t) * np.stack([x[..., 1], x[..., 0]], axis=-1)

    def neg_val(x, t):
        return -val(x, t)

    def neg_grad(x, t):
        return -grad(x, t)

    base = AnalyticField(value=val, gradient=grad, dt_value=neg_val, dt_gradient=neg_grad)
    dw_bulk, dw_surf = pot.bulk.dw, pot.surface.dw
    return ExactSolution(
        u=base,
        w=base,
        forcing_u_bulk=AnalyticField(value=neg_val),
        forcing_u_surf=AnalyticField(value=lambda x, t: 5.0 * val(x, t)),
        forcing_w_bulk=AnalyticField(value=lambda x, t: val(x, t) - dw_bulk(val(x, t))),
        forcing_w_surf=AnalyticField(value=lambda x, t: -5.0 * val(x, t) - dw_surf(val(x, t))),
    )


#: Exact solutions selectable from scenario configs.
EXACT_SOLUTIONS = {"xy_exp": manufactured_solution_xy}
