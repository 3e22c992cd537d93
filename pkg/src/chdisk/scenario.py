"""Scenario configuration: parsing, validation and problem assembly.

Config files are plain ``key = value`` lines ('#' starts a comment).  Every
key has a documented default (the convergence-test configuration); unknown
keys are rejected with their line number.  See the README for the key table.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .assembly import FieldVector, MeshQuadrature, assemble_mass, assemble_stiffness, interpolate, ritz_map
from .diagnostics import EXACT_SOLUTIONS, ExactSolution
from .mesh import Mesh2D, disk_mesh_family
from .potentials import PotentialPair, potential_from_name
from .solvers import factorize
from .timestepping import bdf_coefficients, compute_theta


class ConfigError(ValueError):
    """A scenario file or field is malformed or violates an invariant."""


@dataclass(frozen=True)
class Scenario:
    """Complete description of one experiment (sweeps carry lists)."""

    domain_radius: float = 1.0
    mesh_levels: tuple = (1, 2, 3, 4, 5)
    tau_list: tuple = (0.05, 0.025, 0.0125, 0.005, 0.0025, 0.00125)
    bdf_order: int = 3
    potential_bulk: tuple = ("double_well", 0.25)
    potential_surface: tuple = ("double_well", 0.25)
    final_time: float = 1.0
    initial_data: str = "interpolated_exact"
    seed: int | None = None
    theta_correction: bool = False
    exact_solution: str | None = "xy_exp"
    out_dir: str = "results"
    snapshot_every: int = 0
    checkpoint_every: int = 0


def spinodal_scenario(seed: int = 7) -> Scenario:
    """Phase-separation defaults: radius 10, ~640 nodes, strong double well.

    This parameter set sits near the stability boundary of the linearly
    implicit scheme (the explicit potential term can blow up for rough
    seeds or longer horizons; the run then aborts loudly).  The default
    horizon stays within the observed stable range.
    """
    return Scenario(
        domain_radius=10.0,
        mesh_levels=(6,),
        tau_list=(0.00125,),
        bdf_order=2,
        potential_bulk=("double_well", 10.0),
        potential_surface=("double_well", 10.0),
        final_time=0.125,
        initial_data="random_pm1",
        seed=seed,
        exact_solution=None,
        snapshot_every=20,
    )


_INITIAL_DATA = ("interpolated_exact", "ritz_exact", "random_pm1")


def validate_scenario(s: Scenario) -> None:
    """Check every invariant; raise ConfigError naming the offending field."""
    if s.domain_radius <= 0:
        raise ConfigError(f"radius must be positive, got {s.domain_radius}")
    if not s.mesh_levels:
        raise ConfigError("levels must name at least one mesh level")
    if any(k < 1 for k in s.mesh_levels):
        raise ConfigError(f"levels must be >= 1, got {s.mesh_levels}")
    if not s.tau_list or any(t <= 0 for t in s.tau_list):
        raise ConfigError(f"tau values must be positive, got {s.tau_list}")
    if not 1 <= s.bdf_order <= 6:
        raise ConfigError(f"bdf order must be in 1..6, got {s.bdf_order}")
    if s.final_time <= 0:
        raise ConfigError(f"final_time must be positive, got {s.final_time}")
    for tau in s.tau_list:
        steps = s.final_time / tau
        if abs(steps - round(steps)) > 1e-12 * steps:
            raise ConfigError(f"final_time {s.final_time} is not divisible by tau {tau}")
    if s.initial_data not in _INITIAL_DATA:
        raise ConfigError(f"initial_data must be one of {_INITIAL_DATA}, got {s.initial_data!r}")
    if s.initial_data == "random_pm1" and s.seed is None:
        raise ConfigError("initial_data random_pm1 requires a seed")
    if s.initial_data in ("interpolated_exact", "ritz_exact") and s.exact_solution is None:
        raise ConfigError(f"initial_data {s.initial_data} requires an exact_solution")
    if s.theta_correction and s.exact_solution is None:
        raise ConfigError("theta_correction requires an exact_solution")
    if s.exact_solution is not None and s.exact_solution not in EXACT_SOLUTIONS:
        raise ConfigError(
            f"unknown exact_solution {s.exact_solution!r}; known: {sorted(EXACT_SOLUTIONS)}"
        )
    if s.snapshot_every < 0 or s.checkpoint_every < 0:
        raise ConfigError("snapshot_every and checkpoint_every must be >= 0")
    for name, (pname, scale) in (("potential_bulk", s.potential_bulk), ("potential_surface", s.potential_surface)):
        try:
            potential_from_name(pname, scale)
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from None


def _parse_potential(text: str) -> tuple:
    name, _, scale = text.partition(":")
    return (name.strip(), float(scale) if scale else None)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("on", "true", "yes", "1"):
        return True
    if lowered in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


_PARSERS: dict[str, tuple[str, Callable]] = {
    "radius": ("domain_radius", float),
    "levels": ("mesh_levels", lambda v: tuple(int(x) for x in v.split(","))),
    "tau": ("tau_list", lambda v: tuple(float(x) for x in v.split(","))),
    "bdf": ("bdf_order", int),
    "potential_bulk": ("potential_bulk", _parse_potential),
    "potential_surface": ("potential_surface", _parse_potential),
    "final_time": ("final_time", float),
    "initial_data": ("initial_data", str.strip),
    "seed": ("seed", int),
    "theta_correction": ("theta_correction", _parse_bool),
    "exact_solution": ("exact_solution", lambda v: None if v.strip() == "none" else v.strip()),
    "out_dir": ("out_dir", str.strip),
    "snapshot_every": ("snapshot_every", int),
    "checkpoint_every": ("checkpoint_every", int),
}


def parse_config(path) -> Scenario:
    """Parse and validate a key=value scenario file; defaults fill absent keys."""
    overrides = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            field_name, parser = _PARSERS[key]
            try:
                overrides[field_name] = parser(value.strip())
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    scenario = replace(Scenario(), **overrides)
    validate_scenario(scenario)
    return scenario


def scenario_lines(s: Scenario) -> list[str]:
    """The scenario as config-format lines (used for the run manifest)."""
    pot = lambda p: p[0] if p[1] is None else f"{p[0]}:{p[1]:g}"
    lines = [
        f"radius = {s.domain_radius:g}",
        "levels = " + ",".join(str(k) for k in s.mesh_levels),
        "tau = " + ",".join(f"{t:g}" for t in s.tau_list),
        f"bdf = {s.bdf_order}",
        f"potential_bulk = {pot(s.potential_bulk)}",
        f"potential_surface = {pot(s.potential_surface)}",
        f"final_time = {s.final_time:g}",
        f"initial_data = {s.initial_data}",
        f"theta_correction = {'on' if s.theta_correction else 'off'}",
        f"exact_solution = {s.exact_solution or 'none'}",
        f"out_dir = {s.out_dir}",
        f"snapshot_every = {s.snapshot_every}",
        f"checkpoint_every = {s.checkpoint_every}",
    ]
    if s.seed is not None:
        lines.insert(8, f"seed = {s.seed}")
    return lines


@dataclass
class Problem:
    """A single prepared integration: mesh, matrices, scheme and data."""

    mesh: Mesh2D
    M: object
    A: object
    quad: MeshQuadrature
    potentials: PotentialPair
    scheme: object
    tau: float
    n_steps: int
    u0: FieldVector
    theta: FieldVector | None
    forcing: Callable | None
    exact: ExactSolution | None


def build_problem(scenario: Scenario, mesh: Mesh2D | None = None) -> Problem:
    """Assemble everything integrate() needs for the scenario's first (level, tau).

    Sweep drivers call this once per (mesh level, tau) pair with singleton
    lists.  Passing ``mesh`` overrides the family lookup.
    """
    validate_scenario(scenario)
    if mesh is None:
        mesh = disk_mesh_family(scenario.domain_radius, scenario.mesh_levels[:1])[0]
    tau = scenario.tau_list[0]
    n_steps = round(scenario.final_time / tau)

    M = assemble_mass(mesh)
    A = assemble_stiffness(mesh)
    quad = MeshQuadrature(mesh)
    potentials = PotentialPair(
        bulk=potential_from_name(*scenario.potential_bulk),
        surface=potential_from_name(*scenario.potential_surface),
    )
    exact = EXACT_SOLUTIONS[scenario.exact_solution]() if scenario.exact_solution else None

    forcing = None
    if exact is not None:
        def forcing(t, _quad=quad, _exact=exact):
            return (
                _quad.forcing_load(_exact.forcing_u_bulk, _exact.forcing_u_surf, t),
                _quad.forcing_load(_exact.forcing_w_bulk, _exact.forcing_w_surf, t),
            )

    star_factor = None
    if scenario.initial_data == "interpolated_exact":
        u0 = interpolate(mesh, exact.u, 0.0)
    elif scenario.initial_data == "ritz_exact":
        star_factor = factorize(A + M)
        u0 = ritz_map(mesh, exact.u, 0.0, system=star_factor, quad=quad)
    else:  # random_pm1
        rng = np.random.default_rng(scenario.seed)
        u0 = 2.0 * rng.integers(0, 2, size=mesh.n_nodes).astype(float) - 1.0

    theta = None
    if scenario.theta_correction:
        star_factor = star_factor or factorize(A + M)
        u0_ritz = ritz_map(mesh, exact.u, 0.0, system=star_factor, quad=quad)
        w0_ritz = ritz_map(mesh, exact.w, 0.0, system=star_factor, quad=quad)
        nl = lambda u: quad.nonlinear_load(potentials, u)
        f_w0 = forcing(0.0)[1] if forcing is not None else None
        theta = compute_theta(M, A, u0_ritz, w0_ritz, nl, f_w=f_w0)

    return Problem(
        mesh=mesh,
        M=M,
        A=A,
        quad=quad,
        potentials=potentials,
        scheme=bdf_coefficients(scenario.bdf_order),
        tau=tau,
        n_steps=n_steps,
        u0=u0,
        theta=theta,
        forcing=forcing,
        exact=exact,
    )
