"""Command-line entry point: convergence sweeps, phase separation, mesh tools.

Verbs: ``converge`` (manufactured-solution sweep -> errors.csv + eoc.csv),
``spinodal`` (random +-1 start -> energy.csv + VTK snapshots), ``mesh-info``
(mesh metrics, optional export) and ``defects`` (dual-norm consistency
sweep).  Every run writes a manifest that is itself a valid config file.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (
    ERROR_COLUMNS,
    EnergyTrace,
    ErrorReport,
    defect_dual_norms,
    energy,
    eoc_fit,
    error_quadrature,
    error_vs_exact,
    max_errors,
)
from .mesh import disk_mesh_family, mesh_width, metrics
from .potentials import PotentialPair, potential_from_name
from .scenario import (
    ConfigError,
    Scenario,
    build_problem,
    parse_config,
    scenario_lines,
    spinodal_scenario,
    validate_scenario,
)
from .timestepping import IntegrationError, run_problem
from .vtkio import save_checkpoint, write_mesh_txt, write_vtk


def write_manifest(out_dir: Path, scenario: Scenario, extras: dict) -> None:
    """Config echo plus run metadata; reruns parse it with parse_config."""
    lines = [f"# chdisk {__version__} run manifest", "# rerun: chdisk <verb> --config manifest.txt"]
    for key, value in extras.items():
        lines.append(f"# {key}: {value}")
    lines += scenario_lines(scenario)
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def run_convergence(scenario: Scenario, out_dir: Path) -> list[ErrorReport]:
    """Sweep (mesh level, tau); write one errors.csv row per run plus EOC summary.

    Partial rows are flushed to disk before any abort propagates.
    """
    validate_scenario(scenario)
    if scenario.exact_solution is None:
        raise ConfigError("converge requires an exact_solution")
    out_dir.mkdir(parents=True, exist_ok=True)
    meshes = disk_mesh_family(scenario.domain_radius, scenario.mesh_levels)
    write_manifest(
        out_dir,
        scenario,
        {"node_counts": [m.n_nodes for m in meshes], "version": __version__},
    )

    reports: list[ErrorReport] = []
    errors_path = out_dir / "errors.csv"
    with open(errors_path, "w") as f:
        f.write("h,tau," + ",".join(ERROR_COLUMNS) + "\n")
        try:
            for tau in scenario.tau_list:
                for level, mesh in zip(scenario.mesh_levels, meshes):
                    run = replace(scenario, mesh_levels=(level,), tau_list=(tau,))
                    problem = build_problem(run, mesh=mesh)
                    equad = error_quadrature(mesh)
                    worst: dict | None = None

                    def record(index, state, _p=problem, _q=equad):
                        nonlocal worst
                        worst = max_errors(worst, error_vs_exact(_p.mesh, state, _p.exact, quad=_q))

                    run_problem(problem, sinks=(record,))
                    report = ErrorReport(h=mesh_width(mesh), tau=tau, errors=worst)
                    reports.append(report)
                    cells = [f"{report.h:.17g}", f"{tau:.17g}"]
                    cells += [f"{worst[c]:.17g}" for c in ERROR_COLUMNS]
                    f.write(",".join(cells) + "\n")
                    f.flush()
        except Exception:
            f.flush()
            raise

    if len(scenario.mesh_levels) >= 2:
        rows = []
        hs = [mesh_width(m) for m in meshes]
        for tau in scenario.tau_list:
            per_tau = [r for r in reports if r.tau == tau]
            for column in ERROR_COLUMNS:
                values = [r.errors[column] for r in per_tau]
                rows.append((tau, column, eoc_fit(values, hs)))
        from .diagnostics import write_eoc_csv

        write_eoc_csv(out_dir / "eoc.csv", rows)
    return reports


def run_spinodal(scenario: Scenario, out_dir: Path) -> EnergyTrace:
    """Phase-separation run: energy trace CSV plus field snapshots."""
    validate_scenario(scenario)
    out_dir.mkdir(parents=True, exist_ok=True)
    mesh = disk_mesh_family(scenario.domain_radius, scenario.mesh_levels[:1])[0]
    write_manifest(
        out_dir,
        scenario,
        {
            "node_counts": [mesh.n_nodes],
            "version": __version__,
            "seed": scenario.seed,
            "rng": "numpy PCG64 (default_rng)",
        },
    )
    problem = build_problem(scenario, mesh=mesh)
    trace = EnergyTrace()

    def energy_sink(index, state, _p=problem):
        trace.append(state.t, energy(_p.mesh, _p.potentials, _p.A, state.u, quad=_p.quad))

    sinks = [energy_sink]
    if scenario.snapshot_every:
        def snapshot_sink(index, state, _p=problem):
            if index % scenario.snapshot_every == 0 or index == _p.n_steps:
                write_vtk(out_dir / f"snapshot_{index:06d}.vtk", _p.mesh, {"u": state.u, "w": state.w})
        sinks.append(snapshot_sink)
    if scenario.checkpoint_every:
        def checkpoint_sink(index, state, _p=problem):
            if index % scenario.checkpoint_every == 0 or index == _p.n_steps:
                save_checkpoint(out_dir / f"checkpoint_{index:06d}.npz", state)
        sinks.append(checkpoint_sink)

    try:
        run_problem(problem, sinks=sinks)
    finally:
        # flush whatever was recorded, aborted runs included
        trace.write_csv(out_dir / "energy.csv")
    return trace


def run_defects(scenario: Scenario, out_dir: Path, times=(0.0, 0.5, 1.0)):
    """Dual norms of both consistency residuals across the mesh family."""
    validate_scenario(scenario)
    if scenario.exact_solution is None:
        raise ConfigError("defects requires an exact_solution")
    out_dir.mkdir(parents=True, exist_ok=True)
    meshes = disk_mesh_family(scenario.domain_radius, scenario.mesh_levels)
    write_manifest(out_dir, scenario, {"node_counts": [m.n_nodes for m in meshes]})
    potentials = PotentialPair(
        bulk=potential_from_name(*scenario.potential_bulk),
        surface=potential_from_name(*scenario.potential_surface),
    )
    from .assembly import MeshQuadrature, assemble_mass, assemble_stiffness
    from .diagnostics import EXACT_SOLUTIONS
    from .solvers import factorize

    exact = EXACT_SOLUTIONS[scenario.exact_solution]()
    rows = []
    for mesh in meshes:
        M, A = assemble_mass(mesh), assemble_stiffness(mesh)
        quad = MeshQuadrature(mesh)
        star = factorize(A + M)
        for t in times:
            d_u, d_w = defect_dual_norms(mesh, M, A, potentials, exact, t, quad=quad, star_factor=star)
            rows.append((mesh_width(mesh), t, d_u, d_w))
    with open(out_dir / "defects.csv", "w") as f:
        f.write("h,t,defect_u,defect_w\n")
        for h, t, d_u, d_w in rows:
            f.write(f"{h:.17g},{t:.17g},{d_u:.17g},{d_w:.17g}\n")
    return rows


def run_mesh_info(scenario: Scenario, out_dir: Path | None) -> None:
    meshes = disk_mesh_family(scenario.domain_radius, scenario.mesh_levels)
    for level, mesh in zip(scenario.mesh_levels, meshes):
        met = metrics(mesh)
        print(
            f"level {level}: nodes={met.n_nodes} boundary={met.n_boundary_nodes} "
            f"h={met.h:.6g} area={met.area:.6g} perimeter={met.perimeter:.6g}"
        )
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            write_vtk(out_dir / f"mesh_level{level}.vtk", mesh)
            write_mesh_txt(out_dir / f"mesh_level{level}.txt", mesh)


def _scenario_from_args(args, base: Scenario) -> Scenario:
    scenario = parse_config(args.config) if args.config else base
    overrides = {}
    if args.bdf is not None:
        overrides["bdf_order"] = args.bdf
    if args.levels is not None:
        overrides["mesh_levels"] = tuple(range(1, args.levels + 1))
    if args.tau is not None:
        overrides["tau_list"] = tuple(float(x) for x in args.tau.split(","))
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if overrides:
        scenario = replace(scenario, **overrides)
    validate_scenario(scenario)
    return scenario


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="chdisk", description=__doc__)
    parser.add_argument("--version", action="version", version=f"chdisk {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario config file (key = value lines)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="seed for random initial data")
    common.add_argument("--bdf", type=int, help="time integrator order (1..6)")
    common.add_argument("--levels", type=int, help="use mesh family levels 1..k")
    common.add_argument("--tau", help="comma-separated step sizes")
    for verb, description in (
        ("converge", "manufactured-solution convergence sweep"),
        ("spinodal", "seeded random phase-separation run"),
        ("mesh-info", "print mesh metrics, optionally export VTK/plain text"),
        ("defects", "dual norms of the consistency residuals over the mesh family"),
    ):
        sub.add_parser(verb, parents=[common], help=description)
    args = parser.parse_args(argv)

    try:
        if args.verb == "converge":
            scenario = _scenario_from_args(args, Scenario())
            out = Path(args.out or scenario.out_dir)
            reports = run_convergence(scenario, out)
            print(f"wrote {len(reports)} runs to {out / 'errors.csv'}")
        elif args.verb == "spinodal":
            base = spinodal_scenario(seed=args.seed) if args.seed is not None else spinodal_scenario()
            scenario = _scenario_from_args(args, base)
            out = Path(args.out or scenario.out_dir)
            trace = run_spinodal(scenario, out)
            print(
                f"energy {trace.values[0]:.6g} -> {trace.values[-1]:.6g} "
                f"over {len(trace.values) - 1} steps; wrote {out / 'energy.csv'}"
            )
        elif args.verb == "mesh-info":
            scenario = _scenario_from_args(args, Scenario())
            run_mesh_info(scenario, Path(args.out) if args.out else None)
        elif args.verb == "defects":
            scenario = _scenario_from_args(args, Scenario())
            out = Path(args.out or scenario.out_dir)
            rows = run_defects(scenario, out)
            print(f"wrote {len(rows)} rows to {out / 'defects.csv'}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
