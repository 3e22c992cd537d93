import numpy as np
import pytest

from chdisk.assembly import MeshQuadrature, assemble_mass, assemble_stiffness, interpolate, ritz_map
from chdisk.diagnostics import eoc, manufactured_solution_xy
from chdisk.mesh import mesh_width
from chdisk.potentials import PotentialPair, double_well, zero_potential
from chdisk.solvers import factorize
from chdisk.timestepping import (
    BdfStepper,
    FieldState,
    History,
    IntegrationError,
    bdf_coefficients,
    bootstrap,
    compute_initial_w,
    compute_theta,
    step,
)

from oracles import dense_solve, monolithic_step_dense

ZERO_POT = PotentialPair(zero_potential(), zero_potential())


def expand_generating_polynomials(q):
    """Oracle: expand the two generating polynomials with numpy arithmetic."""
    one_minus_z = np.polynomial.Polynomial([1.0, -1.0])
    delta = np.polynomial.Polynomial([0.0])
    for ell in range(1, q + 1):
        delta += one_minus_z**ell / ell
    gamma = np.polynomial.Polynomial([1.0]) - one_minus_z**q
    gamma_coef = gamma.coef[1:]  # divide by zeta
    d = np.zeros(q + 1)
    d[: len(delta.coef)] = delta.coef
    g = np.zeros(q)
    g[: len(gamma_coef)] = gamma_coef
    return d, g


def test_bdf1_and_bdf2_frozen_values():
    s1 = bdf_coefficients(1)
    assert np.array_equal(s1.delta, [1.0, -1.0])
    assert np.array_equal(s1.gamma, [1.0])
    s2 = bdf_coefficients(2)
    assert np.allclose(s2.delta, [1.5, -2.0, 0.5], atol=1e-15)
    assert np.array_equal(s2.gamma, [2.0, -1.0])
    s3 = bdf_coefficients(3)
    assert np.allclose(s3.delta, [11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0], atol=1e-15)
    assert np.array_equal(s3.gamma, [3.0, -3.0, 1.0])


@pytest.mark.parametrize("q", range(1, 7))
def test_coefficients_match_polynomial_oracle(q):
    scheme = bdf_coefficients(q)
    d, g = expand_generating_polynomials(q)
    assert np.allclose(scheme.delta, d, atol=1e-13)
    assert np.allclose(scheme.gamma, g, atol=1e-13)
    assert abs(scheme.delta.sum()) <= 1e-13  # consistency: delta(1) = 0
    assert scheme.gamma.sum() == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("q", range(1, 7))
def test_backward_difference_exact_on_polynomials(q):
    scheme = bdf_coefficients(q)
    tau = 0.07
    t_n = 1.3
    rng = np.random.default_rng(q)
    for degree in range(q + 1):
        coeffs = rng.uniform(0.5, 2.0, degree + 1)
        p = np.polynomial.Polynomial(coeffs)
        dp = p.deriv()
        approx = sum(scheme.delta[j] * p(t_n - j * tau) for j in range(q + 1)) / tau
        assert approx == pytest.approx(dp(t_n), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("q", range(1, 7))
def test_extrapolation_exact_on_polynomials(q):
    scheme = bdf_coefficients(q)
    tau = 0.05
    t_n = 0.8
    rng = np.random.default_rng(10 + q)
    for degree in range(q):
        p = np.polynomial.Polynomial(rng.uniform(0.5, 2.0, degree + 1))
        approx = sum(scheme.gamma[j] * p(t_n - (1 + j) * tau) for j in range(q))
        assert approx == pytest.approx(p(t_n), rel=1e-12, abs=1e-12)


def test_rejects_out_of_range_order():
    for q in (0, 7, -1):
        with pytest.raises(ValueError):
            bdf_coefficients(q)


def test_history_requires_uniform_spacing(disk19):
    n = disk19.n_nodes
    mk = lambda t: FieldState(np.zeros(n), np.zeros(n), t)
    with pytest.raises(ValueError, match="uniform"):
        History([mk(0.0), mk(0.1), mk(0.3)], 0.1)
    h = History([mk(0.0), mk(0.1)], 0.1)
    with pytest.raises(ValueError, match="extend"):
        h.push(mk(0.35))


def test_compute_initial_w_trivial_cases(disk19):
    M = assemble_mass(disk19)
    A = assemble_stiffness(disk19)
    quad = MeshQuadrature(disk19)
    nl_zero = lambda u: quad.nonlinear_load(ZERO_POT, u)
    n = disk19.n_nodes
    assert np.abs(compute_initial_w(M, A, np.zeros(n), nl_zero)).max() <= 1e-14

    dw_pot = PotentialPair(double_well(1.7), double_well(0.25))
    nl_dw = lambda u: quad.nonlinear_load(dw_pot, u)
    assert np.abs(compute_initial_w(M, A, np.ones(n), nl_dw)).max() <= 1e-12


def test_compute_initial_w_matches_dense_oracle(disk19):
    M = assemble_mass(disk19)
    A = assemble_stiffness(disk19)
    quad = MeshQuadrature(disk19)
    pot = PotentialPair(double_well(0.25), double_well(0.25))
    nl = lambda u: quad.nonlinear_load(pot, u)
    rng = np.random.default_rng(11)
    u0 = rng.standard_normal(disk19.n_nodes)
    w = compute_initial_w(M, A, u0, nl)
    expected = dense_solve(M, A @ u0 + nl(u0))
    assert np.linalg.norm(w - expected) / np.linalg.norm(expected) <= 1e-10


def test_compute_theta_definition_chase(disk19):
    M = assemble_mass(disk19)
    A = assemble_stiffness(disk19)
    quad = MeshQuadrature(disk19)
    pot = PotentialPair(double_well(0.25), double_well(0.25))
    nl = lambda u: quad.nonlinear_load(pot, u)
    exact = manufactured_solution_xy()
    star = factorize(A + M)
    u0 = ritz_map(disk19, exact.u, 0.0, system=star, quad=quad)
    w0 = ritz_map(disk19, exact.w, 0.0, system=star, quad=quad)
    f_w = quad.forcing_load(exact.forcing_w_bulk, exact.forcing_w_surf, 0.0)

    theta = compute_theta(M, A, u0, w0, nl, f_w=f_w)
    w_back = compute_initial_w(M, A, u0, nl, theta=theta, f_w=f_w)
    assert np.abs(w_back - w0).max() <= 1e-9

    # a w0 that already satisfies the elliptic equation gives theta = 0
    w_bar = compute_initial_w(M, A, u0, nl, f_w=f_w)
    theta0 = compute_theta(M, A, u0, w_bar, nl, f_w=f_w)
    assert np.abs(theta0).max() <= 1e-12


def test_theta_norm_decays(refinement_chain):
    exact = manufactured_solution_xy()
    pot = PotentialPair(double_well(0.25), double_well(0.25))
    hs, norms = [], []
    for mesh in refinement_chain:
        M = assemble_mass(mesh)
        A = assemble_stiffness(mesh)
        quad = MeshQuadrature(mesh)
        star = factorize(A + M)
        nl = lambda u: quad.nonlinear_load(pot, u)
        u0 = ritz_map(mesh, exact.u, 0.0, system=star, quad=quad)
        w0 = ritz_map(mesh, exact.w, 0.0, system=star, quad=quad)
        f_w = quad.forcing_load(exact.forcing_w_bulk, exact.forcing_w_surf, 0.0)
        theta = compute_theta(M, A, u0, w0, nl, f_w=f_w)
        norms.append(float(np.sqrt(theta @ (M @ theta))))
        hs.append(mesh_width(mesh))
    assert min(eoc(norms, hs)) >= 1.7


def _zero_history(n, q, tau):
    states = [FieldState(np.zeros(n), np.zeros(n), j * tau) for j in range(q)]
    return History(states, tau)


def test_step_zero_stays_zero(disk19):
    M = assemble_mass(disk19)
    A = assemble_stiffness(disk19)
    quad = MeshQuadrature(disk19)
    nl = lambda u: quad.nonlinear_load(ZERO_POT, u)
    scheme = bdf_coefficients(2)
    state = step(_zero_history(disk19.n_nodes, 2, 0.1), scheme, M, A, nl, 0.1)
    assert np.abs(state.u).max() == 0.0
    assert np.abs(state.w).max() == 0.0
    assert state.t == pytest.approx(0.2)


def test_step_linear_homogeneity(disk19):
    M = assemble_mass(disk19)
    A = assemble_stiffness(disk19)
    quad = MeshQuadrature(disk19)
    nl = lambda u: quad.nonlinear_load(ZERO_POT, u)
    scheme = bdf_coefficients(2)
    rng = np.random.default_rng(12)
    tau = 0.05
    states = [
        FieldState(rng.standard_normal(disk19.n_nodes), rng.standard_normal(disk19.n_nodes), j * tau)
        for j in range(2)
    ]
    doubled = [FieldState(2 * s.u, 2 * s.w, s.t) for s in states]
    out1 = step(History(states, tau), scheme, M, A, nl, tau)
    out2 = step(History(doubled, tau), scheme, M, A, nl, tau)
    assert np.allclose(out2.u, 2 * out1.u, rtol=1e-12, atol=1e-13)
    assert np.allclose(out2.w, 2 * out1.w, rtol=1e-12, atol=1e-13)


def test_step_matches_dense_oracle_with_forcing(disk19):
    M = assemble_mass(disk19)
    A = assemble_stiffness(disk19)
    quad = MeshQuadrature(disk19)
    pot = PotentialPair(double_well(0.25), double_well(0.25))
    nl = lambda u: quad.nonlinear_load(pot, u)
    exact = manufactured_solution_xy()
    tau = 0.05

    def forcing(t):
        return (
            quad.forcing_load(exact.forcing_u_bulk, exact.forcing_u_surf, t),
            quad.forcing_load(exact.forcing_w_bulk, exact.forcing_w_surf, t),
        )

    u0 = interpolate(disk19, exact.u, 0.0)
    w0 = compute_initial_w(M, A, u0, nl, f_w=forcing(0.0)[1])
    scheme = bdf_coefficients(1)
    state = step(History([FieldState(u0, w0, 0.0)], tau), scheme, M, A, nl, tau, forcing=forcing)
    u_exp, w_exp = monolithic_step_dense(
        M, A, scheme.delta, scheme.gamma, tau, [u0], nl, forcing=forcing, t_new=tau
    )
    assert np.linalg.norm(state.u - u_exp) / np.linalg.norm(u_exp) <= 1e-9
    assert np.linalg.norm(state.w - w_exp) / np.linalg.norm(w_exp) <= 1e-9


def test_step_rejects_history_mismatch(disk19):
    M = assemble_mass(disk19)
    A = assemble_stiffness(disk19)
    quad = MeshQuadrature(disk19)
    nl = lambda u: quad.nonlinear_load(ZERO_POT, u)
    with pytest.raises(ValueError, match="history"):
        step(_zero_history(disk19.n_nodes, 1, 0.1), bdf_coefficients(2), M, A, nl, 0.1)
    with pytest.raises(ValueError, match="spacing"):
        step(_zero_history(disk19.n_nodes, 2, 0.1), bdf_coefficients(2), M, A, nl, 0.2)


def test_step_deterministic(disk19):
    M = assemble_mass(disk19)
    A = assemble_stiffness(disk19)
    quad = MeshQuadrature(disk19)
    pot = PotentialPair(double_well(0.25), double_well(0.25))
    nl = lambda u: quad.nonlinear_load(pot, u)
    rng = np.random.default_rng(13)
    tau = 0.02
    states = [FieldState(rng.standard_normal(disk19.n_nodes), np.zeros(disk19.n_nodes), j * tau) for j in range(2)]
    s1 = step(History(states, tau), bdf_coefficients(2), M, A, nl, tau)
    s2 = step(History(states, tau), bdf_coefficients(2), M, A, nl, tau)
    assert np.array_equal(s1.u, s2.u)
    assert np.array_equal(s1.w, s2.w)


def test_weak_form_residuals_after_step(disk19):
    # substituting the computed state back into both equations must leave
    # only the solver residual (catches block sign/placement errors)
    M = assemble_mass(disk19)
    A = assemble_stiffness(disk19)
    quad = MeshQuadrature(disk19)
    pot = PotentialPair(double_well(0.25), double_well(0.25))
    nl = lambda u: quad.nonlinear_load(pot, u)
    exact = manufactured_solution_xy()
    tau = 0.01

    def forcing(t):
        return (
            quad.forcing_load(exact.forcing_u_bulk, exact.forcing_u_surf, t),
            quad.forcing_load(exact.forcing_w_bulk, exact.forcing_w_surf, t),
        )

    u0 = interpolate(disk19, exact.u, 0.0)
    w0 = compute_initial_w(M, A, u0, nl, f_w=forcing(0.0)[1])
    scheme = bdf_coefficients(1)
    new = step(History([FieldState(u0, w0, 0.0)], tau), scheme, M, A, nl, tau, forcing=forcing)

    f_u, f_w = forcing(tau)
    scale = np.linalg.norm(f_u) + np.linalg.norm(f_w) + 1.0
    r_u = M @ (scheme.delta[0] * new.u + scheme.delta[1] * u0) / tau + A @ new.w - f_u
    r_w = M @ new.w - A @ new.u - nl(u0) - f_w
    assert np.linalg.norm(r_u) <= 1e-9 * scale
    assert np.linalg.norm(r_w) <= 1e-9 * scale


def test_bdf1_zero_potential_mass_norm_decays(disk19):
    M = assemble_mass(disk19)
    A = assemble_stiffness(disk19)
    quad = MeshQuadrature(disk19)
    stepper = BdfStepper(disk19, M, A, bdf_coefficients(1), ZERO_POT, 0.05)
    rng = np.random.default_rng(14)
    u = rng.standard_normal(disk19.n_nodes)
    w0 = compute_initial_w(M, A, u, stepper.nonlinear_load)
    history = History([FieldState(u, w0, 0.0)], 0.05)
    prev = float(u @ (M @ u))
    for _ in range(20):
        state = stepper.step(history)
        history.push(state)
        cur = float(state.u @ (M @ state.u))
        assert cur <= prev * (1 + 1e-12)
        prev = cur


def test_bootstrap_orders(disk19):
    M = assemble_mass(disk19)
    A = assemble_stiffness(disk19)
    quad = MeshQuadrature(disk19)
    pot = PotentialPair(double_well(0.25), double_well(0.25))
    exact = manufactured_solution_xy()
    tau = 0.05

    def forcing(t):
        return (
            quad.forcing_load(exact.forcing_u_bulk, exact.forcing_u_surf, t),
            quad.forcing_load(exact.forcing_w_bulk, exact.forcing_w_surf, t),
        )

    u0 = interpolate(disk19, exact.u, 0.0)

    h1 = bootstrap(u0, bdf_coefficients(1), disk19, M, A, pot, tau, forcing=forcing, quad=quad)
    assert len(h1) == 1
    assert h1.newest.t == 0.0

    # q = 2: exactly one linearly implicit backward Euler step
    h2 = bootstrap(u0, bdf_coefficients(2), disk19, M, A, pot, tau, forcing=forcing, quad=quad)
    assert len(h2) == 2
    nl = lambda u: quad.nonlinear_load(pot, u)
    w0 = compute_initial_w(M, A, u0, nl, f_w=forcing(0.0)[1])
    euler = step(History([FieldState(u0, w0, 0.0)], tau), bdf_coefficients(1), M, A, nl, tau, forcing=forcing)
    assert np.array_equal(h2.newest.u, euler.u)
    assert np.array_equal(h2.newest.w, euler.w)


def test_bootstrap_bdf3_startup_accuracy(disk19):
    # startup values carry at worst an O(tau^2) temporal error; measured
    # against a same-mesh tiny-step reference, which isolates the temporal
    # part (against the interpolant the spatial gap floors the comparison,
    # and interpolated initial data adds an unresolved stiff transient)
    from chdisk.diagnostics import eoc_fit

    M = assemble_mass(disk19)
    A = assemble_stiffness(disk19)
    quad = MeshQuadrature(disk19)
    pot = PotentialPair(double_well(0.25), double_well(0.25))
    exact = manufactured_solution_xy()

    def forcing(t):
        return (
            quad.forcing_load(exact.forcing_u_bulk, exact.forcing_u_surf, t),
            quad.forcing_load(exact.forcing_w_bulk, exact.forcing_w_surf, t),
        )

    star = factorize(A + M)
    u0 = ritz_map(disk19, exact.u, 0.0, system=star, quad=quad)
    w0 = ritz_map(disk19, exact.w, 0.0, system=star, quad=quad)
    nl = lambda u: quad.nonlinear_load(pot, u)
    theta = compute_theta(M, A, u0, w0, nl, f_w=forcing(0.0)[1])

    taus = (0.05, 0.025, 0.0125, 0.00625)
    errs = []
    for tau in taus:
        hist = bootstrap(
            u0, bdf_coefficients(3), disk19, M, A, pot, tau, theta=theta, forcing=forcing, quad=quad
        )
        m = 256
        fine = BdfStepper(
            disk19, M, A, bdf_coefficients(1), pot, tau / m, theta=theta, forcing=forcing, quad=quad
        )
        ref_hist = History([hist.states[0]], tau / m)
        refs = {}
        state = hist.states[0]
        for j in range(2 * m):
            state = fine.step(ref_hist)
            ref_hist.push(state)
            if (j + 1) % m == 0:
                refs[(j + 1) // m] = state
        worst = 0.0
        for i, s in enumerate(hist.states[1:], start=1):
            d = s.u - refs[i].u
            worst = max(worst, float(np.sqrt(d @ (M @ d))))
        errs.append(worst)
    assert eoc_fit(errs, list(taus), points=4) >= 1.8
    assert errs[-1] < errs[0] / 20


def test_integration_error_reports_step_index():
    from dataclasses import replace
    from chdisk.scenario import build_problem, spinodal_scenario
    from chdisk.timestepping import run_problem

    sc = replace(spinodal_scenario(seed=1234), final_time=0.125)
    problem = build_problem(sc)
    with pytest.raises(IntegrationError, match="step"):
        run_problem(problem)
