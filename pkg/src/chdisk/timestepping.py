"""Linearly implicit multistep time integration of the coupled system.

Each step treats the linear saddle-point structure implicitly and the
potential derivative by polynomial extrapolation from past values, so
advancing in time costs one sparse solve with a matrix that is constant for
a fixed step size and factorised once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import bmat, csr_matrix

from .assembly import FieldVector, MeshQuadrature
from .mesh import Mesh2D
from .potentials import PotentialPair
from .solvers import Factor, SolverError, factorize

MAX_ORDER = 6  # zero-stability bound for this family
_STARTUP_SUBSTEP_CAP = 4000


class IntegrationError(RuntimeError):
    """Time integration aborted (solver failure or non-finite values)."""


@dataclass(frozen=True)
class BdfScheme:
    """Order q backward-difference coefficients and extrapolation weights.

    ``delta`` holds the q+1 coefficients of the discretised time derivative
    (newest first), generated by sum_{l=1}^{q} (1 - z)^l / l; ``gamma`` holds
    the q extrapolation weights generated by (1 - (1 - z)^q) / z.
    """

    q: int
    delta: np.ndarray
    gamma: np.ndarray


def bdf_coefficients(q: int) -> BdfScheme:
    """Coefficients of the order-q scheme; valid for q = 1..6."""
    if not 1 <= q <= MAX_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ORDER}, got {q}")
    delta = [Fraction(0)] * (q + 1)
    for ell in range(1, q + 1):
        for j in range(ell + 1):
            delta[j] += Fraction((-1) ** j * comb(ell, j), ell)
    gamma = [Fraction((-1) ** j * comb(q, j + 1)) for j in range(q)]
    return BdfScheme(
        q=q,
        delta=np.array([float(d) for d in delta]),
        gamma=np.array([float(g) for g in gamma]),
    )


@dataclass(frozen=True)
class FieldState:
    """Nodal coefficients of both variables at one time level."""

    u: FieldVector
    w: FieldVector
    t: float


class History:
    """The last q states, oldest first, at uniform spacing tau."""

    def __init__(self, states: Sequence[FieldState], tau: float):
        states = list(states)
        if not states:
            raise ValueError("history must hold at least one state")
        times = np.array([s.t for s in states])
        if len(states) > 1:
            gaps = np.diff(times)
            if (gaps <= 0).any() or np.abs(gaps - tau).max() > 1e-9 * max(tau, 1.0):
                raise ValueError(f"history times {times} are not uniformly spaced by {tau}")
        self.states = states
        self.tau = float(tau)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def newest(self) -> FieldState:
        return self.states[-1]

    def push(self, state: FieldState) -> None:
        """Append the new state and drop the oldest, keeping the length fixed."""
        if abs(state.t - self.newest.t - self.tau) > 1e-9 * max(self.tau, 1.0):
            raise ValueError(f"state at t={state.t} does not extend the history by tau={self.tau}")
        self.states = self.states[1:] + [state]

    def u_values(self) -> list[FieldVector]:
        return [s.u for s in self.states]


def compute_initial_w(
    M: csr_matrix,
    A: csr_matrix,
    u0: FieldVector,
    nl: Callable[[FieldVector], FieldVector],
    theta: FieldVector | None = None,
    f_w: FieldVector | None = None,
    factor: Factor | None = None,
) -> FieldVector:
    """Initial auxiliary variable from the elliptic second equation.

    Solves M w0 = A u0 + nl(u0) [+ M theta] [+ f_w] to residual 1e-10.
    """
    rhs = A @ u0 + nl(u0)
    if theta is not None:
        rhs = rhs + M @ theta
    if f_w is not None:
        rhs = rhs + f_w
    factor = factor or factorize(M)
    return factor.solve(rhs)


def compute_theta(
    M: csr_matrix,
    A: csr_matrix,
    u0_ritz: FieldVector,
    w0_ritz: FieldVector,
    nl: Callable[[FieldVector], FieldVector],
    f_w: FieldVector | None = None,
    factor: Factor | None = None,
) -> FieldVector:
    """Time-independent source aligning the initial w with its elliptic projection.

    Returns w0_ritz - w_bar where M w_bar = A u0_ritz + nl(u0_ritz) [+ f_w];
    afterwards compute_initial_w with this correction reproduces w0_ritz.
    """
    w_bar = compute_initial_w(M, A, u0_ritz, nl, theta=None, f_w=f_w, factor=factor)
    return w0_ritz - w_bar


def _monolithic_matrix(M: csr_matrix, A: csr_matrix, delta0: float, tau: float):
    return bmat([[(delta0 / tau) * M, A], [-A, M]], format="csc")


def _step_rhs(history, scheme, M, tau, nl, theta, forcing):
    us = history.u_values()
    q = scheme.q
    t_new = history.newest.t + tau
    u_tilde = sum(scheme.gamma[j] * us[q - 1 - j] for j in range(q))
    past = sum(scheme.delta[j] * us[q - j] for j in range(1, q + 1))
    r_u = -(M @ past) / tau
    r_w = nl(u_tilde)
    if theta is not None:
        r_w = r_w + M @ theta
    if forcing is not None:
        f_u, f_w = forcing(t_new)
        if f_u is not None:
            r_u = r_u + f_u
        if f_w is not None:
            r_w = r_w + f_w
    return t_new, np.concatenate([r_u, r_w])


def step(
    history: History,
    scheme: BdfScheme,
    M: csr_matrix,
    A: csr_matrix,
    nl: Callable[[FieldVector], FieldVector],
    tau: float,
    theta: FieldVector | None = None,
    forcing: Callable[[float], tuple] | None = None,
) -> FieldState:
    """One linearly implicit step via the monolithic 2N x 2N solve.

    ``nl`` maps nodal coefficients to the potential-derivative load vector
    (build it from the mesh and potentials with
    ``assembly.MeshQuadrature(mesh).nonlinear_load``).  This convenience
    function factorises the step matrix per call; use :class:`BdfStepper`
    inside time loops.
    """
    if len(history) != scheme.q:
        raise ValueError(f"history holds {len(history)} states, scheme needs {scheme.q}")
    if abs(history.tau - tau) > 1e-9 * max(tau, 1.0):
        raise ValueError(f"history spacing {history.tau} does not match tau {tau}")
    n = M.shape[0]
    t_new, rhs = _step_rhs(history, scheme, M, tau, nl, theta, forcing)
    sol = factorize(_monolithic_matrix(M, A, scheme.delta[0], tau)).solve(rhs)
    return FieldState(u=sol[:n], w=sol[n:], t=t_new)


class BdfStepper:
    """Reusable stepper: the monolithic matrix is factorised once per (scheme, tau)."""

    def __init__(
        self,
        mesh: Mesh2D,
        M: csr_matrix,
        A: csr_matrix,
        scheme: BdfScheme,
        potentials: PotentialPair,
        tau: float,
        theta: FieldVector | None = None,
        forcing: Callable[[float], tuple] | None = None,
        quad: MeshQuadrature | None = None,
    ):
        self.mesh = mesh
        self.M = M
        self.A = A
        self.scheme = scheme
        self.tau = float(tau)
        self.theta = theta
        self.forcing = forcing
        self.quad = quad or MeshQuadrature(mesh)
        self.potentials = potentials
        self._factor = factorize(_monolithic_matrix(M, A, scheme.delta[0], tau))

    def nonlinear_load(self, u: FieldVector) -> FieldVector:
        return self.quad.nonlinear_load(self.potentials, u)

    def step(self, history: History) -> FieldState:
        if len(history) != self.scheme.q:
            raise ValueError(f"history holds {len(history)} states, scheme needs {self.scheme.q}")
        n = self.M.shape[0]
        t_new, rhs = _step_rhs(
            history, self.scheme, self.M, self.tau, self.nonlinear_load, self.theta, self.forcing
        )
        sol = self._factor.solve(rhs)
        return FieldState(u=sol[:n], w=sol[n:], t=t_new)


def bootstrap(
    u0: FieldVector,
    scheme: BdfScheme,
    mesh: Mesh2D,
    M: csr_matrix,
    A: csr_matrix,
    potentials: PotentialPair,
    tau: float,
    theta: FieldVector | None = None,
    forcing: Callable[[float], tuple] | None = None,
    quad: MeshQuadrature | None = None,
    t0: float = 0.0,
    mass_factor: Factor | None = None,
) -> History:
    """Starting values for an order-q run by an order cascade.

    The first value is produced by the one-step scheme with
    ceil(tau**(2-q)) substeps (so its error matches the target order for
    q <= 3; substeps are capped at 4000), then each following stage takes a
    single full-length step of the next-higher order.  For q = 2 this is
    exactly one linearly implicit backward Euler step.  The initial w comes
    from the elliptic second equation at t0.
    """
    quad = quad or MeshQuadrature(mesh)
    nl = lambda u: quad.nonlinear_load(potentials, u)
    f_w0 = None
    if forcing is not None:
        _, f_w0 = forcing(t0)
    w0 = compute_initial_w(M, A, u0, nl, theta=theta, f_w=f_w0, factor=mass_factor)
    states = [FieldState(u=np.asarray(u0, dtype=float), w=w0, t=t0)]
    if scheme.q == 1:
        return History(states, tau)

    substeps = min(math.ceil(tau ** (2 - scheme.q)), _STARTUP_SUBSTEP_CAP)
    euler = bdf_coefficients(1)
    sub_stepper = BdfStepper(
        mesh, M, A, euler, potentials, tau / substeps, theta=theta, forcing=forcing, quad=quad
    )
    sub_history = History(states, tau / substeps)
    state = states[0]
    for _ in range(substeps):
        state = sub_stepper.step(sub_history)
        sub_history.push(state)
    states.append(state)

    for k in range(2, scheme.q):
        stepper_k = BdfStepper(
            mesh, M, A, bdf_coefficients(k), potentials, tau, theta=theta, forcing=forcing, quad=quad
        )
        states.append(stepper_k.step(History(states[-k:], tau)))
    return History(states, tau)


def integrate(scenario, sinks: Sequence[Callable[[int, FieldState], None]] = ()):
    """Run a scenario over [0, T], feeding every state to the diagnostic sinks.

    Returns the list of all states (the trajectory), index n at time n*tau.
    Aborts with :class:`IntegrationError` on solver failure or non-finite
    values, reporting the step index.
    """
    from .scenario import build_problem

    problem = build_problem(scenario)
    return run_problem(problem, sinks)


def run_problem(problem, sinks: Sequence[Callable[[int, FieldState], None]] = ()):
    """Drive a prepared problem (see scenario.build_problem); used by integrate."""
    scheme = problem.scheme
    n_steps = problem.n_steps
    if 0 < n_steps < scheme.q - 1:
        raise IntegrationError(
            f"{n_steps} steps cannot accommodate the {scheme.q - 1} starting values of order {scheme.q}"
        )

    quad = problem.quad
    nl = lambda u: quad.nonlinear_load(problem.potentials, u)
    if n_steps == 0:
        f_w0 = problem.forcing(0.0)[1] if problem.forcing is not None else None
        w0 = compute_initial_w(problem.M, problem.A, problem.u0, nl, theta=problem.theta, f_w=f_w0)
        state0 = FieldState(u=problem.u0, w=w0, t=0.0)
        for sink in sinks:
            sink(0, state0)
        return [state0]

    history = bootstrap(
        problem.u0,
        scheme,
        problem.mesh,
        problem.M,
        problem.A,
        problem.potentials,
        problem.tau,
        theta=problem.theta,
        forcing=problem.forcing,
        quad=quad,
    )
    trajectory = list(history.states)
    for index, state in enumerate(trajectory):
        _check_finite(state, index)
        for sink in sinks:
            sink(index, state)

    stepper = BdfStepper(
        problem.mesh,
        problem.M,
        problem.A,
        scheme,
        problem.potentials,
        problem.tau,
        theta=problem.theta,
        forcing=problem.forcing,
        quad=quad,
    )
    for index in range(len(trajectory), n_steps + 1):
        # overflow in a diverging nonlinearity surfaces as the explicit
        # IntegrationError below, not as numpy warnings (sinks may also see
        # huge-but-finite states on the way out)
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                state = stepper.step(history)
            except SolverError as exc:
                raise IntegrationError(f"solver failed at step {index}: {exc}") from exc
            _check_finite(state, index)
            history.push(state)
            trajectory.append(state)
            for sink in sinks:
                sink(index, state)
    return trajectory


def _check_finite(state: FieldState, index: int) -> None:
    if not (np.isfinite(state.u).all() and np.isfinite(state.w).all()):
        raise IntegrationError(f"non-finite values at step {index} (t={state.t})")
