"""Semi-implicit time stepping for ``(mu, rho, xi)``.

One step is a splitting:

1. ``rho``: implicit in ``beta``, explicit in ``mu`` and ``pi``,
   ``rho+ = (I + tau beta)^-1 (rho + tau (mu g'(rho) - pi(rho)))`` cellwise.
2. ``mu``: implicit Euler for ``d_t u - mu g'(rho) d_t rho + A mu = 0`` in the
   variable ``u = (1 + 2 g(rho)) mu``, with the mobility lagged at ``mu^n``::

       [(1 + 2 g(rho+)) - g'(rho+)(rho+ - rho)] mu+ + tau A(mu^n) mu+ = u^n

   The left matrix is an M-matrix whenever the bracket is positive, so
   ``mu+ >= 0`` follows from ``u^n >= 0``.  Summing over cells reproduces the
   weak form tested with ``v = 1``; the diffusion term drops out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .errors import InvalidParameterError, PhaseSegError, StepSizeError, ValidationError
from .grid import Grid, ScalarField, assemble_diffusion
from .linsolve import SpdSystem, solve
from .model import ModelSpec
from .prox import DEFAULT_RTOL, resolve_array


@dataclass(frozen=True)
class CosineProfile:
    """``mean + amplitude * prod_k cos(mode * pi * x_k / L_k)``."""

    mean: float = 0.0
    amplitude: float = 0.0
    mode: int = 1

    def evaluate(self, grid: Grid) -> np.ndarray:
        out = np.ones(grid.size)
        for x, L in zip(grid.centers(), grid.lengths):
            out = out * np.cos(self.mode * math.pi * x / L)
        return self.mean + self.amplitude * out


InitialData = Union[CosineProfile, np.ndarray, float]


def initial_values(data: InitialData, grid: Grid) -> np.ndarray:
    if isinstance(data, CosineProfile):
        return data.evaluate(grid)
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.size, float(arr))
    arr = arr.ravel()
    if arr.size != grid.size:
        raise InvalidParameterError("initial data size does not match the grid")
    return arr.copy()


@dataclass(frozen=True)
class SolverConfig:
    method: str = "auto"
    tol: float = 1e-10
    max_iterations: int = 10_000
    prox_rtol: float = DEFAULT_RTOL


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    tau: float
    t_final: float
    model: ModelSpec
    mu0: InitialData = 0.0
    rho0: InitialData = 0.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    output_every: int = 1

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidParameterError("tau must be > 0")
        if not self.t_final >= 0:
            raise InvalidParameterError("t_final must be >= 0")
        if self.output_every < 1:
            raise InvalidParameterError("output_every must be >= 1")

    @property
    def n_steps(self) -> int:
        n = self.t_final / self.tau
        steps = int(round(n))
        if abs(n - steps) > 1e-9 * max(1.0, n):
            raise InvalidParameterError("t_final must be an integer multiple of tau")
        return steps


@dataclass(frozen=True)
class State:
    time: float
    mu: ScalarField
    rho: ScalarField
    xi: ScalarField
    u: ScalarField

    @property
    def grid(self) -> Grid:
        return self.mu.grid


@dataclass(frozen=True)
class StepReport:
    step: int
    time: float
    balance_residual: float
    u_norm: float
    min_mu: float
    rho_range: tuple[float, float]
    xi_range: tuple[float, float]
    cg_iterations: int
    prox_max_iterations: int
    diagonal_safeguard_margin: float


class RhoUpdate(NamedTuple):
    rho: ScalarField
    xi: ScalarField
    prox_iterations: int


class MuUpdate(NamedTuple):
    mu: ScalarField
    u: ScalarField
    iterations: int
    margin: float


def _u_of(model: ModelSpec, rho: np.ndarray, mu: np.ndarray) -> np.ndarray:
    return (1.0 + 2.0 * np.asarray(model.coupling.g(rho))) * mu


def check_initial_data(model: ModelSpec, mu0: np.ndarray, rho0: np.ndarray) -> None:
    """Raise :class:`ValidationError` naming the first offending cell."""
    k = model.constants
    checks = (
        ("mu0 finite", ~np.isfinite(mu0)),
        ("rho0 finite", ~np.isfinite(rho0)),
        ("mu0 >= 0", mu0 < 0),
        ("rho0 in D(beta)", ~model.potential.in_domain(rho0)),
        ("rho_min <= rho0", rho0 < k.rho_min),
        ("rho0 <= rho_max", rho0 > k.rho_max),
    )
    for name, bad in checks:
        idx = np.nonzero(bad)[0]
        if idx.size:
            i = int(idx[0])
            raise ValidationError(
                f"initial data violate '{name}' at cell {i} "
                f"(mu0={mu0[i]!r}, rho0={rho0[i]!r})", condition=name, index=i)


def initial_selection(model: ModelSpec, mu0: np.ndarray, rho0: np.ndarray) -> np.ndarray:
    """``xi0 in beta(rho0)``: ``beta(rho0)`` when single valued, otherwise the
    driving force ``mu0 g'(rho0) - pi(rho0)`` clamped into the normal cone."""
    pot = model.potential
    if pot.single_valued:
        return np.asarray(pot.beta(rho0), dtype=float)
    a, b = pot.beta_domain
    w = mu0 * np.asarray(model.coupling.g_prime(rho0)) - np.asarray(pot.pi(rho0))
    xi = np.zeros_like(rho0)
    xi = np.where(rho0 <= a, np.minimum(w, 0.0), xi)
    xi = np.where(rho0 >= b, np.maximum(w, 0.0), xi)
    return xi


def init_state(config: RunConfig) -> State:
    grid, model = config.grid, config.model
    mu0 = initial_values(config.mu0, grid)
    rho0 = initial_values(config.rho0, grid)
    check_initial_data(model, mu0, rho0)
    xi0 = initial_selection(model, mu0, rho0)
    u0 = _u_of(model, rho0, mu0)
    return State(0.0, ScalarField(grid, mu0), ScalarField(grid, rho0),
                 ScalarField(grid, xi0), ScalarField(grid, u0))


def driving_force(model: ModelSpec, mu: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``w = mu g'(rho) - pi(rho)``."""
    return mu * np.asarray(model.coupling.g_prime(rho)) - np.asarray(model.potential.pi(rho))


def step_rho(state: State, model: ModelSpec, tau: float,
             prox_rtol: float = DEFAULT_RTOL) -> RhoUpdate:
    rho = state.rho.values
    r = rho + tau * driving_force(model, state.mu.values, rho)
    x, xi, iterations, _ = resolve_array(model.potential, tau, r, prox_rtol)
    grid = state.grid
    return RhoUpdate(ScalarField(grid, x), ScalarField(grid, xi),
                     int(iterations.max()) if iterations.size else 0)


def mu_coefficient(model: ModelSpec, rho_old: np.ndarray, rho_new: np.ndarray) -> np.ndarray:
    g = np.asarray(model.coupling.g(rho_new))
    gp = np.asarray(model.coupling.g_prime(rho_new))
    return 1.0 + 2.0 * g - gp * (rho_new - rho_old)


def step_mu(state: State, rho_new: ScalarField, model: ModelSpec, tau: float,
            solver: SolverConfig = SolverConfig()) -> MuUpdate:
    coeff = mu_coefficient(model, state.rho.values, rho_new.values)
    margin = float(coeff.min())
    if not margin > 0:
        i = int(np.argmin(coeff))
        raise StepSizeError(
            f"mu-update coefficient not positive at cell {i} (margin {margin:.3e}); "
            "reduce tau", margin=margin, index=i)
    A = assemble_diffusion(state.grid, state.mu, model.mobility)
    system = SpdSystem(A, coeff, state.u.values.copy(), scale=tau,
                       tolerance=solver.tol, max_iterations=solver.max_iterations)
    sol = solve(system, solver.method)
    mu_new = sol.x
    u_new = _u_of(model, rho_new.values, mu_new)
    grid = state.grid
    return MuUpdate(ScalarField(grid, mu_new), ScalarField(grid, u_new), sol.iterations, margin)


def balance_residual(model: ModelSpec, old: State, new: State) -> float:
    """``|sum vol (u+ - u) - sum vol mu+ g'(rho+)(rho+ - rho)|``."""
    vol = old.grid.cell_volume
    drho = new.rho.values - old.rho.values
    source = new.mu.values * np.asarray(model.coupling.g_prime(new.rho.values)) * drho
    return abs(vol * float(np.sum(new.u.values - old.u.values)) - vol * float(np.sum(source)))


def step(state: State, model: ModelSpec, tau: float,
         solver: SolverConfig = SolverConfig(), index: int = 1) -> tuple[State, StepReport]:
    """Advance one step; ``index`` fixes the new time as ``index * tau``."""
    rho_up = step_rho(state, model, tau, solver.prox_rtol)
    mu_up = step_mu(state, rho_up.rho, model, tau, solver)
    new = State(index * tau, mu_up.mu, rho_up.rho, rho_up.xi, mu_up.u)
    vol = state.grid.cell_volume
    report = StepReport(
        step=index,
        time=new.time,
        balance_residual=balance_residual(model, state, new),
        u_norm=vol * float(np.abs(state.u.values).sum()),
        min_mu=float(new.mu.values.min()),
        rho_range=(float(new.rho.values.min()), float(new.rho.values.max())),
        xi_range=(float(new.xi.values.min()), float(new.xi.values.max())),
        cg_iterations=mu_up.iterations,
        prox_max_iterations=rho_up.prox_iterations,
        diagonal_safeguard_margin=mu_up.margin,
    )
    return new, report


@dataclass
class Trajectory:
    config: RunConfig
    states: list[State]
    reports: list[StepReport]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    def stack(self, name: str) -> np.ndarray:
        """Field history as an array of shape ``(len(states), cells)``."""
        return np.stack([getattr(s, name).values for s in self.states])


class RunError(PhaseSegError):
    """A run failed part-way; ``partial`` holds everything computed so far."""

    def __init__(self, message, partial: Trajectory, cause: Exception):
        super().__init__(message)
        self.partial = partial
        self.cause = cause


Observer = Callable[[State, Optional[StepReport]], None]


def run(config: RunConfig, observer: Observer | None = None) -> Trajectory:
    """Integrate to ``t_final``, keeping every ``output_every``-th state.

    ``observer(state, report)`` is called for the initial state (with
    ``report=None``) and after every step, so callers can stream output.
    """
    state = init_state(config)
    traj = Trajectory(config, [state], [])
    if observer is not None:
        observer(state, None)
    model, tau, solver = config.model, config.tau, config.solver
    n_steps = config.n_steps
    for n in range(1, n_steps + 1):
        try:
            state, report = step(state, model, tau, solver, index=n)
        except PhaseSegError as exc:
            raise RunError(f"step {n} failed: {exc}", traj, exc) from exc
        traj.reports.append(report)
        if n % config.output_every == 0 or n == n_steps:
            traj.states.append(state)
        if observer is not None:
            observer(state, report)
    return traj


def with_mobility(config: RunConfig, mobility) -> RunConfig:
    return replace(config, model=replace(config.model, mobility=mobility))
