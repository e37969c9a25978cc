"""Experiments that audit stability, uniqueness and convergence of the scheme.

* :func:`run_pair` runs two solutions and measures the difference triple
  ``||mu1-mu2||_L2(Q) + ||rho1-rho2||_Linf(H) + ||xi1-xi2||_L1(Q)`` against
  ``||mu01-mu02||_H + ||rho01-rho02||_H``.
* :func:`continuous_dependence_study` repeats that over perturbation sizes.
* :func:`pointwise_estimate_check` audits the cellwise L1-type estimate for
  ``rho`` with a constant built from the stored Lipschitz data.
* :func:`self_convergence_study` halves ``tau`` and measures the observed order.
* :func:`invariant_audit` scans a trajectory for sign and range violations.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidParameterError, ShapeError, ValidationError
from .grid import norms
from .model import (CompatibilityConstants, ModelSpec, constant_coupling, constant_mobility,
                    linear_pi, make_obstacle, validate_model)
from .stepper import CosineProfile, RunConfig, Trajectory, driving_force, initial_values, run

LHS_FLOOR = 1e-9
RHS_FLOOR = 1e-14
SPREAD_LIMIT = 4.0
ORDER_WINDOW = (0.7, 1.3)


def worker_count(n_jobs: int) -> int:
    env = os.environ.get("PHASESEG_THREADS")
    if env:
        try:
            return max(1, min(int(env), n_jobs))
        except ValueError:
            pass
    return max(1, n_jobs)


def _run_all(configs: Sequence[RunConfig], threads: Optional[int] = None) -> list[Trajectory]:
    workers = threads if threads is not None else worker_count(len(configs))
    if workers <= 1 or len(configs) <= 1:
        return [run(c) for c in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, configs))


def _h_norm(values: np.ndarray, vol: float) -> float:
    return math.sqrt(vol * float(np.dot(values, values)))


# --- pairs -----------------------------------------------------------------

@dataclass(frozen=True)
class PairExperiment:
    base: RunConfig
    target: str = "rho0"
    amplitude: float = 1e-2
    mode: int = 1


@dataclass
class PairReport:
    lhs: float
    rhs: float
    ratio: Optional[float]
    verdict: str
    components: dict
    first: Trajectory = field(repr=False)
    second: Trajectory = field(repr=False)


def admissible_amplitude(config: RunConfig, target: str, eps: float) -> float:
    """Largest amplitude ``<= eps`` keeping the perturbed data admissible."""
    grid, k = config.grid, config.model.constants
    limit = math.inf
    if target in ("rho0", "both"):
        rho0 = initial_values(config.rho0, grid)
        limit = min(limit, float(np.min(np.minimum(rho0 - k.rho_min, k.rho_max - rho0))))
    if target in ("mu0", "both"):
        limit = min(limit, float(np.min(initial_values(config.mu0, grid))))
    if target not in ("rho0", "mu0", "both"):
        raise InvalidParameterError(f"unknown perturbation target {target!r}")
    return max(0.0, min(eps, limit))


def perturbed(config: RunConfig, target: str, eps: float, mode: int = 1) -> RunConfig:
    """Copy of ``config`` with ``eps * cos(mode pi x / L)`` added to the target data."""
    amp = admissible_amplitude(config, target, eps)
    bump = CosineProfile(0.0, amp, mode).evaluate(config.grid)
    out = config
    if target in ("rho0", "both"):
        out = replace(out, rho0=initial_values(config.rho0, config.grid) + bump)
    if target in ("mu0", "both"):
        out = replace(out, mu0=initial_values(config.mu0, config.grid) + bump)
    return out


def difference_norms(first: Trajectory, second: Trajectory) -> dict:
    """Norm triple of the difference of two trajectories sampled every step."""
    c1, c2 = first.config, second.config
    if c1.grid != c2.grid or c1.tau != c2.tau or len(first.states) != len(second.states):
        raise ShapeError("trajectories do not share grid, time step and length")
    vol, tau = c1.grid.cell_volume, c1.tau * c1.output_every
    dmu = first.stack("mu") - second.stack("mu")
    drho = first.stack("rho") - second.stack("rho")
    dxi = first.stack("xi") - second.stack("xi")
    mu_l2 = norms(list(dmu[1:]), tau, vol).l2_Q
    rho_linf = norms(list(drho), tau, vol).linf_H
    xi_l1 = norms(list(dxi[1:]), tau, vol).l1_Q
    return {"mu_l2_Q": mu_l2, "rho_linf_H": rho_linf, "xi_l1_Q": xi_l1,
            "total": mu_l2 + rho_linf + xi_l1}


def compare_pair(first: Trajectory, second: Trajectory) -> PairReport:
    grid = first.config.grid
    vol = grid.cell_volume
    s1, s2 = first.states[0], second.states[0]
    mu0_h = _h_norm(s1.mu.values - s2.mu.values, vol)
    rho0_h = _h_norm(s1.rho.values - s2.rho.values, vol)
    rhs = mu0_h + rho0_h
    comps = difference_norms(first, second)
    lhs = comps["total"]
    comps.update(mu0_H=mu0_h, rho0_H=rho0_h)
    scale = max(1.0, _h_norm(s1.mu.values, vol) + _h_norm(s1.rho.values, vol))
    if rhs <= RHS_FLOOR * scale:
        verdict = "identical-data" if lhs <= LHS_FLOOR else "uniqueness-violation"
        ratio = None
    else:
        verdict = "ratio"
        ratio = lhs / rhs
    return PairReport(lhs, rhs, ratio, verdict, comps, first, second)


def run_pair(first: RunConfig | PairExperiment, second: Optional[RunConfig] = None,
             threads: Optional[int] = None) -> PairReport:
    """Run two configurations (or a base/perturbed experiment) and compare them."""
    if isinstance(first, PairExperiment):
        exp = first
        first, second = exp.base, perturbed(exp.base, exp.target, exp.amplitude, exp.mode)
    if second is None:
        raise InvalidParameterError("run_pair needs two configurations")
    if first.grid != second.grid or first.tau != second.tau or first.t_final != second.t_final:
        raise ShapeError("pair must share grid, tau and final time")
    first = replace(first, output_every=1)
    second = replace(second, output_every=1)
    t1, t2 = _run_all([first, second], threads)
    return compare_pair(t1, t2)


# --- continuous dependence -------------------------------------------------

@dataclass(frozen=True)
class StudyRow:
    eps: float
    amplitude: float
    lhs: float
    rhs: float
    ratio: float


@dataclass
class StudyReport:
    rows: list[StudyRow]
    spread: float
    growth_trend: bool
    verdict: str

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r.ratio for r in self.rows])


def has_growth_trend(ratios: Sequence[float]) -> bool:
    """True when ratios grow at every refinement of eps without settling down.

    A bounded sequence converging to the linearized constant also increases
    monotonically, but its increments shrink; growth is flagged only when the
    last increment is at least half the first one.
    """
    r = np.asarray(ratios, dtype=float)
    if r.size < 3:
        return False
    inc = np.diff(r)
    rising = inc > 1e-9 * np.abs(r[1:])
    return bool(np.all(rising) and inc[-1] >= 0.5 * inc[0])


def continuous_dependence_study(base: RunConfig, eps_list: Sequence[float],
                                target: str = "rho0", mode: int = 1,
                                threads: Optional[int] = None,
                                spread_limit: float = SPREAD_LIMIT) -> StudyReport:
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(e <= 0 for e in eps_list):
        raise InvalidParameterError("eps list must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InvalidParameterError("eps list must be strictly decreasing")
    report = validate_model(base.model)
    if not report.passed:
        names = ", ".join(c.name for c in report.failures())
        raise ValidationError(f"model rejected: {names}", condition=names)
    base = replace(base, output_every=1)
    perturbed_cfgs = [perturbed(base, target, e, mode) for e in eps_list]
    trajs = _run_all([base] + perturbed_cfgs, threads)
    rows = []
    for eps, cfg, traj in zip(eps_list, perturbed_cfgs, trajs[1:]):
        pair = compare_pair(trajs[0], traj)
        ratio = pair.ratio if pair.ratio is not None else math.nan
        rows.append(StudyRow(eps, admissible_amplitude(base, target, eps),
                             pair.lhs, pair.rhs, ratio))
    ratios = np.array([r.ratio for r in rows])
    finite = bool(np.all(np.isfinite(ratios)) and np.all(ratios > 0))
    spread = float(ratios.max() / ratios.min()) if finite else math.inf
    growth = has_growth_trend(ratios) if finite else True
    verdict = "PASS" if finite and spread <= spread_limit and not growth else "FAIL"
    return StudyReport(rows, spread, growth, verdict)


# --- pointwise estimate ----------------------------------------------------

@dataclass
class PointwiseReport:
    worst_ratio: float
    c_struct: float
    rows: list[tuple]  # (time, worst_cell, L, R, ratio)
    contraction_margin: float
    increment_margin: float
    L: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    verdict: str = "PASS"


def structural_constant(model: ModelSpec, mu_sup: float, samples: int = 2001) -> float:
    """``3 max(1, sup|g'|, L_g' sup mu1 + L_pi)`` over ``[rho_min, rho_max]``."""
    k = model.constants
    r = np.linspace(k.rho_min, k.rho_max, samples)
    g_sup = float(np.max(np.abs(model.coupling.g_prime(r))))
    lip = model.coupling.g_prime_lipschitz * mu_sup + model.potential.pi_lipschitz
    return 3.0 * max(1.0, g_sup, lip)


def pointwise_estimate_check(first: Trajectory, second: Trajectory,
                             floor: float = 1e-14, slack: float = 1e-6) -> PointwiseReport:
    """Cellwise audit of the L1-type estimate for ``rho``.

    With ``d = rho1 - rho2`` and steps ``k = 1..n``::

        L_n = |d_n| + sum_k (|d_k - d_{k-1}| + tau |xi1 - xi2|_k)
        R_n = |d_0| + sum_{k<n} tau (|mu1 - mu2|_k + (1 + mu1_k) |d_k|)

    The right sum uses left endpoints because ``mu`` and ``rho`` enter the
    ``rho``-update explicitly.  Also checks, at every step, the discrete
    contraction ``|d_{n+1}| + tau|xi-diff_{n+1}| <= |d_n| + tau|w-diff_n|``.
    """
    c1, c2 = first.config, second.config
    if c1.grid != c2.grid or c1.tau != c2.tau or len(first.states) != len(second.states):
        raise ShapeError("trajectories do not share grid, time step and length")
    if len(first.states) != c1.n_steps + 1:
        raise ShapeError("pointwise check needs every time step (output_every = 1)")
    model, tau = c1.model, c1.tau
    mu1, mu2 = first.stack("mu"), second.stack("mu")
    rho1, rho2 = first.stack("rho"), second.stack("rho")
    xi1, xi2 = first.stack("xi"), second.stack("xi")
    d = rho1 - rho2
    dmu = np.abs(mu1 - mu2)
    dxi = np.abs(xi1 - xi2)
    ad = np.abs(d)

    L = ad.copy()
    R = np.empty_like(ad)
    R[0] = ad[0]
    if len(d) > 1:
        incr = np.abs(np.diff(d, axis=0)) + tau * dxi[1:]
        L[1:] += np.cumsum(incr, axis=0)
        src = tau * (dmu[:-1] + (1.0 + mu1[:-1]) * ad[:-1])
        R[1:] = ad[0] + np.cumsum(src, axis=0)

    c_struct = structural_constant(model, float(mu1.max()))
    rows = []
    worst = 0.0
    for n in range(len(d)):
        mask = R[n] > floor
        if not mask.any():
            rows.append((first.states[n].time, -1, float(L[n].max()), float(R[n].max()), 0.0))
            if L[n].max() > floor:
                worst = math.inf
            continue
        ratio = np.where(mask, L[n] / np.where(mask, R[n], 1.0), 0.0)
        i = int(np.argmax(ratio))
        rows.append((first.states[n].time, i, float(L[n, i]), float(R[n, i]), float(ratio[i])))
        worst = max(worst, float(ratio[i]))

    # one-step discrete contraction and increment bound
    prox_tol = c1.solver.prox_rtol
    if len(d) > 1:
        w1 = np.stack([driving_force(model, m, r) for m, r in zip(mu1[:-1], rho1[:-1])])
        w2 = np.stack([driving_force(model, m, r) for m, r in zip(mu2[:-1], rho2[:-1])])
        dw = np.abs(w1 - w2)
        scale = 1.0 + np.abs(rho1[:-1]) + tau * np.abs(w1)
        tol = 4.0 * prox_tol * scale
        contraction = (ad[:-1] + tau * dw + tol) - (ad[1:] + tau * dxi[1:])
        increment = (tau * dw + tau * dxi[1:] + tol) - np.abs(np.diff(d, axis=0))
        c_margin = float(contraction.min())
        i_margin = float(increment.min())
    else:
        c_margin = i_margin = 0.0
    ok = worst <= c_struct * (1.0 + slack) and c_margin >= 0 and i_margin >= 0
    return PointwiseReport(worst, c_struct, rows, c_margin, i_margin, L, R,
                           "PASS" if ok else "FAIL")


# --- self-convergence ------------------------------------------------------

@dataclass
class ConvergenceReport:
    rows: list[tuple]  # (level, tau, distance, observed_order)
    observed_order: float
    verdict: str


def self_convergence_study(base: RunConfig, levels: int = 4,
                           threads: Optional[int] = None) -> ConvergenceReport:
    """Runs at ``tau, tau/2, ...``; distance ``k`` compares levels ``k`` and ``k+1``
    at the coarse output times in the difference-norm triple."""
    if levels < 3:
        raise InvalidParameterError("levels must be >= 3")
    configs = [replace(base, tau=base.tau / 2**k, output_every=1) for k in range(levels)]
    trajs = _run_all(configs, threads)
    distances = []
    for k in range(levels - 1):
        coarse, fine = trajs[k], trajs[k + 1]
        sub = Trajectory(coarse.config, fine.states[::2], [])
        distances.append(difference_norms(coarse, sub)["total"])
    orders = [math.nan]
    for k in range(1, len(distances)):
        a, b = distances[k - 1], distances[k]
        orders.append(math.log2(a / b) if a > 0 and b > 0 else math.nan)
    rows = [(k, configs[k].tau, distances[k] if k < len(distances) else math.nan,
             orders[k] if k < len(orders) else math.nan) for k in range(levels)]
    if max(distances) <= 1e-14:
        return ConvergenceReport(rows, math.nan, "degenerate-exact")
    p = orders[-1]
    lo, hi = ORDER_WINDOW
    verdict = "PASS" if math.isfinite(p) and lo <= p <= hi else "FAIL"
    return ConvergenceReport(rows, p, verdict)


# --- invariants ------------------------------------------------------------

@dataclass
class AuditReport:
    min_mu: float
    rho_domain_ok: bool
    rho_bound_margin: float
    xi_bound_margin: float
    failures: list[str]

    @property
    def verdict(self) -> str:
        return "PASS" if not self.failures else "FAIL"


def invariant_audit(trajectory: Trajectory, model: Optional[ModelSpec] = None,
                    mu_slack: float = 1e-10) -> AuditReport:
    """Hard checks: ``mu >= -slack*scale`` and ``rho`` in the closure of ``D(beta)``
    (strict interior for the logarithmic potential).  Soft monitors: margins
    of ``rho`` in ``[rho_min, rho_max]`` and ``xi`` in ``[xi_min, xi_max]``."""
    model = model or trajectory.config.model
    k = model.constants
    failures = []
    states = trajectory.states
    scale = max(1.0, float(np.abs(states[0].mu.values).max()))
    min_mu = math.inf
    rho_ok = True
    rho_margin = xi_margin = math.inf
    for s in states:
        mu, rho, xi = s.mu.values, s.rho.values, s.xi.values
        i = int(np.argmin(mu))
        min_mu = min(min_mu, float(mu[i]))
        if mu[i] < -mu_slack * scale:
            failures.append(f"mu < 0 at cell {i}, time {s.time:g}: {mu[i]:.3e}")
        inside = model.potential.in_domain(rho)
        if not inside.all():
            j = int(np.nonzero(~inside)[0][0])
            rho_ok = False
            failures.append(f"rho outside D(beta) at cell {j}, time {s.time:g}: {rho[j]!r}")
        rho_margin = min(rho_margin, float(np.min(np.minimum(rho - k.rho_min, k.rho_max - rho))))
        xi_margin = min(xi_margin, float(np.min(np.minimum(xi - k.xi_min, k.xi_max - xi))))
    return AuditReport(min_mu, rho_ok, rho_margin, xi_margin, failures)


# --- reference models -------------------------------------------------------

def linear_control_model() -> ModelSpec:
    """Decoupled linear model: constant coupling and mobility, inactive obstacle.

    ``mu`` solves the heat equation and ``rho`` the linear ODE
    ``d_t rho = -rho`` while it stays inside ``(-1, 1)``.
    """
    return ModelSpec(
        potential=make_obstacle(-1.0, 1.0, linear_pi(1.0), 1.0),
        coupling=constant_coupling(1.0, (-1.0, 1.0)),
        mobility=constant_mobility(1.0),
        constants=CompatibilityConstants(-1.0, 1.0, 0.0, 0.0),
    )
