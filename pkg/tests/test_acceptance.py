"""Acceptance criteria, one test each, at the stated tolerances and time limits.

Each test records a PASS/FAIL line that is printed immediately and again in
the terminal summary.
"""

import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE, double_well_resolvent_oracle, log_resolvent_oracle
from phaseseg.config import parse_config
from phaseseg.harness import (continuous_dependence_study, difference_norms, invariant_audit,
                              perturbed, pointwise_estimate_check,
                              run_pair, self_convergence_study)
from phaseseg.kirchhoff import KirchhoffTransform
from phaseseg.model import (constant_mobility, linear_pi, make_double_well, make_logarithmic,
                            make_obstacle, rational_mobility)
from phaseseg.prox import resolve_array
from phaseseg.stepper import SolverConfig, run, with_mobility

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def load(name):
    return parse_config((CONFIGS / name).read_text()).run


def record(name, ok, detail):
    verdict = "PASS" if ok else "FAIL"
    ACCEPTANCE.append((name, verdict, detail))
    print(f"{verdict} {name}: {detail}")
    assert ok, f"{name}: {detail}"


def obstacle_oracle(a, b, r):
    if r <= a:
        return a
    if r >= b:
        return b
    lo, hi = a, b
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid - r > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@pytest.fixture(scope="module")
def default_run():
    cfg = load("default.cfg")
    start = time.perf_counter()
    traj = run(cfg)
    return traj, time.perf_counter() - start


def test_c01_prox_oracle():
    rng = np.random.default_rng(1)
    cases = {
        "logarithmic": (make_logarithmic(2.0), log_resolvent_oracle),
        "double_well": (make_double_well(), double_well_resolvent_oracle),
        "obstacle": (make_obstacle(-1.0, 1.0, linear_pi(-1.0), 1.0),
                     lambda tau, r: obstacle_oracle(-1.0, 1.0, r)),
    }
    errors, elapsed = {}, 0.0
    for name, (pot, oracle) in cases.items():
        tau = 10.0 ** rng.uniform(-4, 1, 1000)
        r = rng.uniform(-10, 10, 1000)
        start = time.perf_counter()
        x, _, _, _ = resolve_array(pot, tau, r)
        elapsed += time.perf_counter() - start
        expected = np.array([oracle(t, v) for t, v in zip(tau, r)])
        errors[name] = float(np.abs(x - expected).max())
    worst = max(errors.values())
    record("1 prox oracle", worst <= 1e-10 and elapsed < 1.0,
           f"max |x - oracle| = {worst:.2e} over 3x1000 queries, {elapsed:.3f} s")


def test_c02_prox_nonexpansive():
    rng = np.random.default_rng(2)
    pots = [make_logarithmic(2.0), make_double_well(), make_obstacle(-1, 1, linear_pi(-1.0), 1.0)]
    worst = -math.inf
    start = time.perf_counter()
    for pot in pots:
        tau = 10.0 ** rng.uniform(-4, 1, 10_000)
        r1 = rng.uniform(-10, 10, 10_000)
        r2 = r1 + rng.normal(scale=10.0 ** rng.uniform(-12, 1, 10_000))
        x1 = resolve_array(pot, tau, r1)[0]
        x2 = resolve_array(pot, tau, r2)[0]
        worst = max(worst, float((np.abs(x1 - x2) - np.abs(r1 - r2)).max()))
    elapsed = time.perf_counter() - start
    record("2 prox nonexpansiveness", worst <= 2e-12 and elapsed < 1.0,
           f"max(|dx| - |dr|) = {worst:.2e} (limit 2e-12), 3x10000 pairs, {elapsed:.3f} s")


def test_c03_kirchhoff_bilipschitz():
    start = time.perf_counter()
    t = KirchhoffTransform(rational_mobility(1.0, 2.0))
    rep = t.check_bilipschitz(samples=142)
    k1 = t.K(1.0)
    elapsed = time.perf_counter() - start
    margin = min(rep.lower_margin, rep.upper_margin, rep.monotone_margin)
    err = abs(k1 - (1 + math.log(2)))
    ok = rep.pairs >= 10_000 and margin >= -1e-9 and rep.strictly_increasing and err <= 1e-9
    record("3 Kirchhoff bi-Lipschitz", ok and elapsed < 1.0,
           f"{rep.pairs} pairs, worst margin {margin:.2e}, |K(1) - (1+ln2)| = {err:.1e}, "
           f"{elapsed:.3f} s")


def test_c04_balance_identity(default_run):
    traj, elapsed = default_run
    rel = max(r.balance_residual / r.u_norm for r in traj.reports)
    record("4 discrete balance identity", rel <= 1e-8 and elapsed < 10.0,
           f"max residual/||u^n|| = {rel:.2e} over {len(traj.reports)} steps, {elapsed:.2f} s")


def test_c05_nonnegativity_confinement(default_run):
    traj, _ = default_run
    audit = invariant_audit(traj)
    min_mu = min(min(r.min_mu for r in traj.reports), audit.min_mu)
    rho_lo = min(r.rho_range[0] for r in traj.reports)
    rho_hi = max(r.rho_range[1] for r in traj.reports)
    k = traj.config.model.constants
    rho_margin = min(rho_lo - k.rho_min, k.rho_max - rho_hi)
    xi_margin = min(min(r.xi_range[0] for r in traj.reports) - k.xi_min,
                    k.xi_max - max(r.xi_range[1] for r in traj.reports))
    ok = (min_mu >= -1e-10 and -1 < rho_lo and rho_hi < 1 and rho_margin >= -1e-6
          and xi_margin >= -1e-6 and audit.verdict == "PASS")
    record("5 nonnegativity and confinement", ok,
           f"min mu = {min_mu:.4f}, rho in [{rho_lo:.4f}, {rho_hi:.4f}], "
           f"rho margin {rho_margin:.4f}, xi margin {xi_margin:.4f}")


def test_c06_continuous_dependence():
    base = load("default.cfg")
    start = time.perf_counter()
    study = continuous_dependence_study(base, [1e-1, 1e-2, 1e-3, 1e-4], "rho0")
    ctrl_cfg = parse_config((CONFIGS / "control.cfg").read_text())
    ctrl = continuous_dependence_study(ctrl_cfg.run, [1e-1, 1e-2, 1e-3, 1e-4],
                                       ctrl_cfg.study.target)
    elapsed = time.perf_counter() - start
    finite = bool(np.all(np.isfinite(study.ratios)))
    ok = (finite and study.spread <= 4 and not study.growth_trend
          and ctrl.spread <= 1 + 1e-8 and elapsed < 60.0)
    ratios = ", ".join(f"{r:.4f}" for r in study.ratios)
    record("6 continuous dependence", ok,
           f"ratios [{ratios}], spread {study.spread:.4f}, growth {study.growth_trend}; "
           f"control spread - 1 = {ctrl.spread - 1:.1e}; {elapsed:.1f} s")


def test_c07_pointwise_estimate():
    base = replace(load("default.cfg"), output_every=1)
    start = time.perf_counter()
    pair = run_pair(base, perturbed(base, "rho0", 1e-2))
    rep = pointwise_estimate_check(pair.first, pair.second)
    elapsed = time.perf_counter() - start
    ok = (rep.worst_ratio <= rep.c_struct and rep.contraction_margin >= 0
          and rep.increment_margin >= 0 and elapsed < 10.0)
    record("7 pointwise estimate", ok,
           f"worst L/R = {rep.worst_ratio:.4f} <= C_struct = {rep.c_struct:.4f}; one-step "
           f"margins {rep.contraction_margin:.1e}, {rep.increment_margin:.1e}; {elapsed:.2f} s")


def test_c08_uniqueness_signature():
    base = replace(load("default.cfg"), output_every=1)
    loose = replace(base, solver=SolverConfig(method="cg", tol=1e-10))
    tight = replace(base, solver=SolverConfig(method="cg", tol=1e-12))
    start = time.perf_counter()
    pair = run_pair(loose, tight)
    elapsed = time.perf_counter() - start
    ok = pair.verdict == "identical-data" and pair.lhs <= 1e-6 and elapsed < 10.0
    record("8 uniqueness signature", ok,
           f"norm triple of the difference = {pair.lhs:.2e} (CG tol 1e-10 vs 1e-12), "
           f"{elapsed:.2f} s")


def test_c09_constant_mobility_crosscheck():
    base = with_mobility(replace(load("default.cfg"), output_every=1), constant_mobility(1.0))
    transform = KirchhoffTransform(constant_mobility(1.0), closed_form=False)
    recon = with_mobility(base, transform.reconstructed_mobility())
    start = time.perf_counter()
    a, b = run(base), run(recon)
    elapsed = time.perf_counter() - start
    norms = difference_norms(a, b)
    pointwise = max(float(np.abs(a.stack(n) - b.stack(n)).max()) for n in ("mu", "rho", "xi", "u"))
    worst = max(norms["total"], pointwise)
    record("9 constant-mobility cross-check", worst <= 1e-12 and elapsed < 10.0,
           f"max difference over fields and norms = {worst:.2e}, {elapsed:.2f} s")


def test_c10_self_convergence_and_2d():
    start = time.perf_counter()
    conv = self_convergence_study(load("converge.cfg"), 4)
    smoke = run(load("smoke2d.cfg"))
    elapsed = time.perf_counter() - start
    audit = invariant_audit(smoke)
    rel = max(r.balance_residual / r.u_norm for r in smoke.reports)
    min_mu = min(r.min_mu for r in smoke.reports)
    rho_hi = max(max(abs(r.rho_range[0]), abs(r.rho_range[1])) for r in smoke.reports)
    smoke_ok = rel <= 1e-8 and min_mu >= -1e-10 and rho_hi < 1 and audit.verdict == "PASS"
    orders = ", ".join(f"{row[3]:.4f}" for row in conv.rows[1:-1])
    ok = conv.verdict == "PASS" and 0.7 <= conv.observed_order <= 1.3 and smoke_ok
    record("10 self-convergence and 2D smoke", ok and elapsed < 120.0,
           f"orders [{orders}], finest {conv.observed_order:.4f}; 2D residual {rel:.1e}, "
           f"min mu {min_mu:.4f}, max |rho| {rho_hi:.4f}; {elapsed:.1f} s")
