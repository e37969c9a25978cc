"""Command-line interface.

Exit codes: 0 success/PASS, 1 verdict FAIL or failed run, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_hash, parse_config
from .errors import ConfigError, PhaseSegError, ValidationError
from .harness import (continuous_dependence_study, invariant_audit, perturbed,
                      pointwise_estimate_check, run_pair, self_convergence_study)
from .io import STEP_COLUMNS, csv_writer, fmt, staged, step_row, write_snapshot, write_table
from .kirchhoff import KirchhoffTransform, kirchhoff_table
from .model import validate_model
from .prox import resolve_array
from .stepper import RunError, run

def _load(path: str, validate: bool = True) -> tuple[ExperimentConfig, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text, validate=validate), text


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out: Path, command: str, text: str) -> None:
    (out / "manifest.txt").write_text(
        f"tool = phaseseg {__version__}\ncommand = {command}\n"
        f"config_sha256 = {config_hash(text)}\n", encoding="utf-8")


def cmd_validate(args) -> int:
    cfg, _ = _load(args.config, validate=False)
    report = validate_model(cfg.model, cfg.validation_samples)
    print(report.table())
    return 0 if report.passed else 1


def cmd_simulate(args) -> int:
    cfg, text = _load(args.config)
    out = _out_dir(args)
    _manifest(out, "simulate", text)
    config = cfg.run
    outputs = {"n": 0}

    with staged(out / "steps.csv") as fh:
        writer = csv_writer(fh)
        writer.writerow(STEP_COLUMNS)

        def observer(state, report):
            if report is not None:
                writer.writerow(step_row(report))
                fh.flush()
                if report.step % config.output_every and report.step != config.n_steps:
                    return
            index = 0 if report is None else report.step
            for name in ("mu", "rho", "xi", "u"):
                write_snapshot(out / f"snap_{index:06d}_{name}.txt", getattr(state, name),
                               state.time)
            outputs["n"] += 1

        traj = run(config, observer)
    audit = invariant_audit(traj)
    worst = max((r.balance_residual / max(r.u_norm, 1e-300) for r in traj.reports), default=0.0)
    print(f"steps={config.n_steps} snapshots={outputs['n']} min_mu={audit.min_mu:.6e} "
          f"rho_margin={audit.rho_bound_margin:.6e} xi_margin={audit.xi_bound_margin:.6e} "
          f"worst_relative_balance={worst:.3e}")
    for failure in audit.failures:
        print("FAIL:", failure)
    print(audit.verdict)
    return 0 if audit.verdict == "PASS" else 1


def cmd_cdep(args) -> int:
    cfg, text = _load(args.config)
    out = _out_dir(args)
    _manifest(out, "cdep-study", text)
    st = cfg.study
    report = continuous_dependence_study(cfg.run, st.eps, st.target, st.mode,
                                         spread_limit=st.spread_limit)
    write_table(out / "study.csv", ("eps", "lhs", "rhs", "ratio"),
                [(r.eps, r.lhs, r.rhs, r.ratio) for r in report.rows])
    for r in report.rows:
        print(f"eps={fmt(r.eps)} lhs={r.lhs:.6e} rhs={r.rhs:.6e} ratio={r.ratio:.6f}")
    print(f"spread={report.spread:.6f} growth_trend={report.growth_trend} {report.verdict}")
    return 0 if report.verdict == "PASS" else 1


def cmd_pointwise(args) -> int:
    cfg, text = _load(args.config)
    out = _out_dir(args)
    _manifest(out, "pointwise-check", text)
    st = cfg.study
    base = cfg.run
    pair = run_pair(base, perturbed(base, st.target, st.pair_eps, st.mode))
    report = pointwise_estimate_check(pair.first, pair.second)
    write_table(out / "pointwise.csv", ("time", "worst_cell", "L", "R", "ratio"), report.rows)
    print(f"worst_ratio={report.worst_ratio:.6f} C_struct={report.c_struct:.6f} "
          f"contraction_margin={report.contraction_margin:.3e} {report.verdict}")
    return 0 if report.verdict == "PASS" else 1


def cmd_converge(args) -> int:
    cfg, text = _load(args.config)
    out = _out_dir(args)
    _manifest(out, "converge", text)
    report = self_convergence_study(cfg.run, cfg.study.levels)
    write_table(out / "convergence.csv", ("level", "tau", "distance", "observed_order"),
                report.rows)
    for row in report.rows:
        print(" ".join(fmt(v) for v in row))
    print(f"observed_order={report.observed_order:.4f} {report.verdict}")
    return 0 if report.verdict in ("PASS", "degenerate-exact") else 1


def cmd_prox_table(args) -> int:
    cfg, _ = _load(args.config, validate=False)
    r = np.linspace(args.r_min, args.r_max, args.count)
    x, xi, _, _ = resolve_array(cfg.model.potential, args.tau, r)
    rows = list(zip(r, x, xi))
    return _emit_table(args, "prox.csv", ("r", "x", "xi"), rows)


def cmd_kirchhoff_table(args) -> int:
    cfg, _ = _load(args.config, validate=False)
    rows = kirchhoff_table(KirchhoffTransform(cfg.model.mobility), args.m_max, args.count)
    return _emit_table(args, "kirchhoff.csv", ("m", "kappa", "K"), rows)


def _emit_table(args, name, header, rows) -> int:
    if args.out:
        write_table(_out_dir(args) / name, header, rows)
    else:
        w = csv_writer(sys.stdout)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phaseseg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"phaseseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help, emitting):
        p = sub.add_parser(name, help=help)
        p.add_argument("config")
        p.add_argument("--out", required=emitting, default=None)
        p.set_defaults(func=func)
        return p

    add("simulate", cmd_simulate, "run one trajectory", True)
    add("cdep-study", cmd_cdep, "continuous-dependence study over eps", True)
    add("pointwise-check", cmd_pointwise, "cellwise estimate for one perturbed pair", True)
    add("converge", cmd_converge, "temporal self-convergence study", True)
    add("validate", cmd_validate, "check the model conditions", False)
    p = add("prox-table", cmd_prox_table, "print (r, x, xi) of the resolvent", False)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--r-min", type=float, default=-2.0)
    p.add_argument("--r-max", type=float, default=2.0)
    p.add_argument("--count", type=int, default=41)
    p = add("kirchhoff-table", cmd_kirchhoff_table, "print (m, kappa, K)", False)
    p.add_argument("--m-max", type=float, default=10.0)
    p.add_argument("--count", type=int, default=21)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RunError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    except PhaseSegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
