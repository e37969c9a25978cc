"""Continuous-dependence study for a config, with the linear control alongside.

    python scripts/run_cdep_study.py configs/default.cfg --out results/cdep
"""

import argparse
from dataclasses import replace
from pathlib import Path

from phaseseg.config import parse_config
from phaseseg.harness import continuous_dependence_study, linear_control_model
from phaseseg.io import write_table


def report(label, study):
    print(label)
    for row in study.rows:
        print(f"  eps={row.eps:.0e} amp={row.amplitude:.3e} lhs={row.lhs:.6e} "
              f"rhs={row.rhs:.6e} ratio={row.ratio:.6f}")
    print(f"  spread={study.spread:.6f} growth={study.growth_trend} {study.verdict}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config")
    parser.add_argument("--out", default=None)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()

    cfg = parse_config(Path(args.config).read_text())
    st = cfg.study
    study = continuous_dependence_study(cfg.run, st.eps, st.target, st.mode, args.threads,
                                        st.spread_limit)
    control_base = replace(cfg.run, model=linear_control_model())
    control = continuous_dependence_study(control_base, st.eps, "both", st.mode, args.threads)
    report(f"model from {args.config}", study)
    report("linear control", control)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, s in (("study.csv", study), ("control.csv", control)):
            write_table(out / name, ("eps", "lhs", "rhs", "ratio"),
                        [(r.eps, r.lhs, r.rhs, r.ratio) for r in s.rows])


if __name__ == "__main__":
    main()
