"""Temporal self-convergence over tau, tau/2, ... for a config.

    python scripts/run_convergence.py configs/converge.cfg --levels 5
"""

import argparse
from pathlib import Path

from phaseseg.config import parse_config
from phaseseg.harness import self_convergence_study
from phaseseg.io import write_table


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config")
    parser.add_argument("--levels", type=int, default=None)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    cfg = parse_config(Path(args.config).read_text())
    rep = self_convergence_study(cfg.run, args.levels or cfg.study.levels)
    print(f"{'level':>5} {'tau':>12} {'distance':>14} {'order':>8}")
    for level, tau, dist, order in rep.rows:
        print(f"{level:5d} {tau:12.4e} {dist:14.6e} {order:8.4f}")
    print(f"observed order {rep.observed_order:.4f}: {rep.verdict}")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_table(Path(args.out) / "convergence.csv",
                    ("level", "tau", "distance", "observed_order"), rep.rows)


if __name__ == "__main__":
    main()
