"""Cellwise L/R profile of the pointwise estimate for one perturbed pair.

    python scripts/pointwise_profile.py configs/default.cfg --eps 1e-2
"""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from phaseseg.config import parse_config
from phaseseg.harness import perturbed, pointwise_estimate_check, run_pair


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config")
    parser.add_argument("--eps", type=float, default=None)
    parser.add_argument("--every", type=int, default=50, help="print every n-th step")
    args = parser.parse_args()

    cfg = parse_config(Path(args.config).read_text())
    base = replace(cfg.run, output_every=1)
    eps = args.eps if args.eps is not None else cfg.study.pair_eps
    pair = run_pair(base, perturbed(base, cfg.study.target, eps, cfg.study.mode))
    rep = pointwise_estimate_check(pair.first, pair.second)
    for t, cell, L, R, ratio in rep.rows[::args.every]:
        print(f"t={t:.4f} cell={cell:4d} L={L:.4e} R={R:.4e} L/R={ratio:.4f}")
    print(f"worst L/R {rep.worst_ratio:.4f}, C_struct {rep.c_struct:.4f}, "
          f"median final L/R {float(np.median(rep.L[-1] / rep.R[-1])):.4f}: {rep.verdict}")


if __name__ == "__main__":
    main()
