"""Snapshot and CSV files.

Snapshots are text: a header ``# grid dim=<d> cells=<n[,m]> lengths=<L[,M]> time=<t>``
followed by one value per line, row-major, printed with 17 significant
digits so that reading a file back reproduces every float bit for bit.
"""

from __future__ import annotations

import csv
import os
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .grid import Grid, ScalarField

STEP_COLUMNS = ("step", "time", "balance_residual", "min_mu", "rho_min", "rho_max",
                "xi_min", "xi_max", "cg_iterations", "prox_max_iterations", "safeguard_margin")


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _join(values) -> str:
    return ",".join(fmt(v) for v in values)


def snapshot_text(field: ScalarField, time: float) -> str:
    g = field.grid
    header = (f"# grid dim={g.dim} cells={','.join(str(c) for c in g.cells)} "
              f"lengths={_join(g.lengths)} time={fmt(time)}")
    return header + "\n" + "\n".join(fmt(v) for v in field.values) + "\n"


def write_snapshot(path, field: ScalarField, time: float) -> None:
    Path(path).write_text(snapshot_text(field, time), encoding="utf-8")


def parse_snapshot(text: str) -> tuple[ScalarField, float]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# grid"):
        raise ShapeError("snapshot header missing")
    attrs = dict(item.split("=", 1) for item in lines[0][len("# grid"):].split())
    cells = tuple(int(c) for c in attrs["cells"].split(","))
    lengths = tuple(float(v) for v in attrs["lengths"].split(","))
    if int(attrs["dim"]) != len(cells):
        raise ShapeError("snapshot dim does not match cells")
    values = np.array([float(v) for v in lines[1:] if v.strip()])
    return ScalarField(Grid(cells, lengths), values), float(attrs["time"])


def read_snapshot(path) -> tuple[ScalarField, float]:
    return parse_snapshot(Path(path).read_text(encoding="utf-8"))


@contextmanager
def staged(path):
    """Write to ``<path>.partial`` and rename on success; the partial file
    stays behind if the block raises."""
    path = Path(path)
    partial = path.with_name(path.name + ".partial")
    with open(partial, "w", newline="", encoding="utf-8") as fh:
        yield fh
    os.replace(partial, path)


def csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def step_row(report) -> list[str]:
    return [fmt(report.step), fmt(report.time), fmt(report.balance_residual),
            fmt(report.min_mu), fmt(report.rho_range[0]), fmt(report.rho_range[1]),
            fmt(report.xi_range[0]), fmt(report.xi_range[1]), fmt(report.cg_iterations),
            fmt(report.prox_max_iterations), fmt(report.diagonal_safeguard_margin)]


def write_table(path, header, rows) -> None:
    with staged(path) as fh:
        w = csv_writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
