"""Uniform cell-centred grids, discrete fields and the Neumann diffusion operator.

Fields are stored row-major with axis 0 along x.  The assembled operator
``A`` approximates ``-div(kappa(mu) grad .)``: it is symmetric, positive
semidefinite, has nonpositive off-diagonals and zero row sums.  Boundary
faces are simply absent, which makes the zero-flux condition exact and
``sum(A v) = 0`` a telescoping identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, InvalidParameterError, ShapeError


@dataclass(frozen=True)
class Grid:
    cells: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        cells = tuple(int(c) for c in self.cells)
        lengths = tuple(float(v) for v in self.lengths)
        if len(cells) not in (1, 2) or len(lengths) != len(cells):
            raise InvalidParameterError("grid must be 1D or 2D with one length per axis")
        if any(c < 1 for c in cells):
            raise InvalidParameterError("cells must be >= 1 per axis")
        if any(not v > 0 for v in lengths):
            raise InvalidParameterError("lengths must be > 0")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def uniform(cls, cells, length=1.0):
        if np.isscalar(cells):
            return cls((cells,), (length,))
        lengths = (length,) * len(cells) if np.isscalar(length) else tuple(length)
        return cls(tuple(cells), lengths)

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.cells))

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def centers(self) -> list[np.ndarray]:
        """Cell-centre coordinates, one meshgrid array per axis (flattened)."""
        axes = [(np.arange(n) + 0.5) * h for n, h in zip(self.cells, self.spacing)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return [m.ravel() for m in mesh]


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size != self.grid.size:
            raise ShapeError(f"field has {values.size} values, grid has {self.grid.size} cells")
        if not np.all(np.isfinite(values)):
            raise DomainError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.size, float(value)))

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class DiffusionMatrix:
    matrix: sp.csr_matrix
    # 1D bands (lower == upper by symmetry); None in 2D
    diagonal: np.ndarray
    offdiag: np.ndarray | None
    face_conductance: tuple[np.ndarray, ...]

    def apply(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=float)

    @property
    def shape(self):
        return self.matrix.shape


def _axis_faces(kappa_cells: np.ndarray, axis: int, h: float):
    a = np.take(kappa_cells, range(kappa_cells.shape[axis] - 1), axis=axis)
    b = np.take(kappa_cells, range(1, kappa_cells.shape[axis]), axis=axis)
    return 0.5 * (a + b) / (h * h)


def assemble_diffusion(grid: Grid, mu, mobility) -> DiffusionMatrix:
    """Assemble ``A ~ -div(kappa(mu) grad .)`` with arithmetic-mean face mobility."""
    mu = mu.values if isinstance(mu, ScalarField) else np.asarray(mu, dtype=float).ravel()
    if mu.size != grid.size:
        raise ShapeError("mu does not match grid")
    bad = np.nonzero(mu < 0)[0]
    if bad.size:
        i = int(bad[0])
        raise DomainError(f"mobility needs mu >= 0; mu[{i}] = {mu[i]}", index=i)
    kappa = np.asarray(mobility.kappa(mu), dtype=float).reshape(grid.cells)
    n = grid.size
    index = np.arange(n).reshape(grid.cells)
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    faces = []
    for axis, h in enumerate(grid.spacing):
        cond = _axis_faces(kappa, axis, h)
        faces.append(cond)
        if cond.size == 0:
            continue
        left = np.take(index, range(grid.cells[axis] - 1), axis=axis).ravel()
        right = np.take(index, range(1, grid.cells[axis]), axis=axis).ravel()
        c = cond.ravel()
        rows += [left, right]
        cols += [right, left]
        vals += [-c, -c]
        np.add.at(diag, left, c)
        np.add.at(diag, right, c)
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    matrix = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                           shape=(n, n))
    offdiag = -faces[0].ravel() if grid.dim == 1 else None
    return DiffusionMatrix(matrix, diag, offdiag, tuple(faces))


def integrate(field: ScalarField) -> float:
    """Discrete integral: cell sum times cell volume."""
    return float(field.values.sum() * field.grid.cell_volume)


class Norms(NamedTuple):
    l2_Q: float
    linf_H: float
    l1_Q: float


def norms(snapshots: Sequence, tau: float, cell_volume: float | None = None) -> Norms:
    """Space-time norms of a field history sampled every ``tau``.

    ``snapshots`` is a sequence of ScalarFields or of equally long arrays
    (then ``cell_volume`` is required).  Returns the ``L2(Q)``,
    ``L-inf(0,T; L2)`` and ``L1(Q)`` norms, with each snapshot weighted by
    ``tau`` in the time sums.
    """
    if len(snapshots) == 0:
        return Norms(0.0, 0.0, 0.0)
    if isinstance(snapshots[0], ScalarField):
        grid = snapshots[0].grid
        if any(s.grid != grid for s in snapshots):
            raise ShapeError("snapshots live on different grids")
        data = np.stack([s.values for s in snapshots])
        vol = grid.cell_volume
    else:
        if cell_volume is None:
            raise ShapeError("cell_volume required for raw arrays")
        try:
            data = np.stack([np.asarray(s, dtype=float).ravel() for s in snapshots])
        except ValueError as exc:
            raise ShapeError("snapshots have mismatched sizes") from exc
        vol = float(cell_volume)
    sq = vol * (data * data).sum(axis=1)
    return Norms(
        l2_Q=float(np.sqrt(tau * sq.sum())),
        linf_H=float(np.sqrt(sq.max())),
        l1_Q=float(tau * vol * np.abs(data).sum()),
    )
