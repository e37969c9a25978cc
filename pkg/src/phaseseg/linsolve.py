"""SPD solves for the chemical-potential update.

The systems have the form ``(s*A + diag(d)) x = b`` with ``A`` an assembled
:class:`~phaseseg.grid.DiffusionMatrix` and ``d > 0``.  1D uses the Thomas
algorithm; 2D (or 1D on request) uses Jacobi-preconditioned CG.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NonConvergenceError, SingularityError
from .grid import DiffusionMatrix


@dataclass(frozen=True)
class SpdSystem:
    operator: DiffusionMatrix
    diagonal: np.ndarray
    rhs: np.ndarray
    scale: float = 1.0
    tolerance: float = 1e-10
    max_iterations: int = 10_000

    def __post_init__(self):
        d = np.asarray(self.diagonal, dtype=float)
        if d.shape != (self.operator.shape[0],) or np.asarray(self.rhs).shape != d.shape:
            raise InvalidParameterError("diagonal/rhs do not match operator size")
        if np.any(~(d > 0)):
            raise InvalidParameterError("added diagonal must be strictly positive")

    def matvec(self, x):
        return self.scale * self.operator.apply(x) + self.diagonal * x

    def dense(self) -> np.ndarray:
        return self.scale * self.operator.matrix.toarray() + np.diag(self.diagonal)


@dataclass(frozen=True)
class LinearSolution:
    x: np.ndarray
    iterations: int
    residual: float


def thomas(lower, diag, upper, rhs) -> np.ndarray:
    """Tridiagonal solve; ``lower[i]`` couples row ``i+1`` to ``i``, ``upper[i]`` row ``i`` to ``i+1``."""
    n = len(diag)
    c = np.empty(n)
    d = np.empty(n)
    if diag[0] == 0:
        raise SingularityError("zero pivot in row 0")
    c[0] = upper[0] / diag[0] if n > 1 else 0.0
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        pivot = diag[i] - lower[i - 1] * c[i - 1]
        if pivot == 0:
            raise SingularityError(f"zero pivot in row {i}")
        c[i] = upper[i] / pivot if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot
    x = np.empty(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def solve_tridiagonal(system: SpdSystem) -> LinearSolution:
    op = system.operator
    if op.offdiag is None:
        raise InvalidParameterError("tridiagonal solve needs a 1D operator")
    s = system.scale
    off = s * op.offdiag
    main = s * op.diagonal + system.diagonal
    rhs = np.asarray(system.rhs, dtype=float)
    x = thomas(off.tolist(), main.tolist(), off.tolist(), rhs.tolist())
    residual = float(np.linalg.norm(system.matvec(x) - rhs))
    return LinearSolution(x, 0, residual)


def solve_cg(system: SpdSystem, x0=None) -> LinearSolution:
    """Jacobi-preconditioned conjugate gradients to ``||r|| <= tol * ||b||``."""
    b = np.asarray(system.rhs, dtype=float)
    bnorm = float(np.linalg.norm(b))
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return LinearSolution(np.zeros_like(b), 0, 0.0)
    target = system.tolerance * bnorm
    inv_diag = 1.0 / (system.scale * system.operator.diagonal + system.diagonal)
    r = b - system.matvec(x)
    rnorm = float(np.linalg.norm(r))
    if rnorm <= target:
        return LinearSolution(x, 0, rnorm)
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    for k in range(1, system.max_iterations + 1):
        q = system.matvec(p)
        alpha = rz / float(p @ q)
        x += alpha * p
        r -= alpha * q
        rnorm = float(np.linalg.norm(r))
        if rnorm <= target:
            return LinearSolution(x, k, rnorm)
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NonConvergenceError(
        f"CG did not reach {system.tolerance:g} relative residual in "
        f"{system.max_iterations} iterations (residual {rnorm / bnorm:.3e})",
        residual=rnorm, iterations=system.max_iterations)


def solve(system: SpdSystem, method: str = "auto") -> LinearSolution:
    if method == "auto":
        method = "tridiagonal" if system.operator.offdiag is not None else "cg"
    if method == "tridiagonal":
        return solve_tridiagonal(system)
    if method == "cg":
        return solve_cg(system)
    raise InvalidParameterError(f"unknown linear solver {method!r}")
