"""Resolvent ``(I + tau*beta)^-1`` of the monotone graph ``beta = df1``.

The resolvent is the only nonlinear solve in the order-parameter update.
Every element is solved independently by safeguarded Newton inside a
bracket, with bisection whenever a Newton step leaves the bracket; arrays
are processed elementwise with per-element freezing, so a vectorized call
returns exactly what a loop of scalar calls returns.

For the logarithmic potential the unknown is ``y = beta(x)`` rather than
``x``: ``tanh(y/2) + tau*y = r`` is smooth with slope ``>= tau`` everywhere,
whereas ``beta'`` blows up at ``x = +-1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, ShapeError, SolverFailure
from .model import DOUBLE_WELL, LOGARITHMIC, OBSTACLE, PotentialSplit

DEFAULT_RTOL = 1e-12
MAX_ITER = 200
_ONE_BELOW = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class ProxQuery:
    potential: PotentialSplit
    tau: float
    r: float

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidParameterError(f"tau must be > 0, got {self.tau}")
        if not np.isfinite(self.r):
            raise InvalidParameterError("r must be finite")


@dataclass(frozen=True)
class ProxResult:
    x: float
    xi: float
    iterations: int
    residual: float


def _newton(phi, dphi, lo, hi, y, tol):
    """Bracketed Newton with bisection fallback, elementwise on arrays."""
    iterations = np.zeros(y.shape, dtype=np.int64)
    f = phi(y)
    active = np.abs(f) > tol
    for _ in range(MAX_ITER):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        yi, fi = y[idx], f[idx]
        lo_i = np.where(fi < 0, yi, lo[idx])
        hi_i = np.where(fi > 0, yi, hi[idx])
        lo[idx], hi[idx] = lo_i, hi_i
        step = yi - fi / dphi(yi, idx)
        mid = 0.5 * (lo_i + hi_i)
        inside = (step > lo_i) & (step < hi_i) & np.isfinite(step)
        y_new = np.where(inside, step, mid)
        y[idx] = y_new
        iterations[idx] += 1
        f_new = phi(y_new, idx)
        f[idx] = f_new
        collapsed = (mid == lo_i) | (mid == hi_i)
        active[idx] = (np.abs(f_new) > tol[idx]) & ~collapsed
    if active.any():
        i = int(np.nonzero(active)[0][0])
        raise SolverFailure(
            f"resolvent did not converge in {MAX_ITER} iterations",
            last_iterate=float(y[i]), residual=float(abs(f[i])), index=i)
    # one polishing Newton step; kept only where it lowers the residual
    moved = f != 0
    if moved.any():
        idx = np.nonzero(moved)[0]
        y_pol = y[idx] - f[idx] / dphi(y[idx], idx)
        f_pol = phi(y_pol, idx)
        better = np.isfinite(y_pol) & (np.abs(f_pol) < np.abs(f[idx]))
        y[idx] = np.where(better, y_pol, y[idx])
        f[idx] = np.where(better, f_pol, f[idx])
        iterations[idx] += 1
    return y, iterations, np.abs(f)


def _as_tau(tau, shape):
    tau = np.broadcast_to(np.asarray(tau, dtype=float), shape).copy()
    if np.any(~(tau > 0)):
        raise InvalidParameterError("tau must be > 0")
    return tau


def resolve_array(potential: PotentialSplit, tau, r, rtol: float = DEFAULT_RTOL):
    """Vectorized resolvent.

    Returns ``(x, xi, iterations, residual)`` as arrays shaped like ``r``; the
    stopping tolerance per element is ``rtol * max(1, |r|)``.
    """
    r = np.asarray(r, dtype=float)
    shape = r.shape
    r = r.ravel()
    if not np.all(np.isfinite(r)):
        raise InvalidParameterError("r must be finite")
    tau = _as_tau(tau, shape).ravel()
    tol = rtol * np.maximum(1.0, np.abs(r))

    if potential.kind == OBSTACLE:
        a, b = potential.beta_domain
        x = np.clip(r, a, b)
        iterations = np.zeros(r.shape, dtype=np.int64)
        residual = np.zeros(r.shape)
    elif potential.kind == DOUBLE_WELL:
        def phi(x, idx=slice(None)):
            return x + tau[idx] * x**3 - r[idx]

        def dphi(x, idx):
            return 1.0 + 3.0 * tau[idx] * x * x

        bound = np.minimum(np.abs(r), np.cbrt(np.abs(r) / tau))
        lo = np.where(r >= 0, 0.0, -bound)
        hi = np.where(r >= 0, bound, 0.0)
        # phi is convex on x > 0, so Newton from the far bracket end is monotone
        x0 = np.where(r >= 0, hi, lo)
        x, iterations, residual = _newton(phi, dphi, lo, hi, x0, tol)
    elif potential.kind == LOGARITHMIC:
        def phi(y, idx=slice(None)):
            return np.tanh(0.5 * y) + tau[idx] * y - r[idx]

        def dphi(y, idx):
            t = np.tanh(0.5 * y)
            return 0.5 * (1.0 - t * t) + tau[idx]

        lo = np.where(r >= 0, 0.0, (r - 1.0) / tau)
        hi = np.where(r >= 0, (r + 1.0) / tau, 0.0)
        y0 = np.clip(r / (0.5 + tau), lo, hi)
        y, iterations, residual = _newton(phi, dphi, lo, hi, y0, tol)
        x = np.clip(np.tanh(0.5 * y), -_ONE_BELOW, _ONE_BELOW)
    else:
        raise InvalidParameterError(f"unknown potential kind {potential.kind!r}")

    xi = (r - x) / tau
    return (x.reshape(shape), xi.reshape(shape),
            iterations.reshape(shape), residual.reshape(shape))


def resolve(potential: PotentialSplit, tau: float, r: float, tol: float | None = None) -> ProxResult:
    """Solve ``x + tau*beta(x) ∋ r`` for one scalar.

    ``xi = (r - x)/tau`` is returned as the selection of ``beta(x)``.
    ``tol`` is an absolute residual tolerance, default ``1e-12 * max(1, |r|)``.
    """
    q = ProxQuery(potential, float(tau), float(r))
    rtol = DEFAULT_RTOL if tol is None else tol / max(1.0, abs(q.r))
    if not rtol > 0:
        raise InvalidParameterError("tol must be > 0")
    x, xi, it, res = resolve_array(q.potential, q.tau, np.array([q.r]), rtol)
    return ProxResult(float(x[0]), float(xi[0]), int(it[0]), float(res[0]))


def resolve_field(potential: PotentialSplit, tau: float, r_field, rtol: float = DEFAULT_RTOL):
    """Cellwise resolvent of a :class:`~phaseseg.grid.ScalarField`.

    Returns ``(x_field, xi_field)`` on the same grid.
    """
    from .grid import ScalarField

    if not isinstance(r_field, ScalarField):
        raise ShapeError("resolve_field expects a ScalarField")
    try:
        x, xi, _, _ = resolve_array(potential, tau, r_field.values, rtol)
    except SolverFailure as exc:
        raise SolverFailure(f"{exc} (cell {exc.index})", exc.last_iterate,
                            exc.residual, exc.index) from exc
    return ScalarField(r_field.grid, x), ScalarField(r_field.grid, xi)
