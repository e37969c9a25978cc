"""Kirchhoff transform ``K(m) = int_0^m kappa`` of the mobility.

``K`` is evaluated by adaptive composite 5-point Gauss-Legendre quadrature.
Values at the breakpoints ``0, 2^-10, 2^-9, ..., 2^20`` are computed once
at construction, so ``K(m)`` only integrates from the nearest breakpoint
below ``m``.  A constant mobility uses the exact product ``kappa0 * m``
unless ``closed_form=False``.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidParameterError
from .model import Mobility

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(5)
_BREAK_EXPONENTS = range(-10, 21)
_MAX_DEPTH = 40


def _gauss5(kappa, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    values = np.asarray(kappa(mid + half * _NODES), dtype=float)
    return half * float(np.dot(_WEIGHTS, values))


def _adaptive(kappa, a, b, whole, tol, depth):
    mid = 0.5 * (a + b)
    left = _gauss5(kappa, a, mid)
    right = _gauss5(kappa, mid, b)
    if abs(left + right - whole) <= tol or depth >= _MAX_DEPTH:
        return left + right
    return (_adaptive(kappa, a, mid, left, 0.5 * tol, depth + 1)
            + _adaptive(kappa, mid, b, right, 0.5 * tol, depth + 1))


def integrate_mobility(kappa, a: float, b: float, tol: float = 1e-13) -> float:
    """Adaptive Gauss-Legendre integral of ``kappa`` over ``[a, b]``."""
    if b == a:
        return 0.0
    return _adaptive(kappa, a, b, _gauss5(kappa, a, b), tol, 0)


@dataclass(frozen=True)
class KirchhoffTransform:
    mobility: Mobility
    closed_form: bool = True
    quadrature_nodes: int = 5
    tol: float = 1e-13
    breakpoints: tuple[tuple[float, float], ...] = field(init=False, repr=False)
    _keys: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.quadrature_nodes != 5:
            raise InvalidParameterError("only 5-point Gauss-Legendre is implemented")
        table = [(0.0, 0.0)]
        total = 0.0
        for k in _BREAK_EXPONENTS:
            m = 2.0**k
            total += integrate_mobility(self.mobility.kappa, table[-1][0], m,
                                        self.tol * max(1.0, m))
            table.append((m, total))
        object.__setattr__(self, "breakpoints", tuple(table))
        object.__setattr__(self, "_keys", tuple(b[0] for b in table))

    @property
    def exact(self) -> bool:
        return self.closed_form and self.mobility.constant is not None

    def K(self, m: float) -> float:
        m = float(m)
        if not m >= 0:
            raise DomainError(f"K is defined for m >= 0, got {m}")
        if self.exact:
            return self.mobility.constant * m
        j = bisect.bisect_right(self._keys, m) - 1
        m0, k0 = self.breakpoints[j]
        return k0 + integrate_mobility(self.mobility.kappa, m0, m, self.tol * max(1.0, m))

    def K_array(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        if self.exact:
            if np.any(~(m >= 0)):
                raise DomainError("K is defined for m >= 0")
            return self.mobility.constant * m
        return np.array([self.K(v) for v in m.ravel()]).reshape(m.shape)

    def K_inverse(self, y: float) -> float:
        """Solve ``K(m) = y`` by bracketed Newton with ``K' = kappa``."""
        y = float(y)
        if not y >= 0:
            raise DomainError(f"K_inverse is defined for y >= 0, got {y}")
        if y == 0.0:
            return 0.0
        mob = self.mobility
        if self.exact:
            return y / mob.constant
        lo, hi = y / mob.kappa_max, y / mob.kappa_min
        m = 0.5 * (lo + hi)
        tol = 1e-13 * max(1.0, y)
        for _ in range(200):
            f = self.K(m) - y
            if abs(f) <= tol:
                return m
            if f > 0:
                hi = m
            else:
                lo = m
            step = m - f / float(mob.kappa(m))
            m = step if lo < step < hi else 0.5 * (lo + hi)
            if hi - lo <= 4 * np.spacing(hi):
                return m
        return m

    def check_bilipschitz(self, samples: int = 100, m_max: float = 10.0) -> "BiLipschitzReport":
        """Check both bounds and the strong monotonicity over all sampled pairs."""
        if samples < 2:
            raise InvalidParameterError("samples must be >= 2")
        m = np.linspace(0.0, m_max, samples)
        k = self.K_array(m)
        i, j = np.triu_indices(samples, k=1)
        dm = m[i] - m[j]
        dk = k[i] - k[j]
        kmin, kmax = self.mobility.kappa_min, self.mobility.kappa_max
        lower = np.abs(dk) - kmin * np.abs(dm)
        upper = kmax * np.abs(dm) - np.abs(dk)
        strong = dm * dk - kmin * dm * dm
        return BiLipschitzReport(
            pairs=int(dm.size),
            lower_margin=float(lower.min()),
            upper_margin=float(upper.min()),
            monotone_margin=float(strong.min()),
            strictly_increasing=bool(np.all(np.diff(k) > 0)),
        )

    def reconstructed_mobility(self) -> Mobility:
        """Mobility recovered as the secant slope ``K(m)/m`` of the transform.

        Equal to ``kappa`` only when ``kappa`` is constant; used as the
        cross-check that the transform is exactly linear in that case.
        """
        h = 2.0**-20
        at_zero = self.K(h) / h

        def kappa(m):
            m = np.asarray(m, dtype=float)
            k = self.K_array(np.where(m > 0, m, 1.0))
            return np.where(m > 0, k / np.where(m > 0, m, 1.0), at_zero)

        return Mobility(kappa, self.mobility.kappa_min, self.mobility.kappa_max,
                        name="kirchhoff-secant")


@dataclass(frozen=True)
class BiLipschitzReport:
    pairs: int
    lower_margin: float
    upper_margin: float
    monotone_margin: float
    strictly_increasing: bool

    def passed(self, slack: float = 1e-9) -> bool:
        return (min(self.lower_margin, self.upper_margin, self.monotone_margin) >= -slack
                and self.strictly_increasing)


def kirchhoff_table(transform: KirchhoffTransform, m_max: float = 10.0, count: int = 11):
    m = np.linspace(0.0, m_max, count)
    kappa = np.asarray(transform.mobility.kappa(m), dtype=float)
    return [(float(a), float(b), transform.K(a)) for a, b in zip(m, kappa)]


__all__ = ["KirchhoffTransform", "BiLipschitzReport", "integrate_mobility", "kirchhoff_table"]
