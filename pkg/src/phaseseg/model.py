"""Structural nonlinearities of the phase-field model and their validation.

A model is the potential split ``f = f1 + f2`` (through ``beta = df1`` and
``pi = f2'``), the concave coupling ``g``, the mobility ``kappa`` and the
four bounds ``rho_min, rho_max, xi_min, xi_max`` that confine the order
parameter and the selection of ``beta``.

All scalar functions act elementwise on numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InvalidParameterError

ScalarFn = Callable[[np.ndarray], np.ndarray]

LOGARITHMIC = "logarithmic"
DOUBLE_WELL = "double_well"
OBSTACLE = "obstacle"


@dataclass(frozen=True)
class PotentialSplit:
    """Convex part (as the monotone graph ``beta``) plus Lipschitz part ``pi``.

    ``beta_domain`` is the closure of ``D(beta)``; ``domain_open`` says whether
    the endpoints themselves are excluded (logarithmic case).
    """

    kind: str
    pi: ScalarFn
    pi_lipschitz: float
    beta_domain: tuple[float, float]
    domain_open: bool = False
    c: Optional[float] = None

    @property
    def single_valued(self) -> bool:
        return self.kind != OBSTACLE

    def in_domain(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self.beta_domain
        if self.domain_open:
            return (r > lo) & (r < hi)
        return (r >= lo) & (r <= hi)

    def beta(self, r):
        """Single-valued ``beta``; for the obstacle, the minimal-norm selection (0)."""
        r = np.asarray(r, dtype=float)
        if np.any(~self.in_domain(r)):
            raise DomainError(f"beta evaluated outside D(beta) = {self.beta_domain}")
        if self.kind == LOGARITHMIC:
            return np.log1p(r) - np.log1p(-r)
        if self.kind == DOUBLE_WELL:
            return r**3
        return np.zeros_like(r)

    def beta_contains(self, r: float, y: float, rtol: float = 1e-10) -> bool:
        """Membership test ``y in beta(r)``."""
        if not bool(self.in_domain(r)):
            return False
        if self.kind == OBSTACLE:
            a, b = self.beta_domain
            if a < r < b:
                return y == 0.0
            if r == a and r == b:
                return True
            if r == a:
                return y <= 0.0
            return y >= 0.0
        value = float(self.beta(r))
        return abs(value - y) <= rtol * max(1.0, abs(value))

    def f1(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == LOGARITHMIC:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = (1 + r) * np.log1p(r) + (1 - r) * np.log1p(-r)
            return np.where(self.in_domain(r) | (np.abs(r) == 1.0),
                            np.nan_to_num(out, nan=2 * math.log(2)), np.inf)
        if self.kind == DOUBLE_WELL:
            return r**4 / 4
        return np.where(self.in_domain(r), 0.0, np.inf)


def make_logarithmic(c: float) -> PotentialSplit:
    """``beta(r) = ln((1+r)/(1-r))`` and ``pi(r) = -2 c r`` on ``(-1, 1)``."""
    if not c > 1:
        raise InvalidParameterError(f"c > 1 required for a double well, got c={c}")
    c = float(c)
    return PotentialSplit(
        kind=LOGARITHMIC,
        pi=lambda r: -2.0 * c * np.asarray(r, dtype=float),
        pi_lipschitz=2.0 * c,
        beta_domain=(-1.0, 1.0),
        domain_open=True,
        c=c,
    )


def make_double_well() -> PotentialSplit:
    """Split of ``(r^2 - 1)^2 / 4`` into ``r^4/4`` and ``(1 - 2 r^2)/4``."""
    return PotentialSplit(
        kind=DOUBLE_WELL,
        pi=lambda r: -np.asarray(r, dtype=float),
        pi_lipschitz=1.0,
        beta_domain=(-math.inf, math.inf),
    )


def make_obstacle(a: float, b: float, pi: ScalarFn, pi_lipschitz: float) -> PotentialSplit:
    """Indicator of ``[a, b]`` as convex part; ``beta`` is its normal cone."""
    if not a < b:
        raise InvalidParameterError(f"obstacle interval needs a < b, got [{a}, {b}]")
    if pi_lipschitz < 0:
        raise InvalidParameterError("pi_lipschitz must be >= 0")
    return PotentialSplit(
        kind=OBSTACLE,
        pi=pi,
        pi_lipschitz=float(pi_lipschitz),
        beta_domain=(float(a), float(b)),
    )


def linear_pi(slope: float) -> ScalarFn:
    slope = float(slope)
    return lambda r: slope * np.asarray(r, dtype=float)


@dataclass(frozen=True)
class Coupling:
    g: ScalarFn
    g_prime: ScalarFn
    g_lipschitz: float
    g_prime_lipschitz: float
    validity_interval: tuple[float, float]
    name: str = "custom"


def default_coupling() -> Coupling:
    """``g(r) = 1 - r^2/2`` on ``[-1, 1]``, continued linearly outside.

    The continuation keeps ``g`` in C^1, concave, and 1-Lipschitz; it turns
    negative for ``|r| > 3/2``, so conditions are certified on ``[-1, 1]`` only.
    """

    def g(r):
        r = np.asarray(r, dtype=float)
        a = np.abs(r)
        return np.where(a <= 1.0, 1.0 - 0.5 * r * r, 0.5 - (a - 1.0))

    def g_prime(r):
        r = np.asarray(r, dtype=float)
        return -np.clip(r, -1.0, 1.0)

    return Coupling(g, g_prime, 1.0, 1.0, (-1.0, 1.0), name="default_concave")


def constant_coupling(value: float = 0.0, interval=(-math.inf, math.inf)) -> Coupling:
    if value < 0:
        raise InvalidParameterError(f"constant coupling must be >= 0, got {value}")
    value = float(value)
    return Coupling(
        g=lambda r: np.full(np.shape(r), value),
        g_prime=lambda r: np.zeros(np.shape(r)),
        g_lipschitz=0.0,
        g_prime_lipschitz=0.0,
        validity_interval=tuple(float(v) for v in interval),
        name="constant",
    )


@dataclass(frozen=True)
class Mobility:
    kappa: ScalarFn
    kappa_min: float
    kappa_max: float
    constant: Optional[float] = None
    name: str = "custom"

    def __post_init__(self):
        if not self.kappa_min > 0:
            raise InvalidParameterError(f"kappa_min must be > 0, got {self.kappa_min}")
        if self.kappa_max < self.kappa_min:
            raise InvalidParameterError("kappa_max must be >= kappa_min")


def constant_mobility(value: float) -> Mobility:
    value = float(value)
    return Mobility(lambda m: np.full(np.shape(m), value), value, value,
                    constant=value, name="constant")


def rational_mobility(kappa_min: float, kappa_max: float) -> Mobility:
    """``kappa(m) = kmin + (kmax - kmin)/(1 + m)``, decreasing from kmax to kmin."""
    lo, hi = float(kappa_min), float(kappa_max)

    def kappa(m):
        m = np.asarray(m, dtype=float)
        return lo + (hi - lo) / (1.0 + m)

    return Mobility(kappa, lo, hi, name="rational")


@dataclass(frozen=True)
class CompatibilityConstants:
    rho_min: float
    rho_max: float
    xi_min: float
    xi_max: float


@dataclass(frozen=True)
class ModelSpec:
    potential: PotentialSplit
    coupling: Coupling
    mobility: Mobility
    constants: CompatibilityConstants


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    conditions: tuple[ConditionResult, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def failures(self):
        return [c for c in self.conditions if not c.passed]

    def __getitem__(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def table(self) -> str:
        width = max(len(c.name) for c in self.conditions)
        lines = [f"{'condition':<{width}}  verdict  worst_margin"]
        for c in self.conditions:
            verdict = "PASS" if c.passed else "FAIL"
            lines.append(f"{c.name:<{width}}  {verdict:<7}  {c.margin:.6e}")
        return "\n".join(lines)


def _lipschitz_margin(fn, lipschitz, grid):
    values = np.asarray(fn(grid), dtype=float)
    quotients = np.abs(np.diff(values)) / np.diff(grid)
    worst = float(quotients.max()) if quotients.size else 0.0
    margin = lipschitz - worst
    return margin >= -1e-10 * max(1.0, lipschitz), margin


def validate_model(spec: ModelSpec, sample_count: int = 1000) -> ValidationReport:
    """Check every structural condition on the model by dense sampling.

    Conditions involving ``g`` are certified on ``coupling.validity_interval``;
    ``pi`` is checked on the same interval intersected with ``D(beta)``.  The
    compatibility inequalities are evaluated exactly at ``rho_min``/``rho_max``.
    """
    if sample_count < 2:
        raise InvalidParameterError("sample_count must be >= 2")
    pot, cpl, mob, k = spec.potential, spec.coupling, spec.mobility, spec.constants
    out = []

    def add(name, passed, margin, detail=""):
        out.append(ConditionResult(name, bool(passed), float(margin), detail))

    # mobility
    m = np.concatenate([[0.0], np.logspace(-8, 8, sample_count)])
    km = np.asarray(mob.kappa(m), dtype=float)
    if not np.all(np.isfinite(km)):
        raise DomainError("kappa not finite on [0, inf)", condition="kappa continuous")
    add("kappa_min > 0", mob.kappa_min > 0, mob.kappa_min)
    lower = float((km - mob.kappa_min).min())
    upper = float((mob.kappa_max - km).min())
    add("kappa >= kappa_min", lower >= 0, lower)
    add("kappa <= kappa_max", upper >= 0, upper)

    # coupling on its validity interval
    lo, hi = cpl.validity_interval
    if not (math.isfinite(lo) and math.isfinite(hi)):
        lo, hi = min(k.rho_min, -1.0), max(k.rho_max, 1.0)
    r = np.linspace(lo, hi, sample_count + 1)
    gr = np.asarray(cpl.g(r), dtype=float)
    add("g >= 0", gr.min() >= 0, gr.min())
    h = (hi - lo) / sample_count
    gsup = max(1.0, float(np.abs(gr).max()))
    inner = r[1:-1]
    dd = (np.asarray(cpl.g(inner + h)) - 2 * np.asarray(cpl.g(inner))
          + np.asarray(cpl.g(inner - h))) / h**2
    worst = float(dd.max()) if dd.size else 0.0
    add("g'' <= 0", worst <= 1e-8 * gsup, -worst)
    ok, margin = _lipschitz_margin(cpl.g, cpl.g_lipschitz, r)
    add("g Lipschitz", ok, margin)
    ok, margin = _lipschitz_margin(cpl.g_prime, cpl.g_prime_lipschitz, r)
    add("g' Lipschitz", ok, margin)

    # pi on validity interval inside D(beta)
    dlo, dhi = pot.beta_domain
    plo, phi = max(lo, dlo), min(hi, dhi)
    rp = np.linspace(plo, phi, sample_count + 1)
    ok, margin = _lipschitz_margin(pot.pi, pot.pi_lipschitz, rp)
    add("pi Lipschitz", ok, margin)

    # compatibility constants
    add("rho_min <= rho_max", k.rho_min <= k.rho_max, k.rho_max - k.rho_min)
    for name, rho in (("rho_min in D(beta)", k.rho_min), ("rho_max in D(beta)", k.rho_max)):
        inside = bool(pot.in_domain(rho))
        if not inside:
            raise DomainError(f"{name} violated: {rho} outside {pot.beta_domain}",
                              condition=name)
        add(name, True, min(rho - dlo, dhi - rho))
    inside_lo = k.rho_min - lo
    inside_hi = hi - k.rho_max
    add("[rho_min, rho_max] in validity interval", min(inside_lo, inside_hi) >= 0,
        min(inside_lo, inside_hi))

    for name, rho, xi in (("xi_min in beta(rho_min)", k.rho_min, k.xi_min),
                          ("xi_max in beta(rho_max)", k.rho_max, k.xi_max)):
        if pot.single_valued:
            margin = -abs(float(pot.beta(rho)) - xi)
        else:
            margin = 0.0 if pot.beta_contains(rho, xi) else -abs(xi)
        add(name, pot.beta_contains(rho, xi), margin)

    left = k.xi_min + float(pot.pi(k.rho_min))
    right = k.xi_max + float(pot.pi(k.rho_max))
    add("xi_min + pi(rho_min) <= 0", left <= 0, -left)
    add("xi_max + pi(rho_max) >= 0", right >= 0, right)
    gl = float(cpl.g_prime(k.rho_min))
    gh = float(cpl.g_prime(k.rho_max))
    add("g'(rho_min) >= 0", gl >= 0, gl)
    add("g'(rho_max) <= 0", gh <= 0, -gh)
    return ValidationReport(tuple(out))


def _bisect(fn, lo, hi, iterations=200):
    flo = fn(lo)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = fn(mid)
        if (fm >= 0) == (flo >= 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return hi


def find_compatible_bounds(potential: PotentialSplit, coupling: Coupling,
                           margin: float = 0.5) -> CompatibilityConstants:
    """Pick ``(rho_min, rho_max, xi_min, xi_max)`` satisfying the sign conditions.

    For single-valued ``beta`` the threshold where ``beta + pi`` changes sign is
    located by bisection on each side of 0, then moved a fraction ``margin``
    toward the edge of ``D(beta)`` intersected with the coupling's validity
    interval.  The obstacle case uses the interval endpoints.
    """
    lo_v, hi_v = coupling.validity_interval
    if potential.kind == OBSTACLE:
        a, b = potential.beta_domain
        xi_lo = min(0.0, -float(potential.pi(a)))
        xi_hi = max(0.0, -float(potential.pi(b)))
        return CompatibilityConstants(a, b, xi_lo, xi_hi)
    dlo, dhi = potential.beta_domain
    edge_hi = min(hi_v, dhi)
    edge_lo = max(lo_v, dlo)
    if not (math.isfinite(edge_hi) and math.isfinite(edge_lo)):
        raise InvalidParameterError("bounds search needs a bounded domain or validity interval")

    def drive(r):
        return float(potential.beta(r) + potential.pi(r))

    shrink = 1e-12
    top = edge_hi - shrink if potential.domain_open and edge_hi == dhi else edge_hi
    bot = edge_lo + shrink if potential.domain_open and edge_lo == dlo else edge_lo
    if drive(top) < 0 or drive(bot) > 0:
        raise InvalidParameterError("no compatible bounds inside the admissible interval")
    root_hi = top if drive(top) == 0 else _bisect(drive, 1e-12, top)
    root_lo = bot if drive(bot) == 0 else -_bisect(lambda r: -drive(-r), 1e-12, -bot)
    rho_max = root_hi + margin * (top - root_hi)
    rho_min = root_lo - margin * (root_lo - bot)
    if float(coupling.g_prime(rho_max)) > 0 or float(coupling.g_prime(rho_min)) < 0:
        raise InvalidParameterError("coupling slope has the wrong sign at the bounds")
    return CompatibilityConstants(rho_min, rho_max,
                                  float(potential.beta(rho_min)),
                                  float(potential.beta(rho_max)))


def default_model() -> ModelSpec:
    """Logarithmic potential (c = 2), default coupling, rational mobility in [1, 2]."""
    xi = math.log(99.0)
    return ModelSpec(
        potential=make_logarithmic(2.0),
        coupling=default_coupling(),
        mobility=rational_mobility(1.0, 2.0),
        constants=CompatibilityConstants(-0.98, 0.98, -xi, xi),
    )
