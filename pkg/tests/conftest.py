import math

import numpy as np
import pytest

from phaseseg.grid import Grid
from phaseseg.model import default_model
from phaseseg.stepper import CosineProfile, RunConfig


def bisect_root(fn, lo, hi, iterations=400):
    """Plain bisection for an increasing function; independent of the library solvers."""
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if fn(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def log_resolvent_oracle(tau, r):
    def fn(x):
        return x + tau * math.log((1 + x) / (1 - x)) - r

    return bisect_root(fn, -1.0 + 1e-300, 1.0 - 2**-53)


def double_well_resolvent_oracle(tau, r):
    bound = abs(r) + 1.0
    return bisect_root(lambda x: x + tau * x**3 - r, -bound, bound)


def default_config(cells=128, tau=1e-3, t_final=0.5, model=None, **kw):
    return RunConfig(
        grid=Grid.uniform(cells),
        tau=tau,
        t_final=t_final,
        model=model or default_model(),
        mu0=kw.pop("mu0", CosineProfile(1.0, 0.5, 2)),
        rho0=kw.pop("rho0", CosineProfile(0.0, 0.6, 1)),
        **kw,
    )


@pytest.fixture
def base_config():
    return default_config()


@pytest.fixture
def short_config():
    return default_config(cells=32, tau=1e-2, t_final=0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


# (criterion, verdict, detail) rows recorded by the acceptance module
ACCEPTANCE: list[tuple[str, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{verdict:4s}  {name}: {detail}")
