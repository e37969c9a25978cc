"""Flat ``key = value`` configuration files.

Lines are ``dotted.key = value``; ``#`` starts a comment.  Unknown keys are
rejected with the closest known key as a hint, and the resulting model is
validated before a config is accepted.
"""

from __future__ import annotations

import difflib
import hashlib
import math
from dataclasses import dataclass, field

from .errors import ConfigError, DomainError, InvalidParameterError
from .grid import Grid
from .model import (CompatibilityConstants, ModelSpec, constant_coupling, constant_mobility,
                    default_coupling, find_compatible_bounds, linear_pi, make_double_well,
                    make_logarithmic, make_obstacle, rational_mobility, validate_model)
from .stepper import CosineProfile, RunConfig, SolverConfig

REQUIRED = object()

# key -> (type, default)
KEYS: dict[str, tuple[type, object]] = {
    "grid.dim": (int, 1),
    "grid.cells": (int, REQUIRED),
    "grid.length": (float, REQUIRED),
    "grid.cells_y": (int, None),
    "grid.length_y": (float, None),
    "time.tau": (float, REQUIRED),
    "time.final": (float, REQUIRED),
    "output.every": (int, 1),
    "potential": (str, REQUIRED),
    "potential.c": (float, 2.0),
    "obstacle.a": (float, -1.0),
    "obstacle.b": (float, 1.0),
    "obstacle.pi_slope": (float, -1.0),
    "g": (str, "default_concave"),
    "g.value": (float, 1.0),
    "kappa": (str, REQUIRED),
    "kappa.value": (float, 1.0),
    "kappa.min": (float, 1.0),
    "kappa.max": (float, 2.0),
    "bounds.rho_min": (float, None),
    "bounds.rho_max": (float, None),
    "bounds.xi_min": (float, None),
    "bounds.xi_max": (float, None),
    "init.mu.mean": (float, 1.0),
    "init.mu.amp": (float, 0.0),
    "init.mu.mode": (int, 1),
    "init.rho.mean": (float, 0.0),
    "init.rho.amp": (float, 0.0),
    "init.rho.mode": (int, 1),
    "solver.method": (str, "auto"),
    "solver.tol": (float, 1e-10),
    "solver.max_iter": (int, 10_000),
    "prox.rtol": (float, 1e-12),
    "validate.samples": (int, 1000),
    "study.eps": (str, "1e-1,1e-2,1e-3,1e-4"),
    "study.target": (str, "rho0"),
    "study.mode": (int, 1),
    "study.spread_limit": (float, 4.0),
    "pair.eps": (float, 1e-2),
    "converge.levels": (int, 4),
}

CHOICES = {
    "potential": ("logarithmic", "double_well", "obstacle"),
    "g": ("default_concave", "constant"),
    "kappa": ("constant", "rational"),
    "solver.method": ("auto", "tridiagonal", "cg"),
    "study.target": ("rho0", "mu0", "both"),
}


@dataclass(frozen=True)
class StudySettings:
    eps: tuple[float, ...]
    target: str
    mode: int
    spread_limit: float
    pair_eps: float
    levels: int


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunConfig
    study: StudySettings
    values: dict = field(repr=False)
    validation_samples: int = 1000

    @property
    def model(self) -> ModelSpec:
        return self.run.model


def _coerce(key: str, raw: str, line: int):
    kind = KEYS[key][0]
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1]
    try:
        if kind is int:
            value = int(text)
        elif kind is float:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError(text)
        else:
            value = text
    except ValueError:
        raise ConfigError(f"line {line}: {key} expects {kind.__name__}, got {raw.strip()!r}",
                          line=line, key=key) from None
    if key in CHOICES and value not in CHOICES[key]:
        raise ConfigError(f"line {line}: {key} must be one of {', '.join(CHOICES[key])}",
                          line=line, key=key)
    return value


def load_document(text: str) -> dict:
    """Parse text into ``{key: coerced value}`` for the keys present."""
    doc = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value'", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            hint = difflib.get_close_matches(key, KEYS, n=1)
            near = f" (nearest known key: {hint[0]})" if hint else ""
            raise ConfigError(f"line {number}: unknown key {key!r}{near}", line=number, key=key)
        if key in doc:
            raise ConfigError(f"line {number}: duplicate key {key!r}", line=number, key=key)
        doc[key] = _coerce(key, value, number)
    return doc


def canonical_text(doc: dict) -> str:
    return "\n".join(f"{k}={doc[k]!r}" for k in sorted(doc)) + "\n"


def config_hash(text: str) -> str:
    """SHA-256 of the canonical form; blind to comments, spacing and key order."""
    return hashlib.sha256(canonical_text(load_document(text)).encode()).hexdigest()


def _model_from(v: dict) -> ModelSpec:
    kind = v["potential"]
    if kind == "logarithmic":
        potential = make_logarithmic(v["potential.c"])
    elif kind == "double_well":
        potential = make_double_well()
    else:
        slope = v["obstacle.pi_slope"]
        potential = make_obstacle(v["obstacle.a"], v["obstacle.b"], linear_pi(slope), abs(slope))
    if v["g"] == "constant":
        a, b = potential.beta_domain
        interval = (a, b) if math.isfinite(a) and math.isfinite(b) else (-1.0, 1.0)
        coupling = constant_coupling(v["g.value"], interval)
    else:
        coupling = default_coupling()
    if v["kappa"] == "constant":
        mobility = constant_mobility(v["kappa.value"])
    else:
        mobility = rational_mobility(v["kappa.min"], v["kappa.max"])
    bound_keys = ("bounds.rho_min", "bounds.rho_max", "bounds.xi_min", "bounds.xi_max")
    given = [v[k] for k in bound_keys]
    if all(x is None for x in given):
        constants = find_compatible_bounds(potential, coupling)
    elif any(x is None for x in given):
        missing = [k for k, x in zip(bound_keys, given) if x is None]
        raise ConfigError(f"bounds must be given together; missing {', '.join(missing)}",
                          key=missing[0])
    else:
        constants = CompatibilityConstants(*given)
    return ModelSpec(potential, coupling, mobility, constants)


def parse_config(text: str, validate: bool = True) -> ExperimentConfig:
    """Build the run and study settings; ``validate=False`` skips the model gate."""
    doc = load_document(text)
    missing = [k for k, (_, d) in KEYS.items() if d is REQUIRED and k not in doc]
    if missing:
        raise ConfigError(f"missing required key {missing[0]!r}", key=missing[0])
    v = {k: doc.get(k, d) for k, (_, d) in KEYS.items()}
    try:
        model = _model_from(v)
        if v["grid.dim"] == 1:
            grid = Grid((v["grid.cells"],), (v["grid.length"],))
        elif v["grid.dim"] == 2:
            cy = v["grid.cells_y"] if v["grid.cells_y"] is not None else v["grid.cells"]
            ly = v["grid.length_y"] if v["grid.length_y"] is not None else v["grid.length"]
            grid = Grid((v["grid.cells"], cy), (v["grid.length"], ly))
        else:
            raise ConfigError("grid.dim must be 1 or 2", key="grid.dim")
        solver = SolverConfig(v["solver.method"], v["solver.tol"], v["solver.max_iter"],
                              v["prox.rtol"])
        run = RunConfig(
            grid=grid, tau=v["time.tau"], t_final=v["time.final"], model=model,
            mu0=CosineProfile(v["init.mu.mean"], v["init.mu.amp"], v["init.mu.mode"]),
            rho0=CosineProfile(v["init.rho.mean"], v["init.rho.amp"], v["init.rho.mode"]),
            solver=solver, output_every=v["output.every"],
        )
        run.n_steps
        eps = tuple(float(e) for e in v["study.eps"].split(",") if e.strip())
    except InvalidParameterError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid configuration: {exc}") from exc

    if validate:
        check_model(model, v["validate.samples"])
    study = StudySettings(eps, v["study.target"], v["study.mode"], v["study.spread_limit"],
                          v["pair.eps"], v["converge.levels"])
    return ExperimentConfig(run, study, doc, v["validate.samples"])


def check_model(model: ModelSpec, samples: int = 1000):
    try:
        report = validate_model(model, samples)
    except DomainError as exc:
        raise ConfigError(f"model validation failed: {exc}", key=exc.condition) from exc
    if not report.passed:
        names = ", ".join(c.name for c in report.failures())
        raise ConfigError(f"model validation failed: {names}", key=names)
    return report
