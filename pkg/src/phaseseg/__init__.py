"""Semi-implicit solver and stability harness for a nonstandard phase-field system.

The model couples a chemical potential ``mu >= 0`` with an order parameter
``rho`` through

    (1 + 2 g(rho)) d_t mu + mu g'(rho) d_t rho - div(kappa(mu) grad mu) = 0
    d_t rho + xi + pi(rho) = mu g'(rho),   xi in beta(rho)

with homogeneous Neumann conditions on an interval or a rectangle.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DomainError,
    InvalidParameterError,
    NonConvergenceError,
    PhaseSegError,
    ShapeError,
    SingularityError,
    SolverFailure,
    StepSizeError,
    ValidationError,
)
from .model import (
    CompatibilityConstants,
    Coupling,
    Mobility,
    ModelSpec,
    PotentialSplit,
    constant_coupling,
    constant_mobility,
    default_coupling,
    make_double_well,
    make_logarithmic,
    make_obstacle,
    rational_mobility,
    validate_model,
)
from .prox import resolve, resolve_array, resolve_field
from .kirchhoff import KirchhoffTransform
from .grid import Grid, ScalarField, assemble_diffusion, integrate, norms
from .stepper import RunConfig, State, init_state, run, step

__all__ = [
    "__version__",
    "CompatibilityConstants",
    "ConfigError",
    "Coupling",
    "DomainError",
    "Grid",
    "InvalidParameterError",
    "KirchhoffTransform",
    "Mobility",
    "ModelSpec",
    "NonConvergenceError",
    "PhaseSegError",
    "PotentialSplit",
    "RunConfig",
    "ScalarField",
    "ShapeError",
    "SingularityError",
    "SolverFailure",
    "State",
    "StepSizeError",
    "ValidationError",
    "assemble_diffusion",
    "constant_coupling",
    "constant_mobility",
    "default_coupling",
    "init_state",
    "integrate",
    "make_double_well",
    "make_logarithmic",
    "make_obstacle",
    "norms",
    "rational_mobility",
    "resolve",
    "resolve_array",
    "resolve_field",
    "run",
    "step",
    "validate_model",
]
