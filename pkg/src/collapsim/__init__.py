"""Collapse-model numerics: CSL decoherence rates, Gaussian packet dynamics
under white, thermal and colored collapse noise, and the visual-process bound
on the collapse rate."""

from collapsim.errors import (
    CollapsimError,
    DomainError,
    IntegrationFailure,
    InvalidStateError,
    PreconditionError,
    SingularEvaluationError,
    StructuralError,
)
from collapsim.params import (
    CONSTANTS,
    CollapseParams,
    PhysicalConstants,
    QmuplCoupling,
    gamma_from_lambda,
    lambda_from_gamma,
    qmupl_from_csl,
)

__version__ = "0.1.0"

__all__ = [
    "CONSTANTS",
    "CollapseParams",
    "CollapsimError",
    "DomainError",
    "IntegrationFailure",
    "InvalidStateError",
    "PhysicalConstants",
    "PreconditionError",
    "QmuplCoupling",
    "SingularEvaluationError",
    "StructuralError",
    "gamma_from_lambda",
    "lambda_from_gamma",
    "qmupl_from_csl",
]
