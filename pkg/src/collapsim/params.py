"""Physical constants and conversions between collapse couplings.

Everything here is SI. CGS values (as quoted in the CSL literature) are
converted at the boundary with :func:`cm3_per_s` and :func:`cm`.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

from collapsim.errors import DomainError

PI_32 = math.pi ** 1.5


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float  # J s
    k_B: float  # J / K
    m_nucleon: float  # kg

    def __post_init__(self):
        for name in ("hbar", "k_B", "m_nucleon"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be strictly positive")


# CODATA 2018; the nucleon mass is the free neutron mass.
CONSTANTS = PhysicalConstants(
    hbar=1.054571817e-34,
    k_B=1.380649e-23,
    m_nucleon=1.67492749804e-27,
)


def _require_positive(**values):
    for name, value in values.items():
        if not (isinstance(value, numbers.Real) and math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be a finite positive number, got {value!r}")


def cm3_per_s(value: float) -> float:
    """cm^3 s^-1 -> m^3 s^-1."""
    return value * 1e-6


def cm(value: float) -> float:
    """cm -> m."""
    return value * 1e-2


def lambda_from_gamma(gamma_coupling: float, r_C: float) -> float:
    """CSL collapse rate [s^-1] from the coupling gamma [m^3 s^-1] and r_C [m]."""
    _require_positive(gamma_coupling=gamma_coupling, r_C=r_C)
    return gamma_coupling / (8.0 * PI_32 * r_C**3)


def gamma_from_lambda(lambda_csl: float, r_C: float) -> float:
    """Inverse of :func:`lambda_from_gamma`."""
    _require_positive(lambda_csl=lambda_csl, r_C=r_C)
    return lambda_csl * 8.0 * PI_32 * r_C**3


@dataclass(frozen=True)
class CollapseParams:
    """The consistent triple (lambda, r_C, gamma).

    Build it with one of the ``from_*`` constructors; any two of the three
    quantities fix the third.
    """

    lambda_csl: float  # s^-1
    r_C: float  # m
    gamma_coupling: float  # m^3 s^-1

    def __post_init__(self):
        _require_positive(
            lambda_csl=self.lambda_csl, r_C=self.r_C, gamma_coupling=self.gamma_coupling
        )
        expected = lambda_from_gamma(self.gamma_coupling, self.r_C)
        if not math.isclose(self.lambda_csl, expected, rel_tol=1e-9):
            raise DomainError(
                "inconsistent collapse parameters: lambda != gamma / (8 pi^3/2 r_C^3)"
            )

    @classmethod
    def from_gamma(cls, gamma_coupling: float, r_C: float) -> CollapseParams:
        return cls(lambda_from_gamma(gamma_coupling, r_C), r_C, gamma_coupling)

    @classmethod
    def from_lambda(cls, lambda_csl: float, r_C: float) -> CollapseParams:
        return cls(lambda_csl, r_C, gamma_from_lambda(lambda_csl, r_C))

    @classmethod
    def from_lambda_gamma(cls, lambda_csl: float, gamma_coupling: float) -> CollapseParams:
        _require_positive(lambda_csl=lambda_csl, gamma_coupling=gamma_coupling)
        r_C = (gamma_coupling / (8.0 * PI_32 * lambda_csl)) ** (1.0 / 3.0)
        return cls(lambda_from_gamma(gamma_coupling, r_C), r_C, gamma_coupling)

    @classmethod
    def conventional(cls) -> CollapseParams:
        """gamma = 1e-30 cm^3/s, r_C = 1e-5 cm (lambda ~ 2.2e-17 s^-1)."""
        return cls.from_gamma(cm3_per_s(1e-30), cm(1e-5))

    def with_lambda(self, lambda_csl: float) -> CollapseParams:
        """Same r_C, different rate."""
        return CollapseParams.from_lambda(lambda_csl, self.r_C)


@dataclass(frozen=True)
class QmuplCoupling:
    """Position-localization coupling of the simplified (QMUPL) model, m^-2 s^-1."""

    lambda_q: float

    def __post_init__(self):
        # zero is allowed: it is the free-particle limit
        if not (isinstance(self.lambda_q, numbers.Real) and math.isfinite(self.lambda_q)
                and self.lambda_q >= 0):
            raise DomainError(f"lambda_q must be finite and non-negative, got {self.lambda_q!r}")


def qmupl_from_csl(lambda_csl: float, r_C: float) -> float:
    """Bridge a CSL rate to the QMUPL coupling: lambda_q = lambda / (2 r_C^2).

    This matches the small-displacement expansion of the single-nucleon CSL
    decay rate, lambda (1 - exp(-l^2/4 r_C^2)) ~ (lambda / 4 r_C^2) l^2, to the
    QMUPL decay rate (lambda_q / 2) l^2. Swap this function to change the
    convention everywhere.
    """
    _require_positive(lambda_csl=lambda_csl, r_C=r_C)
    return lambda_csl / (2.0 * r_C**2)
