"""Overflow-safe complex hyperbolic helpers.

Every function here is written in terms of exp(-2|Re z|) so that large
arguments saturate instead of overflowing, and in terms of expm1 so that
small arguments keep full relative precision.
"""

import cmath
import math

from collapsim.errors import SingularEvaluationError


def cexpm1(z: complex) -> complex:
    """exp(z) - 1 without cancellation for small |z|."""
    z = complex(z)
    x, y = z.real, z.imag
    if x > 700.0:
        return cmath.exp(z) - 1.0
    em1 = math.expm1(x)
    s = math.sin(0.5 * y)
    return complex(em1 * math.cos(y) - 2.0 * s * s, (em1 + 1.0) * math.sin(y))


def tanh(z: complex) -> complex:
    z = complex(z)
    if z.real < 0:
        return -tanh(-z)
    e = cexpm1(-2.0 * z)  # exp(-2z) - 1, |exp(-2z)| <= 1
    den = 2.0 + e
    if den == 0:
        raise SingularEvaluationError("tanh pole", z=z)
    return -e / den


def tanhc(z: complex) -> complex:
    """tanh(z)/z, equal to 1 at the origin."""
    z = complex(z)
    if abs(z) < 1e-3:
        z2 = z * z
        return 1.0 - z2 / 3.0 + 2.0 * z2 * z2 / 15.0 - 17.0 * z2 * z2 * z2 / 315.0
    return tanh(z) / z


def scaled_cosh(z: complex) -> complex:
    """cosh(z) * exp(-z) for Re z >= 0."""
    return 1.0 + 0.5 * cexpm1(-2.0 * complex(z))


def scaled_sinh(z: complex) -> complex:
    """sinh(z) * exp(-z) for Re z >= 0."""
    return -0.5 * cexpm1(-2.0 * complex(z))
