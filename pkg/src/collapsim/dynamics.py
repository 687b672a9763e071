"""Closed-form width dynamics of Gaussian wave packets under collapse noise.

A packet exp[-alpha (x - x_bar)^2 + i k_bar x + c] keeps its Gaussian form;
only the complex width parameter alpha evolves deterministically. Three noise
models are covered: white (simplified CSL / QMUPL), a finite-temperature
dissipative variant, and exponentially correlated (colored) noise.

All evaluators work with two derived quantities of the system: its inertial
mass M = n m0 and its total localization rate R = lambda_q * n**rate_exponent
(m^-2 s^-1). With rate_exponent = 2 the collapse strength grows as n^2, as
for a body smaller than r_C.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

import mpmath

from collapsim import hyperbolic
from collapsim.errors import DomainError, InvalidStateError, SingularEvaluationError
from collapsim.params import CONSTANTS, QmuplCoupling

HBAR = CONSTANTS.hbar
K_B = CONSTANTS.k_B
M0 = CONSTANTS.m_nucleon


def spread(alpha: complex) -> float:
    """Position standard deviation of the packet, 1 / (2 sqrt(Re alpha))."""
    re = complex(alpha).real
    if not re > 0:
        raise InvalidStateError(f"Re(alpha) must be positive, got {re!r}")
    return 0.5 / math.sqrt(re)


def alpha_from_spread(sigma: float) -> float:
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    return 0.25 / sigma**2


@dataclass(frozen=True)
class GaussianState:
    alpha: complex  # m^-2
    x_bar: float = 0.0  # m
    k_bar: float = 0.0  # m^-1

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        if not (self.alpha.real > 0 and math.isfinite(abs(self.alpha))):
            raise InvalidStateError(f"not normalizable: alpha={self.alpha!r}")

    @classmethod
    def from_spread(cls, sigma: float, x_bar: float = 0.0, k_bar: float = 0.0):
        return cls(alpha_from_spread(sigma), x_bar, k_bar)

    @property
    def sigma(self) -> float:
        return spread(self.alpha)


@dataclass(frozen=True)
class White:
    pass


@dataclass(frozen=True)
class FiniteTemperature:
    T: float  # K

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise DomainError(f"temperature must be positive, got {self.T!r}")


@dataclass(frozen=True)
class Colored:
    cutoff: float  # s^-1

    def __post_init__(self):
        if not (math.isfinite(self.cutoff) and self.cutoff > 0):
            raise DomainError(f"cutoff must be positive, got {self.cutoff!r}")


NoiseModel = Union[White, FiniteTemperature, Colored]


@dataclass(frozen=True)
class SystemSpec:
    n: float
    coupling: QmuplCoupling
    rate_exponent: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.n) and self.n > 0):
            raise DomainError(f"n must be positive, got {self.n!r}")

    @property
    def mass(self) -> float:
        return self.n * M0

    @property
    def collapse_rate(self) -> float:
        return self.coupling.lambda_q * self.n**self.rate_exponent


def _check_time(t):
    if not (math.isfinite(t) and t >= 0):
        raise DomainError(f"t must be finite and non-negative, got {t!r}")


# -- white and finite-temperature noise -------------------------------------


def thermal_shift(rate: float, T: float | None) -> complex:
    """The imaginary offset a = -i R hbar / (2 k_B T); zero at infinite T."""
    if T is None:
        return 0j
    return -1j * rate * HBAR / (2.0 * K_B * T)


def riccati_b(rate: float, mass: float, a: complex = 0j) -> complex:
    """b = sqrt(|a|^2 + 2 i R M / hbar), principal branch."""
    return cmath.sqrt(abs(a) ** 2 + 2j * rate * mass / HBAR)


def _alpha_tanh(alpha0: complex, a: complex, b: complex, mass: float, t: float) -> complex:
    # alpha_t = -(a + i b tanh(w t + kappa)) / 2 with tanh(kappa) = i s / b,
    # s = 2 alpha0 + a. The tanh addition theorem removes kappa, and writing
    # tanh(w t) / b = (hbar t / M) tanhc(w t) keeps the b -> 0 limit finite.
    s = 2.0 * alpha0 + a
    h = (HBAR * t / mass) * hyperbolic.tanhc(HBAR * b * t / mass)
    den = 1.0 + 1j * s * h
    if abs(den) <= 1e-14 * (1.0 + abs(s * h)):
        raise SingularEvaluationError("Riccati solution has a pole", t=t, alpha0=alpha0, b=b)
    alpha = -0.5 * (a + (1j * b * b * h - s) / den)
    if not alpha.real > 0:
        raise SingularEvaluationError("evaluation left the normalizable region", t=t, alpha=alpha)
    return alpha


def alpha_white(state0: GaussianState, sys: SystemSpec, t: float) -> complex:
    """alpha_t for white noise: the infinite-temperature limit a -> 0."""
    _check_time(t)
    b = riccati_b(sys.collapse_rate, sys.mass)
    return _alpha_tanh(state0.alpha, 0j, b, sys.mass, t)


def alpha_finite_T(state0: GaussianState, sys: SystemSpec, T: float, t: float) -> complex:
    """alpha_t for thermal noise at temperature T (dissipative model)."""
    _check_time(t)
    if not (T > 0):
        raise DomainError(f"temperature must be positive, got {T!r}")
    rate = sys.collapse_rate
    a = thermal_shift(rate, T)
    return _alpha_tanh(state0.alpha, a, riccati_b(rate, sys.mass, a), sys.mass, t)


# -- colored noise -----------------------------------------------------------


class _FloatOps:
    sqrt = staticmethod(cmath.sqrt)
    exp = staticmethod(cmath.exp)
    expm1 = staticmethod(hyperbolic.cexpm1)

    @staticmethod
    def num(x):
        return complex(x)


class _MpOps:
    sqrt = staticmethod(mpmath.sqrt)
    exp = staticmethod(mpmath.exp)
    expm1 = staticmethod(mpmath.expm1)

    @staticmethod
    def num(x):
        return mpmath.mpc(x)


def _acc(terms):
    """Sum of terms plus the largest term magnitude (for cancellation checks)."""
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total, max(abs(term) for term in terms)


def _colored_core(rate, mass, cutoff, t, alpha0, ops):
    """Evaluate the colored-noise map alpha0 -> alpha_t with backend ``ops``.

    Quantities are made dimensionless with the cutoff g (upsilon = g u,
    zeta = g^2 z, all coefficients scale as g^6) and every hyperbolic
    product is divided by exp(x_+ + x_-), x_k = u_k g t, so nothing overflows.
    Returns (alpha, worst term-to-result magnitude ratio).
    """
    one = ops.num(1)
    eps = ops.num(8 * HBAR * rate / mass) / ops.num(cutoff) ** 2
    z = ops.sqrt(one - 1j * eps)
    u = {1: ops.sqrt((one - z) / 2), -1: ops.sqrt((one + z) / 2)}
    A = {k: u[k] ** 3 * (u[k] ** 2 - k * z) for k in (1, -1)}
    B = {k: u[k] ** 2 * (u[k] ** 4 - k * z) for k in (1, -1)}
    c = u[1] ** 3 * u[-1] ** 3
    D = {k: -(u[k] ** 3) * u[-k] ** 2 for k in (1, -1)}

    gt = ops.num(cutoff) * ops.num(t)
    x = {k: u[k] * gt for k in (1, -1)}
    em = {k: ops.exp(-x[k]) for k in (1, -1)}
    ch = {k: 1 + ops.expm1(-2 * x[k]) / 2 for k in (1, -1)}
    sh = {k: -ops.expm1(-2 * x[k]) / 2 for k in (1, -1)}
    both = em[1] * em[-1]

    num_a, num_b, theta = [], [], [2 * c * both]
    for k in (1, -1):
        kb = -k
        num_a += [
            u[k] * A[kb] * ch[kb] * ch[k],
            u[k] * B[kb] * sh[kb] * ch[k],
            u[k] * D[k] * sh[kb] * sh[k],
            -u[k] * c * ch[kb] * sh[k],
            u[k] * D[kb] * both,
        ]
        num_b += [
            u[k] * A[kb] * ch[kb] * em[k],
            u[k] * B[kb] * sh[kb] * em[k],
            u[k] * D[kb] * ch[k] * em[kb],
            -u[k] * c * sh[k] * em[kb],
        ]
        theta += [
            A[kb] * ch[kb] * sh[k],
            B[kb] * sh[kb] * sh[k],
            D[k] * sh[kb] * ch[k],
            -c * ch[kb] * ch[k],
        ]
    th, th_max = _acc(theta)
    na, na_max = _acc(num_a)
    nb, nb_max = _acc(num_b)
    if th == 0:
        raise SingularEvaluationError("Theta vanishes", t=t, cutoff=cutoff, rate=rate)
    scale = ops.num(mass * cutoff / HBAR)
    cal_a = -0.5j * scale * na / th
    cal_b = -1j * scale * nb / th
    den = ops.num(alpha0) + cal_a
    if den == 0:
        raise SingularEvaluationError("alpha0 + A_t vanishes", t=t, cutoff=cutoff, rate=rate)
    corr = cal_b * cal_b / (4 * den)
    alpha = cal_a - corr
    if alpha == 0:
        raise SingularEvaluationError("alpha_t vanishes", t=t, cutoff=cutoff, rate=rate)

    def ratio(total, biggest):
        return biggest / abs(total) if total != 0 else math.inf

    worst = max(
        ratio(th, th_max),
        ratio(na, na_max),
        ratio(nb, nb_max),
        ratio(alpha, max(abs(cal_a), abs(corr))),
    )
    return alpha, float(worst)


_FLOAT_DIGITS = 15
_TARGET_DIGITS = 13


def _digits_lost(worst):
    return math.log10(worst) if worst > 1 else 0.0


def _alpha_colored_raw(alpha0, rate, mass, cutoff, t):
    """Float evaluation, escalated to mpmath when cancellation eats precision."""
    try:
        alpha, worst = _colored_core(rate, mass, cutoff, t, alpha0, _FloatOps)
    except SingularEvaluationError:
        worst = math.inf
    lost = _digits_lost(worst)
    if lost <= _FLOAT_DIGITS - _TARGET_DIGITS:
        return complex(alpha)
    dps = int(_TARGET_DIGITS + lost + 10) if math.isfinite(lost) else 60
    for _ in range(6):
        with mpmath.workdps(dps):
            try:
                alpha_mp, worst = _colored_core(rate, mass, cutoff, t, alpha0, _MpOps)
            except SingularEvaluationError:
                worst = math.inf
            if dps - _digits_lost(worst) >= _TARGET_DIGITS + 5:
                return complex(alpha_mp)
        dps *= 2
    raise SingularEvaluationError(
        "colored-noise evaluation did not reach target precision", t=t, cutoff=cutoff, rate=rate
    )


def alpha_colored(state0: GaussianState, sys: SystemSpec, cutoff: float, t: float) -> complex:
    """alpha_t for noise with correlation (g/2) exp(-g |t - s|), g = cutoff.

    At t = 0 the propagator coefficients diverge; the returned value there is
    their limit, alpha0.
    """
    _check_time(t)
    if not (math.isfinite(cutoff) and cutoff > 0):
        raise DomainError(f"cutoff must be positive, got {cutoff!r}")
    if t == 0:
        return state0.alpha
    if sys.collapse_rate == 0:
        return alpha_white(state0, sys, t)  # free evolution, noise spectrum irrelevant
    alpha = _alpha_colored_raw(state0.alpha, sys.collapse_rate, sys.mass, cutoff, t)
    if not alpha.real > 0:
        raise SingularEvaluationError(
            "evaluation left the normalizable region", t=t, cutoff=cutoff, alpha=alpha
        )
    return alpha


def evolve(state0: GaussianState, sys: SystemSpec, model: NoiseModel, t: float) -> complex:
    """alpha_t under any of the three noise models."""
    if isinstance(model, White):
        return alpha_white(state0, sys, t)
    if isinstance(model, FiniteTemperature):
        return alpha_finite_T(state0, sys, model.T, t)
    if isinstance(model, Colored):
        return alpha_colored(state0, sys, model.cutoff, t)
    raise TypeError(f"unknown noise model {model!r}")


def spread_after(
    sigma0: float, n: float, lambda_q: float, model: NoiseModel, t: float, rate_exponent: float = 2.0
) -> float:
    """sigma_t for a packet of initial width sigma0 (centred, at rest)."""
    sys = SystemSpec(n, QmuplCoupling(lambda_q), rate_exponent)
    return spread(evolve(GaussianState.from_spread(sigma0), sys, model, t))
