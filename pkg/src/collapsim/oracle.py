"""Independent numerical checks of the closed-form width dynamics.

Two routes that share nothing with :mod:`collapsim.dynamics` beyond complex
arithmetic and physical constants:

* direct adaptive integration of the Riccati equation
  d(alpha)/dt = -(i hbar / 2 M) [b^2 + (2 alpha + a)^2], and
* a time-sliced Gaussian path integral, whose interior points are integrated
  out exactly (Schur complement). Unlike the Riccati route this also handles
  the non-local, colored-noise kernel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from collapsim.errors import DomainError, IntegrationFailure, StructuralError
from collapsim.params import CONSTANTS

HBAR = CONSTANTS.hbar
M0 = CONSTANTS.m_nucleon


@dataclass(frozen=True)
class RiccatiProblem:
    a: complex  # m^-2, thermal offset (0 for white noise)
    b: complex  # m^-2
    n: float
    alpha0: complex
    t_end: float
    rel_tol: float = 1e-9

    def __post_init__(self):
        if not self.t_end >= 0:
            raise DomainError("t_end must be non-negative")
        if not 0 < self.rel_tol <= 1e-3:
            raise DomainError("rel_tol must lie in (0, 1e-3]")
        if not self.n > 0:
            raise DomainError("n must be positive")


def integrate_riccati(p: RiccatiProblem) -> complex:
    """alpha(t_end) by explicit Runge-Kutta (DOP853) with local tolerance rel_tol."""
    alpha0 = complex(p.alpha0)
    if p.t_end == 0:
        return alpha0
    scale = abs(alpha0) or 1.0
    a, b = complex(p.a) / scale, complex(p.b) / scale
    # time in units of the free-spreading time of the initial packet
    k = HBAR * scale / (2.0 * p.n * M0)

    def rhs(_, y):
        al = complex(y[0], y[1])
        d = -1j * k * (b * b + (2.0 * al + a) ** 2)
        return [d.real, d.imag]

    y0 = alpha0 / scale
    sol = solve_ivp(
        rhs,
        (0.0, p.t_end),
        [y0.real, y0.imag],
        method="DOP853",
        rtol=p.rel_tol,
        atol=p.rel_tol * 1e-3,
    )
    if sol.status != 0:
        raise IntegrationFailure(sol.message, last_t=float(sol.t[-1]))
    return complex(sol.y[0, -1], sol.y[1, -1]) * scale


def riccati_problem(alpha0, rate, mass, t_end, T=None, rel_tol=1e-9) -> RiccatiProblem:
    """Build a problem from the total localization rate R and mass M = n m0."""
    a = 0j if T is None else -1j * rate * HBAR / (2.0 * CONSTANTS.k_B * T)
    b = np.sqrt(complex(abs(a) ** 2, 2.0 * rate * mass / HBAR))
    return RiccatiProblem(a, complex(b), mass / M0, alpha0, t_end, rel_tol)


def _path_integral_once(alpha0, rate, mass, t, steps, cutoff):
    s = np.linspace(0.0, t, steps + 1)
    dt = t / steps
    w = np.full(steps + 1, dt)
    w[0] = w[-1] = dt / 2
    # exponent of the integrand is -q^T P q
    c = -1j * mass / (2.0 * HBAR * dt)
    main = np.full(steps + 1, 2.0 * c)
    main[0] = main[-1] = c
    P = np.diag(main) + np.diag(np.full(steps, -c), 1) + np.diag(np.full(steps, -c), -1)
    if cutoff is None:
        P = P + np.diag(rate * w)
    else:
        kern = 0.5 * cutoff * np.exp(-cutoff * np.abs(s[:, None] - s[None, :]))
        P = P + rate * kern * w[:, None] * w[None, :]
    P[0, 0] += alpha0
    inner = slice(0, steps)
    return P[steps, steps] - P[steps, inner] @ np.linalg.solve(P[inner, inner], P[inner, steps])


def path_integral_alpha(alpha0, rate, mass, t, cutoff=None, steps=1000) -> complex:
    """alpha_t from a sliced path integral, Richardson-extrapolated in the step.

    ``cutoff=None`` gives white noise; otherwise the noise correlation is
    (g/2) exp(-g |s - s'|). Accuracy is O(steps^-4) after extrapolation as
    long as g t / steps << 1.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    coarse = _path_integral_once(alpha0, rate, mass, t, steps, cutoff)
    fine = _path_integral_once(alpha0, rate, mass, t, 2 * steps, cutoff)
    return complex((4.0 * fine - coarse) / 3.0)


@dataclass(frozen=True)
class LimitGrid:
    """Cells (n, lambda_csl) at which colored noise is compared with white noise."""

    n_values: tuple
    lambda_values: tuple
    r_C: float = 1e-7
    sigma0: float = 5e-7
    t: float = 1e-2
    rate_exponent: float = 2.0
    cutoffs: tuple = field(default=(1e12, 1e13, 1e14, 1e15))

    @classmethod
    def fig2(cls, points=9):
        return cls(
            tuple(np.logspace(0, 8, points).tolist()),
            tuple(np.logspace(-20, 0, points).tolist()),
        )


def limit_check_colored(settings: LimitGrid, tolerance: float = 1e-4) -> dict:
    """Sup-norm relative spread deviation of colored from white noise per cutoff.

    The report never raises on a failed check: ``passed`` is False and the
    per-cutoff deviations show where convergence broke.
    """
    from collapsim.dynamics import Colored, White, spread_after
    from collapsim.params import qmupl_from_csl

    if not settings.n_values or not settings.lambda_values or not settings.cutoffs:
        raise StructuralError("limit check needs a non-empty grid and cutoff list")
    cutoffs = sorted(settings.cutoffs)
    worst = []
    for g in cutoffs:
        dev = 0.0
        for lam in settings.lambda_values:
            lq = qmupl_from_csl(lam, settings.r_C)
            for n in settings.n_values:
                args = (settings.sigma0, n, lq)
                w = spread_after(*args, White(), settings.t, settings.rate_exponent)
                c = spread_after(*args, Colored(g), settings.t, settings.rate_exponent)
                dev = max(dev, float(abs(c - w) / w))
        worst.append(dev)
    monotone = all(b < a for a, b in zip(worst, worst[1:]))
    converged = worst[-1] < tolerance
    return {
        "check": "colored_white_limit",
        "cutoffs": cutoffs,
        "max_rel_deviation": worst,
        "monotone": monotone,
        "converged": converged,
        "tolerance": tolerance,
        "passed": monotone and converged,
    }


def riccati_agreement(grid, sigma0=5e-7, rel_tol=1e-9, T=None) -> dict:
    """Compare closed-form alpha_t with integrate_riccati over (lambda_q, n, t) cells."""
    from collapsim.dynamics import GaussianState, QmuplCoupling, SystemSpec
    from collapsim.dynamics import alpha_finite_T, alpha_white

    state = GaussianState.from_spread(sigma0)
    worst = 0.0
    cells = 0
    for lq, n, t in grid:
        sys = SystemSpec(n, QmuplCoupling(lq))
        closed = alpha_white(state, sys, t) if T is None else alpha_finite_T(state, sys, T, t)
        numeric = integrate_riccati(
            riccati_problem(state.alpha, sys.collapse_rate, sys.mass, t, T, rel_tol)
        )
        worst = max(worst, float(abs(closed - numeric) / abs(numeric)))
        cells += 1
    return {
        "check": "riccati_white" if T is None else "riccati_finite_T",
        "cells": cells,
        "max_rel_deviation": worst,
        "temperature": T,
    }


def to_json(report) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"not JSON serializable: {obj!r}")
