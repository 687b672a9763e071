"""Scaling audit: each formula responds to scaled inputs with its documented power."""

import math

import numpy as np
import pytest

from collapsim import dynamics as d
from collapsim.params import CollapseParams, QmuplCoupling, lambda_from_gamma, qmupl_from_csl
from collapsim.percept import threshold_particle_count
from collapsim.rates import BranchConfiguration, gamma_pairwise


def power(f, x, k=10.0):
    return math.log(f(k * x) / f(x)) / math.log(k)


def test_lambda_scales_as_rc_minus_three():
    assert power(lambda rc: lambda_from_gamma(1e-36, rc), 1e-7) == pytest.approx(-3, abs=1e-12)
    assert power(lambda g: lambda_from_gamma(g, 1e-7), 1e-36) == pytest.approx(1, abs=1e-12)


def test_bridge_scales_as_rc_minus_two():
    assert power(lambda rc: qmupl_from_csl(1.0, rc), 1e-7) == pytest.approx(-2, abs=1e-12)


def test_gamma_linear_in_lambda_and_saturated_length_free():
    pts = np.zeros((1, 3))

    def rate(lam, r_C=1e-7):
        cfg = BranchConfiguration.rigid_displacement(pts, [100 * r_C, 0, 0])
        return gamma_pairwise(cfg, CollapseParams.from_lambda(lam, r_C))

    assert power(rate, 1e-10) == pytest.approx(1, abs=1e-12)
    # at fixed lambda a fully separated pair does not care about r_C
    assert rate(1.0, 1e-7) == pytest.approx(rate(1.0, 1e-6), rel=1e-12)


def test_threshold_scales_as_root():
    ratio = threshold_particle_count(1e-12, 0.2, 200) / threshold_particle_count(1e-12, 0.1, 100)
    # doubling both t and the criterion leaves the count unchanged
    assert ratio == 1.0
    assert power(lambda c: threshold_particle_count(1e-20, 1.0, c), 100.0) == pytest.approx(0.5, abs=1e-6)


def test_stationary_width_scaling():
    # deep in the collapse regime sigma ~ (R M)^(-1/4) with R = lambda_q n^2, M ~ n
    def sigma(lq, n=1e6):
        s = d.SystemSpec(n, QmuplCoupling(lq))
        return d.spread(d.alpha_white(d.GaussianState.from_spread(5e-7), s, 10.0))

    assert power(sigma, 1e16) == pytest.approx(-0.25, abs=1e-3)
    assert power(lambda n: sigma(1e16, n), 1e6) == pytest.approx(-0.75, abs=1e-3)


def test_free_spread_scales_with_mass():
    # far beyond the spreading time sigma ~ hbar t / (2 M sigma0)
    def sigma(n):
        s = d.SystemSpec(n, QmuplCoupling(0.0))
        return d.spread(d.alpha_white(d.GaussianState.from_spread(1e-9), s, 1.0))

    assert power(sigma, 1.0) == pytest.approx(-1, abs=1e-6)
