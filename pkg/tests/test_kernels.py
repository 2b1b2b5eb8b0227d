import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from bjj_csl.fock import DomainError, NumericalError
from bjj_csl.kernels import (
    ANALYTIC,
    CLOSED_FORM_APPROX,
    QUADRATURE,
    WellGeometry,
    gamma_bar,
    omega_bar,
    omega_bar_constant,
    sphere_kernel_F,
)


def test_density_is_normalized_with_quarter_sigma_variance():
    g = WellGeometry(1.0, 0.2)
    assert g.std == 0.1
    x = np.linspace(-1.5, 1.5, 301)
    pts = np.stack(np.meshgrid(x, x, x, indexing="ij"), -1)
    total = g.density(pts, "L").sum() * (x[1] - x[0]) ** 3
    assert total == pytest.approx(1.0, rel=1e-6)
    # 1/e^2 point of the density sits sigma away from the centre
    c = g.centers()[1]
    ratio = g.density(c + [0.2, 0, 0], "R") / g.density(c, "R")
    assert ratio == pytest.approx(math.exp(-2))


def test_geometry_validation():
    with pytest.raises(DomainError):
        WellGeometry(0.0, 1.0)
    with pytest.warns(UserWarning):
        WellGeometry(1.0, 0.8)


@pytest.mark.parametrize("d,sigma,r_c", [(5e-7, 2.5e-8, 1e-7), (1e-6, 1e-7, 1e-7), (2e-6, 4e-7, 1e-6), (1e-6, 2e-7, 2e-8)])
def test_quadrature_matches_analytic(d, sigma, r_c):
    g = WellGeometry(d, sigma)
    assert gamma_bar(g, r_c, QUADRATURE) == pytest.approx(gamma_bar(g, r_c, ANALYTIC), rel=1e-7)


@pytest.mark.parametrize("d,sigma,r_c", [(5e-7, 2.5e-8, 1e-7), (1e-6, 2e-7, 2e-7)])
def test_quadrature_matches_monte_carlo(d, sigma, r_c):
    rng = np.random.default_rng(11)
    mc = oracles.gamma_bar_monte_carlo(d, sigma / 2, r_c, rng)
    assert gamma_bar(WellGeometry(d, sigma), r_c) == pytest.approx(mc, abs=5e-3)


def test_cli_example_values():
    g = WellGeometry(0.5e-6, 25e-9)
    assert gamma_bar(g, 1e-7, CLOSED_FORM_APPROX) == pytest.approx(0.998, abs=5e-4)
    # finite width lowers the overlap by (1 + s^2/r_C^2)^{-3/2}
    expected = (1 + (12.5e-9 / 1e-7) ** 2) ** -1.5 * (1 - math.exp(-(0.5e-6**2) / (4 * (1e-14 + 12.5e-9**2))))
    assert gamma_bar(g, 1e-7) == pytest.approx(expected, rel=1e-8)


def test_point_well_limit_within_one_percent():
    # narrow wells compared with both d and r_C
    for d in np.geomspace(0.5e-6, 10e-6, 4):
        for r_c in np.geomspace(1e-8, 1e-6, 4):
            sigma = min(d, r_c) / 10
            g = WellGeometry(d, sigma)
            approx = gamma_bar(g, r_c, CLOSED_FORM_APPROX)
            assert abs(gamma_bar(g, r_c) - approx) <= 0.01 * approx


def test_gamma_bar_limits():
    g = WellGeometry(1e-6, 1e-8)
    assert gamma_bar(g, 1e-9, CLOSED_FORM_APPROX) == 1.0
    assert gamma_bar(g, 1e-2, QUADRATURE) == pytest.approx(1e-12 / (4e-4), rel=1e-3)
    with pytest.raises(DomainError):
        gamma_bar(g, 0.0)
    with pytest.raises(DomainError):
        gamma_bar(g, 1e-7, "simpson")


@settings(max_examples=30, deadline=None)
@given(
    d=st.floats(1e-7, 1e-5),
    frac=st.floats(0.01, 0.5),
    r_c=st.floats(1e-8, 1e-5),
)
def test_gamma_bar_in_unit_interval_and_monotone_in_d(d, frac, r_c):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g1 = gamma_bar(WellGeometry(d, frac * d), r_c, ANALYTIC)
        g2 = gamma_bar(WellGeometry(2 * d, frac * d), r_c, ANALYTIC)
    assert 0.0 <= g1 <= g2 <= 1.0


def test_sphere_kernel_at_origin():
    assert sphere_kernel_F(np.zeros(3)) == 4 * math.pi


@pytest.mark.parametrize("mag", [0.3, 2.0, 7.5, 19.0])
def test_sphere_kernel_against_quadrature(mag):
    direction = np.array([0.3, -0.5, 0.81])
    z = mag * direction / np.linalg.norm(direction)
    ref = oracles.sphere_integral(z)
    assert abs(sphere_kernel_F(z) - ref) <= 1e-6
    assert abs(ref.imag) < 1e-9


def test_omega_bar_constant_profile():
    g = WellGeometry(1e-6, 2e-7)
    k = 2 * math.pi / 780e-9
    val = omega_bar(g, lambda p: 3.0, k)
    assert val == pytest.approx(omega_bar_constant(g, 3.0, k), rel=1e-6)


def test_omega_bar_gaussian_beam_monte_carlo():
    g = WellGeometry(1e-6, 3e-7)
    k = 4e6
    beam = lambda p: 2.0 * np.exp(-np.sum(np.asarray(p) ** 2, axis=-1) / (1.5e-6) ** 2)
    rng = np.random.default_rng(5)
    n = 400_000
    y = g.centers()[0] + rng.normal(0, g.std, (n, 3))
    yl = g.centers()[0] + rng.normal(0, g.std, (n, 3))
    yr = g.centers()[1] + rng.normal(0, g.std, (n, 3))
    F = lambda a, b: 4 * np.pi * np.sinc(k * np.linalg.norm(a - b, axis=1) / np.pi)
    mc = np.mean(beam(y) * (beam(yl) * F(y, yl) - beam(yr) * F(y, yr)))
    assert omega_bar(g, beam, k) == pytest.approx(mc, rel=0.02)


def test_omega_bar_non_convergence():
    g = WellGeometry(1e-6, 2e-7)
    rough = lambda p: np.sign(np.sin(1e9 * np.asarray(p)[:, 0]))
    with pytest.raises(NumericalError):
        omega_bar(g, rough, 1e7, rtol=1e-14, atol=0.0, max_levels=2)
