import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import hbar

import oracles
from bjj_csl import channels as ch
from bjj_csl.dynamics import ModelParams, evolve_csl_analytic
from bjj_csl.fock import DomainError, random_density_matrix

strengths = st.floats(min_value=0, max_value=5, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 2**32 - 1), c1=strengths, c2=strengths)
def test_dephasing_maps_compose_additively(n, seed, c1, c2):
    rho = random_density_matrix(n, np.random.default_rng(seed))
    twice = ch.apply_dephasing_map(ch.apply_dephasing_map(rho, c1), c2)
    np.testing.assert_allclose(twice.entries, ch.apply_dephasing_map(rho, c1 + c2).entries, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 2**32 - 1), c=strengths)
def test_dephasing_map_keeps_valid_state(n, seed, c):
    out = ch.apply_dephasing_map(random_density_matrix(n, np.random.default_rng(seed)), c)
    out.validate()
    assert out.min_eigenvalue() >= -1e-12


def test_csl_map_equals_analytic_propagator_at_u0():
    rho = random_density_matrix(5, np.random.default_rng(3))
    p = ModelParams(5, 10, lambda_csl=1e-3, gamma_bar=0.7)
    expected = evolve_csl_analytic(rho, p, 2.5).entries
    got = ch.apply_dephasing_map(rho, ch.csl_strength(p.csl_rate, 2.5)).entries
    np.testing.assert_allclose(got, expected, atol=1e-15)


@pytest.mark.parametrize("variance", [0.05, 0.7, 3.0])
def test_phase_noise_matches_phase_average(variance):
    rho = random_density_matrix(3, np.random.default_rng(8))
    ref = oracles.gaussian_phase_average(rho.entries, variance)
    np.testing.assert_allclose(ch.apply_phase_noise(rho, variance).entries, ref, atol=1e-10)


def test_linear_phase_noise():
    f = ch.linear_phase_noise(0.2)
    assert f(3.0) == pytest.approx(0.6)
    with pytest.raises(DomainError):
        ch.linear_phase_noise(-1)


def test_negative_strength_rejected():
    rho = random_density_matrix(2, np.random.default_rng(0))
    with pytest.raises(DomainError):
        ch.apply_dephasing_map(rho, -0.1)
    with pytest.raises(DomainError):
        ch.apply_phase_noise(rho, -1.0)


def test_gas_rates():
    a_s, m = 5.3e-9, 1.44e-25
    gas = ch.GasParams(n_therm=1e19, n_bec=1e20, n_therm_atoms=10, scattering_length=a_s, mass=m)
    g = 4 * math.pi * hbar**2 * a_s / m
    assert gas.g == pytest.approx(g)
    rates = ch.channel_rates(gas)
    assert rates.lambda_loss == pytest.approx(g**2 * 1e57 / hbar**2)
    assert rates.lambda_dec == pytest.approx(rates.lambda_loss / 10)
    assert rates.lambda_three_body == pytest.approx(hbar * a_s**4 * 1e40 / m)
    assert ch.channel_rates(gas, lambda_loss_override=4e-3).lambda_loss == 4e-3


def test_gas_params_need_coupling():
    with pytest.raises(DomainError):
        ch.GasParams(n_therm=1.0)
    with pytest.raises(DomainError):
        ch.GasParams(n_therm=-1.0, coupling_g=1.0)


def test_thermal_cloud_dephasing_worked_example():
    # N (T/T_C)^3 ~ 1e4 thermal atoms with a measured loss rate of 4e-3 /s
    n_therm = ch.thermal_atom_number(27 * 10**4, 1 / 3)
    assert n_therm == pytest.approx(1e4)
    assert ch.rate_dec(4e-3, round(n_therm)) == pytest.approx(4e-7)


def test_spontaneous_emission_rate():
    assert ch.spont_emission_rate(6e7, 1e12, 2e20) == pytest.approx(6e7 * 2e20 / 4e24)
    assert ch.spont_emission_strength(1.0, 2.0, 16.0, 3.0) == pytest.approx(3.0)
    with pytest.raises(DomainError):
        ch.spont_emission_rate(1.0, 0.0, 1.0)


def test_number_changing_decays():
    assert ch.coherence_decay_under_loss(10, 0.1, 2.0) == pytest.approx(math.exp(-2.0))
    assert ch.coherence_decay_three_body(10, 0.01, 5.0) == pytest.approx(math.exp(-0.5))


def test_dominance_scaling():
    # CSL grows as N^2: beats a linear channel once N >= rate / kappa
    assert ch.csl_dominates(1e-3, 1000, 1.0, ch.Scaling.LINEAR_IN_N)
    assert not ch.csl_dominates(1e-3, 999, 1.0, ch.Scaling.LINEAR_IN_N)
    assert ch.csl_dominates(1e-2, 10, 1.0, ch.Scaling.CONSTANT_IN_N)
    assert ch.channel_decay_rate(2.0, ch.Scaling.CONSTANT_IN_N, 50) == 2.0
