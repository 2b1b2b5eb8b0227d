import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import hbar

import oracles
from bjj_csl import observables as obs
from bjj_csl.dynamics import ModelParams, evolve_csl_analytic
from bjj_csl.fock import DensityMatrix, DomainError, random_density_matrix
from bjj_csl.kernels import WellGeometry
from bjj_csl.states import noon_state, phase_state

GEOM = WellGeometry(5e-6, 5e-7)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 7), seed=st.integers(0, 2**32 - 1))
def test_single_particle_dm_is_a_qubit_state(n, seed):
    rho1 = obs.single_particle_dm(random_density_matrix(n, np.random.default_rng(seed)))
    assert np.trace(rho1).real == pytest.approx(1.0)
    np.testing.assert_allclose(rho1, rho1.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(rho1)[0] >= -1e-12


@pytest.mark.parametrize("n", [1, 3, 6])
def test_k_particle_coherence_matches_full_space(n):
    rho = random_density_matrix(n, np.random.default_rng(n))
    for k in range(n + 1):
        expected = np.trace(oracles.k_particle_operator(n, k) @ rho.entries)
        assert obs.k_particle_coherence(rho, k) == pytest.approx(expected, abs=1e-10)
    assert obs.n_particle_coherence(rho) == pytest.approx(obs.k_particle_coherence(rho, n), rel=1e-12)
    with pytest.raises(DomainError):
        obs.k_particle_coherence(rho, n + 1)


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_noon_n_particle_coherence(n):
    rho = DensityMatrix.from_state(noon_state(n))
    assert obs.n_particle_coherence(rho) == pytest.approx(math.factorial(n) / 2)
    assert obs.phase_coherence(rho) == 0


def test_envelope_is_normalized_marginal():
    sigma_p = hbar / (2 * GEOM.std)
    p = np.linspace(-10 * sigma_p, 10 * sigma_p, 4001)
    env = obs.momentum_envelope(p, GEOM)
    assert np.trapezoid(env, p) == pytest.approx(1.0, rel=1e-9)
    assert np.trapezoid(env * p**2, p) == pytest.approx(sigma_p**2, rel=1e-9)


def test_phase_state_fringes():
    phi = 0.8
    rho = DensityMatrix.from_state(phase_state(6, phi))
    sigma_p = hbar / (2 * GEOM.std)
    p = np.linspace(-4 * sigma_p, 4 * sigma_p, 3001)
    dens = obs.momentum_density(rho, p, GEOM)
    assert np.trapezoid(dens, p) == pytest.approx(6.0, rel=1e-4)
    fit = obs.fringe_contrast(p, dens, GEOM, 6)
    assert fit.contrast == pytest.approx(1.0, abs=1e-10)
    assert fit.phase == pytest.approx(phi, abs=1e-10)
    assert obs.fringe_period(GEOM) == pytest.approx(2 * math.pi * hbar / 5e-6)


def test_noon_state_has_no_fringes():
    p = np.linspace(-3e-27, 3e-27, 501)
    fit = obs.fringe_contrast(p, obs.momentum_density(DensityMatrix.from_state(noon_state(4)), p, GEOM), GEOM, 4)
    assert fit.contrast < 1e-12


def test_contrast_decays_with_csl():
    p_params = ModelParams(5, 1, lambda_csl=0.3)
    rho = evolve_csl_analytic(DensityMatrix.from_state(phase_state(5, 0.0)), p_params, 2.0)
    p = np.linspace(-3e-27, 3e-27, 1001)
    fit = obs.fringe_contrast(p, obs.momentum_density(rho, p, GEOM), GEOM, 5)
    assert fit.contrast == pytest.approx(math.exp(-0.6), rel=1e-10)
