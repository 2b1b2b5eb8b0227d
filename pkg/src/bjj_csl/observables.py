"""Readouts: one-body density matrix, phase and N-particle coherences, momentum fringes."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar

from .fock import DensityMatrix, DomainError, LadderOp, adag_L, adag_R, a_L, a_R, expectation
from .kernels import WellGeometry


def single_particle_dm(rho: DensityMatrix) -> np.ndarray:
    """(1/N) [[<n_L>, <a†_L a_R>], [<a†_R a_L>, <n_R>]]."""
    n = rho.n_total
    if n == 0:
        raise DomainError("the one-body density matrix needs N >= 1")
    return (
        np.array(
            [
                [expectation([adag_L, a_L], rho), expectation([adag_L, a_R], rho)],
                [expectation([adag_R, a_L], rho), expectation([adag_R, a_R], rho)],
            ]
        )
        / n
    )


def phase_coherence(rho: DensityMatrix) -> complex:
    """<a†_L a_R>."""
    return expectation([adag_L, a_R], rho)


def k_particle_coherence(rho: DensityMatrix, k: int) -> complex:
    """<a†_L^k a_R^k>."""
    if not 0 <= k <= rho.n_total:
        raise DomainError(f"k must lie in 0..N={rho.n_total}")
    ops: list[LadderOp] = [adag_L] * k + [a_R] * k
    return expectation(ops, rho)


def n_particle_coherence(rho: DensityMatrix) -> complex:
    """<a†_L^N a_R^N> = N! rho(N, 0): the corner element that separates cats from mixtures."""
    n = rho.n_total
    return complex(math.factorial(n) * rho.entries[n, 0])


def momentum_envelope(p_x, geom: WellGeometry) -> np.ndarray:
    """|psi_L(p_x)|^2 marginalised over p_y, p_z; normalized to unit integral over p_x.

    A position density of standard deviation s has momentum standard deviation hbar/(2 s).
    """
    sigma_p = hbar / (2 * geom.std)
    p = np.asarray(p_x, dtype=float)
    return np.exp(-0.5 * (p / sigma_p) ** 2) / (math.sqrt(2 * math.pi) * sigma_p)


def momentum_density(rho: DensityMatrix, p_x, geom: WellGeometry) -> np.ndarray:
    """N |psi_L(p)|^2 {1 + (2/N) Re(exp(-i d p_x / hbar) <a†_L a_R>)} along p_x."""
    n = rho.n_total
    p = np.asarray(p_x, dtype=float)
    coh = phase_coherence(rho)
    fringe = 1 + (2 / n) * np.real(np.exp(-1j * geom.separation_d * p / hbar) * coh)
    return n * momentum_envelope(p, geom) * fringe


@dataclass(frozen=True)
class FringeFit:
    contrast: float
    phase: float


def fringe_contrast(p_x, density, geom: WellGeometry, n_total: int) -> FringeFit:
    """Fit density = N env (1 + a cos(d p/hbar) + b sin(d p/hbar)) by linear least squares.

    Contrast is sqrt(a^2 + b^2); for a phase state it is 1 and the phase is phi.
    """
    p = np.asarray(p_x, dtype=float)
    y = np.asarray(density, dtype=float)
    base = n_total * momentum_envelope(p, geom)
    theta = geom.separation_d * p / hbar
    design = np.stack([base * np.cos(theta), base * np.sin(theta)], axis=1)
    (a, b), *_ = np.linalg.lstsq(design, y - base, rcond=None)
    return FringeFit(contrast=float(math.hypot(a, b)), phase=float(math.atan2(b, a)))


def fringe_period(geom: WellGeometry) -> float:
    """Period of the interference pattern in p_x (kg m/s)."""
    return 2 * math.pi * hbar / geom.separation_d
