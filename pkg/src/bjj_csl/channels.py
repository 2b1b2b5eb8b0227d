"""Laboratory decoherence channels and their effect on the two-mode density matrix.

Every number-basis dephasing process (CSL, Gaussian phase noise, spontaneous
emission, condensate/thermal scattering) acts as the same entrywise map
rho(m, l) -> exp(-c (m - l)^2) rho(m, l); only the strength c differs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.constants import hbar

from .dynamics import AtomLossNoJump, Dephasing  # noqa: F401  (re-exported channel descriptors)
from .fock import DensityMatrix, DomainError


@dataclass(frozen=True)
class GasParams:
    """Thermal-cloud and condensate parameters in SI units.

    Pass either ``coupling_g`` directly or ``scattering_length`` and ``mass``,
    from which g = 4 pi hbar^2 a_S / m.
    """

    n_therm: float = 0.0  # m^-3
    n_bec: float = 0.0  # m^-3
    n_therm_atoms: int = 1
    temperature_ratio: float = 0.0  # T / T_C
    coupling_g: float | None = None  # J m^3
    scattering_length: float | None = None  # m
    mass: float | None = None  # kg

    def __post_init__(self):
        if self.n_therm < 0 or self.n_bec < 0:
            raise DomainError("densities must be non-negative")
        if self.temperature_ratio < 0:
            raise DomainError("T/T_C must be non-negative")
        if self.coupling_g is None and (self.scattering_length is None or self.mass is None):
            raise DomainError("give coupling_g or both scattering_length and mass")

    @property
    def g(self) -> float:
        if self.coupling_g is not None:
            return self.coupling_g
        return 4 * math.pi * hbar**2 * self.scattering_length / self.mass


def linear_phase_noise(diffusion: float) -> Callable[[float], float]:
    """Delta^2(t) = D t."""
    if diffusion < 0:
        raise DomainError("phase diffusion constant must be non-negative")
    return lambda t: diffusion * t


@dataclass(frozen=True)
class ChannelRates:
    lambda_loss: float = 0.0  # s^-1
    lambda_dec: float = 0.0  # s^-1
    lambda_three_body: float = 0.0  # s^-1 per atom
    phase_noise_variance: Callable[[float], float] = field(default=lambda t: 0.0, compare=False)
    spont_rate_eff: float = 0.0  # s^-1

    def __post_init__(self):
        for name in ("lambda_loss", "lambda_dec", "lambda_three_body", "spont_rate_eff"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")


def rate_loss(gas: GasParams) -> float:
    """Lambda_loss ~ g^2 n_therm^3 / hbar^2."""
    return gas.g**2 * gas.n_therm**3 / hbar**2


def rate_dec(lambda_loss: float, n_therm_atoms: int) -> float:
    """Lambda_dec ~ Lambda_loss / N_therm."""
    if n_therm_atoms < 1:
        raise DomainError("need at least one thermal atom")
    return lambda_loss / n_therm_atoms


def thermal_atom_number(n_total: int, temperature_ratio: float) -> float:
    """Ideal harmonically trapped gas: N_therm = N (T/T_C)^3."""
    return n_total * temperature_ratio**3


def rate_three_body(a_s: float, mass: float, n_bec: float) -> float:
    """Per-atom three-body rate hbar a_S^4 n_BEC^2 / m."""
    if a_s < 0 or mass <= 0 or n_bec < 0:
        raise DomainError("three-body rate needs a_s >= 0, mass > 0, n_bec >= 0")
    return hbar * a_s**4 * n_bec**2 / mass


def apply_dephasing_map(rho: DensityMatrix, strength: float) -> DensityMatrix:
    """rho(m, l) -> exp(-c (m - l)^2) rho(m, l)."""
    if not strength >= 0:
        raise DomainError(f"dephasing strength must be non-negative, got {strength}")
    m = np.arange(rho.n_total + 1)
    return DensityMatrix(rho.n_total, np.exp(-strength * (m[:, None] - m[None, :]) ** 2) * rho.entries)


def csl_strength(csl_rate: float, t: float) -> float:
    """Map strength for CSL after time t, with csl_rate = lambda A^2 gamma_bar."""
    return csl_rate * t


def phase_noise_strength(variance: float) -> float:
    """Gaussian phase noise of variance Delta^2 acts with c = Delta^2 / 2."""
    if variance < 0:
        raise DomainError("phase noise variance must be non-negative")
    return variance / 2


def apply_phase_noise(rho: DensityMatrix, variance: float) -> DensityMatrix:
    return apply_dephasing_map(rho, phase_noise_strength(variance))


def spont_emission_rate(gamma_sp: float, delta: float, omega_bar: float) -> float:
    """Effective dephasing rate Gamma Omega_bar / (4 delta^2)."""
    if delta == 0:
        raise DomainError("spontaneous emission needs a non-zero detuning")
    return gamma_sp * omega_bar / (4 * delta**2)


def spont_emission_strength(gamma_sp: float, delta: float, omega_bar: float, t: float) -> float:
    return spont_emission_rate(gamma_sp, delta, omega_bar) * t


def coherence_decay_under_loss(n_total: int, lambda_loss: float, t: float) -> float:
    """Suppression exp(-Lambda_loss N t) of the N-particle coherence by one-body loss."""
    if n_total < 0 or lambda_loss < 0 or t < 0:
        raise DomainError("N, Lambda_loss and t must be non-negative")
    return math.exp(-lambda_loss * n_total * t)


def coherence_decay_three_body(n_total: int, rate_per_atom: float, t: float) -> float:
    """Suppression exp(-rate N t) of the N-particle coherence by three-body recombination."""
    if n_total < 0 or rate_per_atom < 0 or t < 0:
        raise DomainError("N, rate and t must be non-negative")
    return math.exp(-rate_per_atom * n_total * t)


class Scaling(Enum):
    """How a channel's N-particle coherence decay rate grows with N."""

    LINEAR_IN_N = "linear"
    CONSTANT_IN_N = "constant"


def channel_decay_rate(rate: float, scaling: Scaling, n_total: int) -> float:
    """Decay rate of the N-particle coherence caused by a channel."""
    return rate * n_total if scaling is Scaling.LINEAR_IN_N else rate


def csl_dominates(csl_rate: float, n_total: int, channel_rate: float, scaling: Scaling) -> bool:
    """True when CSL (rate lambda A^2 gamma_bar N^2) beats the channel on the N-particle coherence."""
    return csl_rate * n_total**2 >= channel_decay_rate(channel_rate, scaling, n_total)


def channel_rates(
    gas: GasParams,
    lambda_loss_override: float | None = None,
    phase_noise_variance: Callable[[float], float] | None = None,
    spont_rate_eff: float = 0.0,
) -> ChannelRates:
    """Collect the channel rates for a gas; a measured Lambda_loss may replace the estimate."""
    loss = rate_loss(gas) if lambda_loss_override is None else lambda_loss_override
    three = rate_three_body(gas.scattering_length, gas.mass, gas.n_bec) if gas.scattering_length and gas.mass else 0.0
    return ChannelRates(
        lambda_loss=loss,
        lambda_dec=rate_dec(loss, gas.n_therm_atoms),
        lambda_three_body=three,
        phase_noise_variance=phase_noise_variance or (lambda t: 0.0),
        spont_rate_eff=spont_rate_eff,
    )
