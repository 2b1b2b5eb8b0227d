"""Phase states, NOON states and superpositions of phase states."""
from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .fock import DomainError, TwoModeState


def _check_n(n_total: int) -> None:
    if n_total < 1:
        raise DomainError(f"state constructors need at least one atom, got N={n_total}")


def phase_state(n_total: int, phi: float) -> TwoModeState:
    """Atomic coherent state (a†_L + e^{i phi} a†_R)^N |0> / sqrt(N! 2^N).

    Amplitude m is sqrt(C(N, m)) e^{i m phi} / 2^{N/2}; the binomial weight is
    taken in log space so large N does not overflow.
    """
    _check_n(n_total)
    m = np.arange(n_total + 1)
    log_w = 0.5 * (gammaln(n_total + 1) - gammaln(m + 1) - gammaln(n_total - m + 1)) - 0.5 * n_total * np.log(2.0)
    amps = np.exp(log_w) * np.exp(1j * m * phi)
    return TwoModeState.from_amplitudes(amps)


def noon_state(n_total: int) -> TwoModeState:
    _check_n(n_total)
    amps = np.zeros(n_total + 1, dtype=complex)
    amps[0] = amps[-1] = 1.0 / np.sqrt(2.0)
    return TwoModeState(n_total, amps)


def superposition_state(n_total: int, phi: float, beta: float) -> TwoModeState:
    """(|phi> + e^{i beta} |phi + pi>) / sqrt(2), renormalized.

    The two phase states are orthogonal for every N >= 1, so renormalizing is
    a no-op up to rounding; it is kept so the constructor stays valid if the
    second phase offset is ever generalized.
    """
    _check_n(n_total)
    amps = phase_state(n_total, phi).amplitudes + np.exp(1j * beta) * phase_state(n_total, phi + np.pi).amplitudes
    return TwoModeState.from_amplitudes(amps)


def number_state(n_total: int, n_right: int) -> TwoModeState:
    return TwoModeState.basis(n_total, n_right)
