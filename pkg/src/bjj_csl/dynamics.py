"""Time evolution of the two-mode density matrix under CSL and the Bose-Hubbard dimer.

Energies are passed as angular frequencies (U/hbar, J/hbar in rad/s), so hbar
never appears. The Hamiltonian is H = -J (a†_L a_R + h.c.) - U n_L n_R.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .fock import (
    DomainError,
    DensityMatrix,
    NumericalError,
    TwoModeState,
    adag_L,
    a_R,
    operator_matrix,
)
from .states import phase_state, superposition_state


@dataclass(frozen=True)
class ModelParams:
    n_total: int
    nucleons: int
    u_over_hbar: float = 0.0
    j_over_hbar: float = 0.0
    lambda_csl: float = 0.0  # s^-1
    r_c: float = 1e-7  # m
    gamma_bar: float = 1.0

    def __post_init__(self):
        if self.n_total < 1:
            raise DomainError(f"N must be >= 1, got {self.n_total}")
        if self.nucleons < 1:
            raise DomainError(f"nucleon number A must be >= 1, got {self.nucleons}")
        if not self.lambda_csl >= 0:
            raise DomainError(f"CSL rate must be non-negative, got {self.lambda_csl}")
        if not self.r_c > 0:
            raise DomainError(f"r_c must be positive, got {self.r_c}")
        if not 0.0 <= self.gamma_bar <= 1.0:
            raise DomainError(f"gamma_bar must lie in [0, 1], got {self.gamma_bar}")
        for name in ("u_over_hbar", "j_over_hbar"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @property
    def csl_rate(self) -> float:
        """lambda A^2 gamma_bar: damping rate of rho(m, l) per unit (m - l)^2."""
        return self.lambda_csl * self.nucleons**2 * self.gamma_bar


@dataclass(frozen=True)
class CoherenceSeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if t.shape != v.shape:
            raise DomainError("times and values must have equal lengths")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise DomainError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def normalized(self) -> np.ndarray:
        """Values divided by the t=0 (first) value."""
        return self.values / self.values[0]


@dataclass(frozen=True)
class Dephasing:
    """Double-commutator channel -(rate/2) sum_i [n_i, [n_i, rho]].

    Same form as CSL with lambda A^2 gamma_bar replaced by ``rate``; used for
    condensate/thermal scattering and any other number-basis dephasing.
    """

    rate: float


@dataclass(frozen=True)
class AtomLossNoJump:
    """No-jump part of one-body loss, -(rate/2) {n_L + n_R, rho}.

    Within the fixed-N block this damps every entry by exp(-rate N t): the
    output is the N-atom block whose trace is the survival probability.
    """

    rate: float


Channel = Dephasing | AtomLossNoJump


def hamiltonian(params: ModelParams) -> np.ndarray:
    n = params.n_total
    m = np.arange(n + 1, dtype=float)
    hop = operator_matrix([adag_L, a_R], n)
    return -params.j_over_hbar * (hop + hop.T) - params.u_over_hbar * np.diag((n - m) * m)


def _check_channels(channels: Sequence[Channel]) -> None:
    for ch in channels:
        if not isinstance(ch, (Dephasing, AtomLossNoJump)):
            raise DomainError(f"unknown channel descriptor {ch!r}")
        if not ch.rate >= 0:
            raise DomainError(f"channel rate must be non-negative, got {ch!r}")


def liouvillian(params: ModelParams, extra_channels: Sequence[Channel] = ()) -> sp.csr_matrix:
    """Sparse generator acting on row-major vec(rho), index m*(N+1) + l."""
    _check_channels(extra_channels)
    n = params.n_total
    dim = n + 1
    h = sp.csr_matrix(hamiltonian(params))
    eye = sp.identity(dim, format="csr")
    gen = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
    m = np.arange(dim)
    diff2 = ((m[:, None] - m[None, :]) ** 2).reshape(-1).astype(float)
    kappa = params.csl_rate + sum(ch.rate for ch in extra_channels if isinstance(ch, Dephasing))
    loss = sum(ch.rate for ch in extra_channels if isinstance(ch, AtomLossNoJump))
    gen = gen + sp.diags(-kappa * diff2 - loss * n)
    gen = sp.csr_matrix(gen)
    gen.eliminate_zeros()
    return gen


def default_dt(params: ModelParams, extra_channels: Sequence[Channel] = ()) -> float:
    """Step with dt * max(|U| N^2, kappa N^2, |J| N, loss N) = 1e-3."""
    n = params.n_total
    kappa = params.csl_rate + sum(ch.rate for ch in extra_channels if isinstance(ch, Dephasing))
    loss = sum(ch.rate for ch in extra_channels if isinstance(ch, AtomLossNoJump))
    scale = max(abs(params.u_over_hbar) * n**2, kappa * n**2, abs(params.j_over_hbar) * n, loss * n)
    return 1e-3 / scale if scale > 0 else math.inf


def _log1p_complex(w: np.ndarray) -> np.ndarray:
    """log(1 + w) accurate for small complex w."""
    re, im = w.real, w.imag
    return 0.5 * np.log1p(2 * re + re * re + im * im) + 1j * np.arctan2(im, 1 + re)


class _RK4Propagator:
    """Fixed-step classical RK4 for the linear autonomous system d vec/dt = L vec.

    For a constant linear generator one RK4 step is exactly the matrix
    polynomial I + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24, which is built once
    per step size. When L is diagonal (J = 0) the step matrix is diagonal and
    n steps are taken as the elementwise n-th power of its diagonal, evaluated
    in log space.
    """

    check_every = 1000

    def __init__(self, gen: sp.csr_matrix):
        self.gen = gen
        off = gen - sp.diags(gen.diagonal())
        off.eliminate_zeros()
        self.diagonal = off.nnz == 0
        self._cache: dict[float, object] = {}

    def _step(self, h: float):
        if h not in self._cache:
            if self.diagonal:
                # keep log of the step factor 1 + w; forming 1 + w directly
                # costs an ulp per step, which adds up over millions of steps
                z = h * self.gen.diagonal()
                w = z + z**2 / 2 + z**3 / 6 + z**4 / 24
                self._cache[h] = _log1p_complex(w)
            else:
                a = sp.csr_matrix(h * self.gen)
                a2 = a @ a
                a3 = a2 @ a
                a4 = a3 @ a
                eye = sp.identity(a.shape[0], format="csr", dtype=complex)
                self._cache[h] = sp.csr_matrix(eye + a + a2 / 2 + a3 / 6 + a4 / 24)
        return self._cache[h]

    def advance(self, vec: np.ndarray, h: float, steps: int, step_offset: int = 0) -> np.ndarray:
        if steps == 0:
            return vec
        step = self._step(h)
        if self.diagonal:
            with np.errstate(over="ignore", invalid="ignore"):
                out = vec * np.exp(steps * step)
            if not np.all(np.isfinite(out)):
                raise NumericalError(
                    f"non-finite values after {step_offset + steps} RK4 steps of size {h:.3e} s"
                )
            return out
        for i in range(steps):
            with np.errstate(over="ignore", invalid="ignore"):
                vec = step @ vec
            if (i + 1) % self.check_every == 0 or i + 1 == steps:
                if not np.all(np.isfinite(vec)):
                    raise NumericalError(
                        f"non-finite values at RK4 step {step_offset + i + 1} (h = {h:.3e} s)"
                    )
        return vec


def _n_steps(interval: float, dt: float) -> int:
    return max(1, math.ceil(interval / dt * (1 - 1e-12)))


def integrate_series(
    rho0: DensityMatrix,
    params: ModelParams,
    times: Sequence[float],
    dt: float | None = None,
    extra_channels: Sequence[Channel] = (),
) -> list[DensityMatrix]:
    """RK4 trajectory sampled at ``times`` (non-negative, strictly increasing).

    Each sampling interval is split into the smallest number of equal steps
    not exceeding ``dt``.
    """
    _check_rho(rho0, params)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise DomainError("times must be a non-empty 1-D sequence")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise DomainError("times must be non-negative and strictly increasing")
    gen = liouvillian(params, extra_channels)
    if dt is None:
        dt = default_dt(params, extra_channels)
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    prop = _RK4Propagator(gen)
    dim = params.n_total + 1
    vec = rho0.entries.reshape(-1).astype(complex)
    out = []
    t_prev = 0.0
    done = 0
    for t in times:
        interval = t - t_prev
        if interval > 0:
            steps = 1 if math.isinf(dt) else _n_steps(interval, dt)
            vec = prop.advance(vec, interval / steps, steps, done)
            done += steps
        rho = vec.reshape(dim, dim)
        out.append(DensityMatrix(params.n_total, 0.5 * (rho + rho.conj().T)))
        t_prev = t
    return out


def integrate_master_equation(
    rho0: DensityMatrix,
    params: ModelParams,
    t: float,
    dt: float | None = None,
    extra_channels: Sequence[Channel] = (),
) -> DensityMatrix:
    """Integrate the CSL master equation (with hopping and extra channels) to time ``t``.

    Works for any J. With J = 0 it must agree with :func:`evolve_csl_analytic`.
    """
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    step = default_dt(params, extra_channels) if dt is None else dt
    if not step > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if dt is not None and dt > t:
        raise DomainError(f"dt = {dt} exceeds the integration time t = {t}")
    return integrate_series(rho0, params, [t], dt=step, extra_channels=extra_channels)[0]


def _check_rho(rho: DensityMatrix, params: ModelParams) -> None:
    if rho.n_total != params.n_total:
        raise DomainError(f"density matrix has N={rho.n_total} but params have N={params.n_total}")


def evolve_csl_analytic(rho0: DensityMatrix, params: ModelParams, t: float) -> DensityMatrix:
    """Exact J = 0 solution, entrywise:

    rho(m, l, t) = exp(i U t (l + m - N)(l - m)) exp(-lambda A^2 gamma_bar t (m - l)^2) rho(m, l, 0)
    """
    if params.j_over_hbar != 0:
        raise DomainError("the analytic propagator requires J = 0; use integrate_master_equation")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    _check_rho(rho0, params)
    n = params.n_total
    m = np.arange(n + 1)[:, None]
    l = np.arange(n + 1)[None, :]
    factor = np.exp(1j * params.u_over_hbar * t * (l + m - n) * (l - m) - params.csl_rate * t * (m - l) ** 2)
    return DensityMatrix(n, factor * rho0.entries)


def phase_coherence_closed_form(params: ModelParams, phi: float, t: float) -> complex:
    """<a†_L a_R>_t for a phase state at J = 0: N e^{i phi}/2 cos^{N-1}(U t) e^{-lambda A^2 gamma_bar t}."""
    if params.j_over_hbar != 0:
        raise DomainError("closed-form phase coherence requires J = 0")
    n = params.n_total
    return complex(
        n * np.exp(1j * phi) / 2 * np.cos(params.u_over_hbar * t) ** (n - 1) * np.exp(-params.csl_rate * t)
    )


def cross_coherence_closed_form(n_total: int, k: int, phi: float, u_over_hbar: float, t: float) -> complex:
    """<phi| e^{-iUt n_L n_R} a†_L^k a_R^k e^{iUt n_L n_R} |phi + pi> at J = 0.

    Equals N!/((N-k)! 2^k) (-1)^k e^{i k phi} i^{N-k} sin^{N-k}(U k t). At t = 0
    it vanishes for k < N and is (-1)^N N! e^{i N phi}/2^N for k = N.
    """
    if not 0 <= k <= n_total:
        raise DomainError(f"k must lie in 0..N={n_total}, got {k}")
    log_pref = math.lgamma(n_total + 1) - math.lgamma(n_total - k + 1) - k * math.log(2.0)
    s = math.sin(u_over_hbar * k * t)
    return complex(
        math.exp(log_pref) * (-1) ** k * np.exp(1j * phi * k) * 1j ** (n_total - k) * s ** (n_total - k)
    )


@dataclass(frozen=True)
class CatFormation:
    fidelity: float
    beta: float
    t2: float
    evolved: TwoModeState = field(repr=False)


def kerr_cat_formation_check(n_total: int, phi: float, u_over_hbar: float) -> CatFormation:
    """Evolve |phi> under -U n_L n_R for t2 = pi/(2|U|) and compare with the best-matching cat.

    The best beta maximizes |<S(beta)|psi>| with S(beta) = (|phi> + e^{i beta}|phi+pi>)/sqrt(2);
    writing a = <phi|psi>, b = <phi+pi|psi> it is beta = arg b - arg a.
    """
    if u_over_hbar == 0:
        raise DomainError("cat formation needs a non-zero interaction U")
    if n_total < 2:
        raise DomainError("cat formation needs N >= 2")
    t2 = math.pi / (2 * abs(u_over_hbar))
    params = ModelParams(n_total=n_total, nucleons=1, u_over_hbar=u_over_hbar)
    psi0 = phase_state(n_total, phi)
    psi = TwoModeState.from_amplitudes(expm(-1j * hamiltonian(params) * t2) @ psi0.amplitudes)
    a = phase_state(n_total, phi).inner(psi)
    b = phase_state(n_total, phi + math.pi).inner(psi)
    beta = float(np.angle(b) - np.angle(a)) % (2 * math.pi)
    fidelity = abs(superposition_state(n_total, phi, beta).inner(psi)) ** 2
    return CatFormation(fidelity=float(fidelity), beta=beta, t2=t2, evolved=psi)
