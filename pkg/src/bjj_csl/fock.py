"""Fixed-N two-mode Fock space.

Basis vectors are labelled by the right-well occupation ``m = 0..N``; the
left well holds the remaining ``N - m`` atoms. A density matrix entry
``(m, l)`` is ``<N-m, m| rho |N-l, l>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np


class DomainError(ValueError):
    """Input outside the domain where an operation is defined."""


class NumericalError(ArithmeticError):
    """Numerical failure: blow-up, non-convergence, non-finite values."""


@dataclass
class Tolerances:
    norm: float = 1e-12
    hermitian: float = 1e-12
    trace: float = 1e-10
    psd: float = 1e-10


DEFAULT_TOLERANCES = Tolerances()


class Mode(Enum):
    LEFT = "L"
    RIGHT = "R"


class Kind(Enum):
    CREATE = "create"
    ANNIHILATE = "annihilate"


@dataclass(frozen=True)
class LadderOp:
    mode: Mode
    kind: Kind

    def __repr__(self) -> str:
        dag = "†" if self.kind is Kind.CREATE else ""
        return f"a{dag}_{self.mode.value}"


a_L = LadderOp(Mode.LEFT, Kind.ANNIHILATE)
a_R = LadderOp(Mode.RIGHT, Kind.ANNIHILATE)
adag_L = LadderOp(Mode.LEFT, Kind.CREATE)
adag_R = LadderOp(Mode.RIGHT, Kind.CREATE)


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Pure state of ``n_total`` bosons; ``amplitudes[m]`` multiplies |N-m>_L |m>_R."""

    n_total: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_total < 0:
            raise DomainError(f"n_total must be non-negative, got {self.n_total}")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != self.n_total + 1:
            raise DomainError(
                f"expected {self.n_total + 1} amplitudes for N={self.n_total}, got {amps.shape[0]}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = True) -> "TwoModeState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0.0:
                raise DomainError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(amps.shape[0] - 1, amps)

    @classmethod
    def basis(cls, n_total: int, m: int) -> "TwoModeState":
        """Number state with ``m`` atoms on the right and ``n_total - m`` on the left."""
        if not 0 <= m <= n_total:
            raise DomainError(f"right occupation {m} outside 0..{n_total}")
        amps = np.zeros(n_total + 1, dtype=complex)
        amps[m] = 1.0
        return cls(n_total, amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "TwoModeState":
        return TwoModeState.from_amplitudes(self.amplitudes, normalize=True)

    def inner(self, other: "TwoModeState") -> complex:
        """<self|other>."""
        if other.n_total != self.n_total:
            raise DomainError("states live in different N sectors")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __eq__(self, other):
        if not isinstance(other, TwoModeState):
            return NotImplemented
        return self.n_total == other.n_total and np.array_equal(self.amplitudes, other.amplitudes)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """(N+1)x(N+1) density matrix in the right-occupation basis.

    Construction checks shape and hermiticity. Trace and positivity are
    checked by :meth:`validate`, because some channel outputs (the N-atom
    block under atom loss) deliberately carry trace below one.
    """

    n_total: int
    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        dim = self.n_total + 1
        if self.n_total < 0 or rho.shape != (dim, dim):
            raise DomainError(f"expected a {dim}x{dim} matrix for N={self.n_total}, got {rho.shape}")
        scale = max(1.0, float(np.max(np.abs(rho))) if rho.size else 1.0)
        if np.max(np.abs(rho - rho.conj().T)) > DEFAULT_TOLERANCES.hermitian * scale:
            raise DomainError("density matrix is not Hermitian")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @classmethod
    def from_state(cls, state: TwoModeState) -> "DensityMatrix":
        psi = state.amplitudes
        return cls(state.n_total, np.outer(psi, psi.conj()))

    @classmethod
    def mixture(cls, states: Sequence[TwoModeState], weights: Sequence[float] | None = None) -> "DensityMatrix":
        if not states:
            raise DomainError("mixture needs at least one state")
        n = states[0].n_total
        if weights is None:
            weights = [1.0 / len(states)] * len(states)
        rho = np.zeros((n + 1, n + 1), dtype=complex)
        for w, s in zip(weights, states):
            if s.n_total != n:
                raise DomainError("all states in a mixture must share N")
            rho += w * np.outer(s.amplitudes, s.amplitudes.conj())
        return cls(n, rho)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])

    def validate(self, tol: Tolerances | None = None, check_psd: bool = True) -> "DensityMatrix":
        """Raise :class:`DomainError` unless trace is 1 and (optionally) rho >= 0."""
        tol = tol or DEFAULT_TOLERANCES
        if abs(self.trace - 1.0) > tol.trace:
            raise DomainError(f"trace {self.trace} differs from 1 by more than {tol.trace}")
        if check_psd and self.min_eigenvalue() < -tol.psd:
            raise DomainError(f"density matrix has negative eigenvalue {self.min_eigenvalue()}")
        return self


def ladder_matrix(op: LadderOp, n_total: int) -> np.ndarray:
    """Matrix of ``op`` from the N sector to the N+-1 sector.

    Annihilating out of the vacuum sector gives a (0, 1) array, so operator
    products that pass through it collapse to zero.
    """
    m = np.arange(n_total + 1)
    if op.kind is Kind.CREATE:
        out = np.zeros((n_total + 2, n_total + 1))
        if op.mode is Mode.RIGHT:
            out[m + 1, m] = np.sqrt(m + 1)
        else:
            out[m, m] = np.sqrt(n_total - m + 1)
        return out
    out = np.zeros((n_total, n_total + 1))
    if n_total == 0:
        return out
    if op.mode is Mode.RIGHT:
        out[m[1:] - 1, m[1:]] = np.sqrt(m[1:])
    else:
        out[m[:-1], m[:-1]] = np.sqrt(n_total - m[:-1])
    return out


def ladder_apply(op: LadderOp, state: TwoModeState) -> TwoModeState:
    """Apply a single ladder operator; the result is not normalized."""
    if op.kind is Kind.ANNIHILATE and state.n_total == 0:
        raise DomainError("annihilation operator applied to the vacuum")
    shift = 1 if op.kind is Kind.CREATE else -1
    return TwoModeState(state.n_total + shift, ladder_matrix(op, state.n_total) @ state.amplitudes)


def _net_number_change(op_string: Sequence[LadderOp]) -> int:
    return sum(1 if op.kind is Kind.CREATE else -1 for op in op_string)


def operator_matrix(op_string: Sequence[LadderOp], n_total: int) -> np.ndarray:
    """Matrix of the ordered product ``op_string[0] @ op_string[1] @ ...`` on the N sector."""
    if _net_number_change(op_string) != 0:
        raise DomainError(f"operator string {list(op_string)} does not conserve atom number")
    mat = np.eye(n_total + 1)
    n = n_total
    for op in reversed(op_string):
        if n < 0:
            # an earlier annihilation emptied the sector
            return np.zeros((n_total + 1, n_total + 1))
        mat = ladder_matrix(op, n) @ mat
        n += 1 if op.kind is Kind.CREATE else -1
    return mat


def expectation(op_string: Sequence[LadderOp], rho: DensityMatrix) -> complex:
    """Tr[O rho] for a number-conserving product of ladder operators."""
    mat = operator_matrix(op_string, rho.n_total)
    return complex(np.sum(mat * rho.entries.T))


def number_operators(n_total: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal matrices of n_L and n_R on the N sector."""
    m = np.arange(n_total + 1, dtype=float)
    return np.diag(n_total - m), np.diag(m)


def random_density_matrix(n_total: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random valid density matrix (Ginibre construction) for tests and the validate command."""
    dim = n_total + 1
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(n_total, rho / np.trace(rho).real)


def random_state(n_total: int, rng: np.random.Generator) -> TwoModeState:
    amps = rng.normal(size=n_total + 1) + 1j * rng.normal(size=n_total + 1)
    return TwoModeState.from_amplitudes(amps)
