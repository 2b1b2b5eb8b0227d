"""Exclusion curves in the (lambda, r_C) plane and atom-number thresholds.

A curve gives, for each r_C, the smallest collapse rate whose CSL damping
exp(-lambda N^2 A^2 gamma_bar t) would be visible after a coherence time t.
Rates strictly above the curve are excluded.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._output import csv_text, json_text
from .channels import Scaling
from .fock import DomainError
from .kernels import CLOSED_FORM_APPROX, WellGeometry, gamma_bar

# Proposed parameter values from the collapse-model literature (external data, overlay only).
REFERENCE_POINTS = {
    "standard rate": {"r_c_m": 1e-7, "lambda_per_s": 1e-16},
    "standard rate, nucleon-scaled": {"r_c_m": 1e-7, "lambda_per_s": 1e-17},
    "enhanced rate, r_C=1e-7 m": {"r_c_m": 1e-7, "lambda_per_s": 1e-8, "log10_spread": 2},
    "enhanced rate, r_C=1e-6 m": {"r_c_m": 1e-6, "lambda_per_s": 1e-6, "log10_spread": 2},
}


@dataclass(frozen=True)
class ExclusionCurve:
    r_c_grid: np.ndarray
    lambda_bound: np.ndarray
    label: str

    def __post_init__(self):
        r = np.asarray(self.r_c_grid, dtype=float)
        lam = np.asarray(self.lambda_bound, dtype=float)
        if r.shape != lam.shape or r.ndim != 1:
            raise DomainError("r_c_grid and lambda_bound must be 1-D with equal lengths")
        if r.size > 1 and np.any(np.diff(r) <= 0):
            raise DomainError("r_c_grid must be strictly increasing")
        if np.any(~(lam > 0)):
            raise DomainError("lambda bounds must be positive")
        object.__setattr__(self, "r_c_grid", r)
        object.__setattr__(self, "lambda_bound", lam)

    def excludes(self, r_c: float, lam: float) -> bool:
        """Is (r_c, lambda) strictly above the curve (log-log interpolation)?

        Points within 1e-12 relative of the curve count as on it, which absorbs
        the log/exp round trip at grid nodes.
        """
        bound = np.exp(np.interp(np.log(r_c), np.log(self.r_c_grid), np.log(self.lambda_bound)))
        return bool(lam > bound * (1 + 1e-12))

    def rows(self):
        return [(float(r), float(b), self.label) for r, b in zip(self.r_c_grid, self.lambda_bound)]


def curves_to_csv(curves: Sequence[ExclusionCurve], params: dict | None = None) -> str:
    rows = [row for c in curves for row in c.rows()]
    return csv_text(params or {}, ["r_c_m", "lambda_bound_per_s", "label"], rows)


def curves_to_json(curves: Sequence[ExclusionCurve], params: dict | None = None) -> str:
    return json_text(
        {
            "parameters": params or {},
            "curves": [
                {"label": c.label, "r_c_m": c.r_c_grid.tolist(), "lambda_bound_per_s": c.lambda_bound.tolist()}
                for c in curves
            ],
        }
    )


def _check_gamma(gamma_bar_value: float) -> None:
    if not gamma_bar_value > 0:
        raise DomainError("gamma_bar = 0 (coincident wells) gives no bound")


def lambda_bound_phase(t_coh: float, nucleons: int, gamma_bar_value: float) -> float:
    """Phase-state visibility bound 1 / (t A^2 gamma_bar); no N amplification."""
    if not t_coh > 0:
        raise DomainError("coherence time must be positive")
    _check_gamma(gamma_bar_value)
    return 1.0 / (t_coh * nucleons**2 * gamma_bar_value)


def lambda_bound_entangled(t_coh: float, n_total: int, nucleons: int, gamma_bar_value: float) -> float:
    """Cat/NOON-state bound 1 / (t N^2 A^2 gamma_bar)."""
    if not t_coh > 0:
        raise DomainError("coherence time must be positive")
    if n_total < 1:
        raise DomainError("N must be >= 1")
    _check_gamma(gamma_bar_value)
    return 1.0 / (t_coh * float(n_total) ** 2 * nucleons**2 * gamma_bar_value)


@dataclass(frozen=True)
class Scenario:
    t_coh: float
    n_total: int
    nucleons: int
    geom: WellGeometry
    gamma_method: str = CLOSED_FORM_APPROX

    @property
    def label(self) -> str:
        return f"N={self.n_total:.0e} t={self.t_coh:g}s A={self.nucleons}"


def exclusion_curve(
    scenario: Scenario,
    r_c_grid: Sequence[float],
    threads: int = 1,
    gamma_bar_value: float | None = None,
    label: str | None = None,
) -> ExclusionCurve:
    """Bound lambda(r_C) = 1/(t N^2 A^2 gamma_bar(d, sigma, r_C)) over a grid.

    ``gamma_bar_value`` bypasses the kernel with a constant. Grid points are
    independent and may run on a thread pool; the output order is the grid order.
    """
    grid = np.asarray(r_c_grid, dtype=float)

    def point(r_c: float) -> float:
        g = gamma_bar_value if gamma_bar_value is not None else gamma_bar(scenario.geom, r_c, scenario.gamma_method)
        return lambda_bound_entangled(scenario.t_coh, scenario.n_total, scenario.nucleons, g)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            bounds = list(pool.map(point, grid))
    else:
        bounds = [point(r) for r in grid]
    return ExclusionCurve(grid, np.array(bounds), label or scenario.label)


def min_atoms_vs_channel(
    channel_rate: float, scaling: Scaling, lambda_csl: float, nucleons: int, gamma_bar_value: float = 1.0
) -> int:
    """Smallest N for which CSL damping of the N-particle coherence is at least the channel's.

    CSL damps at lambda A^2 gamma_bar N^2. A channel linear in N (loss,
    three-body) is overtaken at N = rate / (lambda A^2 gamma_bar); an
    N-independent channel at N = sqrt(rate / (lambda A^2 gamma_bar)).
    """
    if not lambda_csl > 0:
        raise DomainError("lambda must be positive")
    _check_gamma(gamma_bar_value)
    if channel_rate < 0:
        raise DomainError("channel rate must be non-negative")
    csl = lambda_csl * nucleons**2 * gamma_bar_value
    ratio = channel_rate / csl
    # compare in reduced form so large N does not lose precision in N^2
    if scaling is Scaling.LINEAR_IN_N:
        ok = lambda k: csl * k >= channel_rate
        n_min = max(1, math.ceil(ratio))
    else:
        ok = lambda k: csl * k * k >= channel_rate
        n_min = max(1, math.ceil(math.sqrt(ratio)))
    # ceil can land one above when the ratio is an integer up to rounding
    if n_min > 1 and ok(n_min - 1):
        n_min -= 1
    while not ok(n_min):
        n_min += 1
    return n_min
