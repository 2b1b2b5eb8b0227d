"""Spatial kernels over a Gaussian double-well model.

Each well density |psi_{L,R}(x)|^2 is an isotropic normalized Gaussian centred
at -d/2 and +d/2 on the x axis. ``width_sigma`` is the 1/e^2 half-width of the
density, i.e. the density falls as exp(-2 r^2 / sigma^2) and its standard
deviation per axis is sigma / 2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .fock import DomainError, NumericalError


@dataclass(frozen=True)
class WellGeometry:
    separation_d: float  # m
    width_sigma: float  # m, 1/e^2 half-width of each well density

    def __post_init__(self):
        if not (self.separation_d > 0 and self.width_sigma > 0):
            raise DomainError(f"well separation and width must be positive, got {self}")
        if self.width_sigma > self.separation_d / 2:
            warnings.warn(
                f"well width {self.width_sigma:g} m exceeds half the separation {self.separation_d / 2:g} m; "
                "the two-mode picture is doubtful",
                stacklevel=2,
            )

    @property
    def std(self) -> float:
        """Per-axis standard deviation of each well density."""
        return self.width_sigma / 2

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        half = np.array([self.separation_d / 2, 0.0, 0.0])
        return -half, half

    def density(self, points: np.ndarray, well: str = "L") -> np.ndarray:
        """|psi_well(x)|^2 at points of shape (..., 3)."""
        c = self.centers()[0 if well == "L" else 1]
        s = self.std
        r2 = np.sum((np.asarray(points) - c) ** 2, axis=-1)
        return np.exp(-r2 / (2 * s * s)) / (2 * math.pi * s * s) ** 1.5


QUADRATURE = "quadrature"
ANALYTIC = "analytic"
CLOSED_FORM_APPROX = "approx"
GAMMA_BAR_METHODS = (QUADRATURE, ANALYTIC, CLOSED_FORM_APPROX)


def gamma_bar(geom: WellGeometry, r_c: float, method: str = QUADRATURE, rtol: float = 1e-8) -> float:
    """CSL mode-overlap factor

        gamma_bar = int dy dy' exp(-|y - y'|^2 / 4 r_c^2) |psi_L(y)|^2 (|psi_L(y')|^2 - |psi_R(y')|^2)

    ``quadrature`` integrates numerically, ``analytic`` uses the Gaussian
    convolution result, ``approx`` is the point-well limit 1 - exp(-d^2/4 r_c^2).
    """
    if not r_c > 0:
        raise DomainError(f"r_c must be positive, got {r_c}")
    d = geom.separation_d
    if method == CLOSED_FORM_APPROX:
        return float(-math.expm1(-(d * d) / (4 * r_c * r_c)))
    if method == ANALYTIC:
        return _gamma_bar_analytic(d, geom.std, r_c)
    if method == QUADRATURE:
        return _gamma_bar_quadrature(d, geom.std, r_c, rtol)
    raise DomainError(f"unknown gamma_bar method {method!r}; choose from {GAMMA_BAR_METHODS}")


def _gamma_bar_analytic(d: float, s: float, r_c: float) -> float:
    # difference of two well positions is Gaussian with variance 2 s^2 per axis
    ratio = 1.0 + (s / r_c) ** 2
    return float(ratio**-1.5 * -math.expm1(-(d * d) / (4 * (r_c * r_c + s * s))))


def _axis_overlap(shift: float, kernel_width: float, rtol: float) -> float:
    """int dy dy' exp(-(y - y')^2 / 4 w^2) g(y) g(y' - shift) for unit-variance Gaussians g.

    Lengths are in units of the well standard deviation.
    """
    g = lambda y: math.exp(-0.5 * y * y) / math.sqrt(2 * math.pi)
    span = 12.0
    # the kernel is below e^-144 beyond 2 w span
    reach = 2 * kernel_width * span

    def inner(y: float) -> float:
        lo, hi = shift - span, shift + span
        lo, hi = max(lo, y - reach), min(hi, y + reach)
        if lo >= hi:
            return 0.0
        pts = [y] if lo < y < hi else None
        val, _ = integrate.quad(
            lambda yp: math.exp(-((y - yp) ** 2) / (4 * kernel_width**2)) * g(yp - shift),
            lo,
            hi,
            points=pts,
            epsabs=0.0,
            epsrel=rtol,
            limit=200,
        )
        return val

    val, err = integrate.quad(lambda y: g(y) * inner(y), -span, span, epsabs=1e-300, epsrel=rtol, limit=200)
    if not math.isfinite(val):
        raise NumericalError("gamma_bar quadrature produced a non-finite value")
    return val


def _gamma_bar_quadrature(d: float, s: float, r_c: float, rtol: float) -> float:
    # the kernel and both densities factor over Cartesian axes
    w = r_c / s
    same = _axis_overlap(0.0, w, rtol)
    cross = _axis_overlap(d / s, w, rtol)
    return float(same**2 * (same - cross))


def sphere_kernel_F(z) -> float:
    """int over the unit sphere of exp(-i u.z) du = 4 pi sin|z| / |z|."""
    r = float(np.linalg.norm(np.asarray(z, dtype=float)))
    return 4 * math.pi * float(np.sinc(r / math.pi))


def _sphere_rule(n_polar: int, n_azimuth: int, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on the unit sphere: Gauss-Legendre in cos(theta) about ``axis``, uniform azimuth."""
    x, wx = leggauss(n_polar)
    phi = 2 * math.pi * np.arange(n_azimuth) / n_azimuth
    sin_t = np.sqrt(1 - x**2)
    a = np.outer(x, np.ones(n_azimuth))
    b = np.outer(sin_t, np.cos(phi))
    c = np.outer(sin_t, np.sin(phi))
    comps = [b, c]
    comps.insert(axis, a)
    pts = np.stack([comp.reshape(-1) for comp in comps], axis=-1)
    wts = np.outer(wx, np.full(n_azimuth, 2 * math.pi / n_azimuth)).reshape(-1)
    return pts, wts


def _well_transform(
    geom: WellGeometry, well: str, rabi_profile: Callable, qs: np.ndarray, n_gh: int, chunk: int = 256
) -> np.ndarray:
    """A(q) = int Omega(y) |psi_well(y)|^2 exp(-i q.y) dy via tensor Gauss-Hermite nodes."""
    xi, w = hermegauss(n_gh)
    w = w / math.sqrt(2 * math.pi)
    grid = np.stack(np.meshgrid(xi, xi, xi, indexing="ij"), axis=-1).reshape(-1, 3)
    wts = (w[:, None, None] * w[None, :, None] * w[None, None, :]).reshape(-1)
    c = geom.centers()[0 if well == "L" else 1]
    pts = c + geom.std * grid
    vals = np.asarray(rabi_profile(pts), dtype=float)
    if vals.shape == ():
        vals = np.full(pts.shape[0], float(vals))
    weighted = wts * vals
    out = np.empty(qs.shape[0], dtype=complex)
    for i in range(0, qs.shape[0], chunk):
        out[i : i + chunk] = np.exp(-1j * (qs[i : i + chunk] @ pts.T)) @ weighted
    return out


def omega_bar(
    geom: WellGeometry,
    rabi_profile: Callable[[np.ndarray], np.ndarray],
    k_resonance: float,
    rtol: float = 1e-6,
    atol: float = 1e-12,
    max_levels: int = 5,
) -> float:
    """Spontaneous-emission overlap factor (rad^2/s^2)

        Omega_bar = int dy dy' Omega(y) Omega(y') F(k(y - y')) |psi_L(y)|^2 (|psi_L(y')|^2 - |psi_R(y')|^2)

    Expanding F as a sphere integral gives int_{|u|=1} du A_L(ku) conj(A_L(ku) - A_R(ku)),
    with A_X the Fourier transform of Omega |psi_X|^2. The sphere and the wells are
    integrated with rules that are refined until successive values agree to
    ``rtol`` (or ``atol`` times 4 pi max Omega^2).

    ``rabi_profile`` maps points of shape (n, 3) in metres to real Rabi
    frequencies; a scalar return is broadcast.
    """
    if k_resonance < 0:
        raise DomainError("k_resonance must be non-negative")
    kd = k_resonance * geom.separation_d
    ks = k_resonance * geom.std
    prev = None
    change = float("nan")
    scale = None
    for level in range(max_levels):
        grow = 2**level
        n_polar = int(16 * grow + kd)
        n_azimuth = int(16 * grow + 2 * ks)
        n_gh = min(12 + 6 * level + int(ks), 60)
        u, wu = _sphere_rule(n_polar, n_azimuth, axis=0)
        qs = k_resonance * u
        a_left = _well_transform(geom, "L", rabi_profile, qs, n_gh)
        a_right = _well_transform(geom, "R", rabi_profile, qs, n_gh)
        value = float(np.real(np.sum(wu * a_left * np.conj(a_left - a_right))))
        if scale is None:
            probe = np.asarray(rabi_profile(np.stack(geom.centers())), dtype=float)
            scale = 4 * math.pi * max(float(np.max(np.abs(probe))) ** 2, 1e-300)
        if not math.isfinite(value):
            raise NumericalError("omega_bar quadrature produced a non-finite value")
        if prev is not None:
            change = abs(value - prev)
            if change <= max(rtol * abs(value), atol * scale):
                return value
        prev = value
    raise NumericalError(
        f"omega_bar quadrature did not converge after {max_levels} refinements "
        f"(last change {change:.3e})"
    )


def omega_bar_constant(geom: WellGeometry, rabi: float, k_resonance: float) -> float:
    """Closed form for a uniform Rabi frequency: 4 pi Omega^2 exp(-s^2 k^2) (1 - sin(kd)/(kd))."""
    kd = k_resonance * geom.separation_d
    ks = k_resonance * geom.std
    return 4 * math.pi * rabi**2 * math.exp(-ks * ks) * (1 - float(np.sinc(kd / math.pi)))
