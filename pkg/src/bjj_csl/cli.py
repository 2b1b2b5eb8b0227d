"""Command-line front end.

    bjj-csl <command> --config scenario.json --out results/ [--threads N] [--seed S]

Commands: evolve, bounds, rates, gamma-bar, momentum, validate. Config files
are JSON with units in the field names. Curves go to CSV, scalar reports to
JSON; every file starts by echoing the resolved parameters.

Exit codes: 0 success, 2 invalid config (JSON error with the field path on
stderr), 3 numerical failure or failed validation.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import bounds as bnd
from . import channels as ch
from . import dynamics as dyn
from . import kernels as ker
from . import observables as obs
from . import states as st
from ._output import csv_text, json_text
from .fock import DensityMatrix, DomainError, NumericalError, a_R, adag_L, expectation, random_density_matrix

MAX_MATRIX_N = 2000
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


# -- config access -----------------------------------------------------------

_MISSING = object()


def _get(cfg: dict, key: str, path: str, kind: str, default: Any = _MISSING, check: Callable | None = None, why: str = ""):
    """Fetch and type-check ``cfg[key]``; ``kind`` is one of int, number, str, bool, object, list."""
    here = f"{path}.{key}" if path else key
    if key not in cfg:
        if default is _MISSING:
            raise ConfigError(here, "required field is missing")
        return default
    value = cfg[key]
    ok = {
        "int": isinstance(value, int) and not isinstance(value, bool),
        "number": isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value),
        "str": isinstance(value, str),
        "bool": isinstance(value, bool),
        "object": isinstance(value, dict),
        "list": isinstance(value, list),
    }[kind]
    if not ok:
        raise ConfigError(here, f"expected {kind}, got {type(value).__name__}")
    if check is not None and not check(value):
        raise ConfigError(here, why or "value out of range")
    return float(value) if kind == "number" else value


def _choice(cfg, key, path, options, default=_MISSING):
    value = _get(cfg, key, path, "str", default)
    if value not in options:
        raise ConfigError(f"{path}.{key}" if path else key, f"must be one of {list(options)}")
    return value


def _reject_unknown(cfg: dict, path: str, allowed: set[str]) -> None:
    for key in cfg:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown field")


_pos = lambda v: v > 0
_nonneg = lambda v: v >= 0


def _geometry(cfg: dict, path: str, required: bool = True):
    g = _get(cfg, "geometry", path, "object", None if not required else _MISSING)
    if g is None:
        return None
    gp = f"{path}.geometry" if path else "geometry"
    _reject_unknown(g, gp, {"d_m", "sigma_m"})
    return ker.WellGeometry(
        _get(g, "d_m", gp, "number", check=_pos, why="must be > 0"),
        _get(g, "sigma_m", gp, "number", check=_pos, why="must be > 0"),
    )


def _resolve_gamma(cfg: dict, path: str, r_c: float) -> tuple[float, dict]:
    """gamma_bar from an explicit value or from geometry + r_C."""
    method = _choice(cfg, "gamma_method", path, ker.GAMMA_BAR_METHODS, ker.CLOSED_FORM_APPROX)
    if "gamma_bar" in cfg:
        g = _get(cfg, "gamma_bar", path, "number", check=lambda v: 0 <= v <= 1, why="must lie in [0, 1]")
        return g, {"gamma_bar": g, "gamma_source": "explicit"}
    geom = _geometry(cfg, path, required=False)
    if geom is None:
        raise ConfigError(f"{path}.gamma_bar" if path else "gamma_bar", "give gamma_bar or geometry")
    g = ker.gamma_bar(geom, r_c, method)
    return g, {"gamma_bar": g, "gamma_source": method, "d_m": geom.separation_d, "sigma_m": geom.width_sigma}


def _state(cfg: dict, n_total: int):
    s = _get(cfg, "state", "", "object")
    _reject_unknown(s, "state", {"kind", "phi_rad", "beta_rad"})
    kind = _choice(s, "kind", "state", ("phase", "noon", "superposition"))
    phi = _get(s, "phi_rad", "state", "number", 0.0)
    beta = _get(s, "beta_rad", "state", "number", 0.0)
    resolved = {"state_kind": kind, "phi_rad": phi, "beta_rad": beta}
    if kind == "phase":
        return (lambda: st.phase_state(n_total, phi)), resolved
    if kind == "noon":
        return (lambda: st.noon_state(n_total)), resolved
    return (lambda: st.superposition_state(n_total, phi, beta)), resolved


def _times(cfg: dict) -> np.ndarray:
    if "times_s" in cfg:
        ts = _get(cfg, "times_s", "", "list")
        try:
            arr = np.array([float(t) for t in ts])
        except (TypeError, ValueError):
            raise ConfigError("times_s", "entries must be numbers") from None
    else:
        t = _get(cfg, "times", "", "object")
        _reject_unknown(t, "times", {"t_max_s", "n_points"})
        t_max = _get(t, "t_max_s", "times", "number", check=_pos, why="must be > 0")
        n = _get(t, "n_points", "times", "int", check=lambda v: v >= 2, why="must be >= 2")
        arr = np.linspace(0.0, t_max, n)
    if arr.size == 0 or arr[0] < 0 or np.any(np.diff(arr) <= 0):
        raise ConfigError("times_s", "times must be non-negative and strictly increasing")
    return arr


def _model(cfg: dict) -> tuple[dyn.ModelParams, dict]:
    n = _get(cfg, "n_total", "", "int", check=lambda v: v >= 1, why="must be >= 1")
    a = _get(cfg, "nucleons", "", "int", check=lambda v: v >= 1, why="must be >= 1")
    u = _get(cfg, "u_over_hbar_rad_per_s", "", "number", 0.0)
    j = _get(cfg, "j_over_hbar_rad_per_s", "", "number", 0.0)
    lam = _get(cfg, "lambda_per_s", "", "number", check=_nonneg, why="must be >= 0")
    r_c = _get(cfg, "r_c_m", "", "number", 1e-7, check=_pos, why="must be > 0")
    g, gres = _resolve_gamma(cfg, "", r_c)
    params = dyn.ModelParams(n, a, u, j, lam, r_c, g)
    resolved = {
        "n_total": n,
        "nucleons": a,
        "u_over_hbar_rad_per_s": u,
        "j_over_hbar_rad_per_s": j,
        "lambda_per_s": lam,
        "r_c_m": r_c,
        **gres,
        "csl_rate_per_s": params.csl_rate,
    }
    return params, resolved


# -- commands ------------------------------------------------------------------

EVOLVE_FIELDS = {
    "state", "n_total", "nucleons", "u_over_hbar_rad_per_s", "j_over_hbar_rad_per_s", "lambda_per_s",
    "r_c_m", "gamma_bar", "gamma_method", "geometry", "observable", "method", "times", "times_s", "dt_s",
    "channels",
}


def _evolve_channels(cfg: dict) -> dict:
    c = _get(cfg, "channels", "", "object", {})
    _reject_unknown(
        c,
        "channels",
        {"lambda_dec_per_s", "phase_noise_diffusion_per_s", "spont_emission", "lambda_loss_per_s", "three_body_rate_per_s"},
    )
    out = {
        "lambda_dec_per_s": _get(c, "lambda_dec_per_s", "channels", "number", 0.0, _nonneg, "must be >= 0"),
        "phase_noise_diffusion_per_s": _get(c, "phase_noise_diffusion_per_s", "channels", "number", 0.0, _nonneg, "must be >= 0"),
        "lambda_loss_per_s": _get(c, "lambda_loss_per_s", "channels", "number", 0.0, _nonneg, "must be >= 0"),
        "three_body_rate_per_s": _get(c, "three_body_rate_per_s", "channels", "number", 0.0, _nonneg, "must be >= 0"),
        "spont_rate_eff_per_s": 0.0,
    }
    se = _get(c, "spont_emission", "channels", "object", None)
    if se is not None:
        p = "channels.spont_emission"
        _reject_unknown(se, p, {"gamma_sp_per_s", "delta_rad_per_s", "omega_bar_rad2_per_s2"})
        gamma_sp = _get(se, "gamma_sp_per_s", p, "number", check=_nonneg, why="must be >= 0")
        delta = _get(se, "delta_rad_per_s", p, "number", check=lambda v: v != 0, why="must be non-zero")
        obar = _get(se, "omega_bar_rad2_per_s2", p, "number")
        out["spont_rate_eff_per_s"] = ch.spont_emission_rate(gamma_sp, delta, obar)
        if out["spont_rate_eff_per_s"] < 0:
            raise ConfigError(p, "effective spontaneous-emission rate must be non-negative")
    return out


def cmd_evolve(cfg: dict, ctx: dict) -> dict[str, str]:
    _reject_unknown(cfg, "", EVOLVE_FIELDS)
    params, resolved = _model(cfg)
    make_state, sres = _state(cfg, params.n_total)
    observable = _choice(cfg, "observable", "", ("n_particle_coherence", "phase_coherence"), "n_particle_coherence")
    method = _choice(cfg, "method", "", ("analytic", "integrator", "closed_form"), "analytic")
    times = _times(cfg)
    chans = _evolve_channels(cfg)
    dt = _get(cfg, "dt_s", "", "number", None, _pos, "must be > 0")
    n = params.n_total

    # number-basis dephasing beyond CSL, as a rate per unit (m - l)^2
    extra_rate = chans["lambda_dec_per_s"] + chans["phase_noise_diffusion_per_s"] / 2 + chans["spont_rate_eff_per_s"]
    number_changing = chans["lambda_loss_per_s"] > 0 or chans["three_body_rate_per_s"] > 0
    if observable == "phase_coherence" and number_changing:
        raise ConfigError("channels", "loss and three-body channels are only defined for n_particle_coherence")
    if method == "closed_form" and observable == "phase_coherence" and sres["state_kind"] != "phase":
        raise ConfigError("state.kind", "closed-form phase coherence is defined for phase states only")
    if method != "closed_form" and n > MAX_MATRIX_N:
        raise ConfigError("n_total", f"full density-matrix methods are limited to N <= {MAX_MATRIX_N}; use closed_form")

    def number_loss(t: float) -> float:
        return ch.coherence_decay_under_loss(n, chans["lambda_loss_per_s"], t) * ch.coherence_decay_three_body(
            n, chans["three_body_rate_per_s"], t
        )

    if method == "closed_form":
        log_values, phases = _closed_form_series(params, make_state, sres, observable, times, extra_rate, number_loss)
    else:
        rho0 = DensityMatrix.from_state(make_state())
        if method == "analytic":
            rhos = [
                ch.apply_dephasing_map(dyn.evolve_csl_analytic(rho0, params, t), extra_rate * t) for t in times
            ]
        else:
            channels = [dyn.Dephasing(extra_rate)] if extra_rate > 0 else []
            if chans["lambda_loss_per_s"] > 0:
                channels.append(dyn.AtomLossNoJump(chans["lambda_loss_per_s"]))
            rhos = dyn.integrate_series(rho0, params, times, dt=dt, extra_channels=channels)
        vals = []
        for t, rho in zip(times, rhos):
            if observable == "phase_coherence":
                vals.append(obs.phase_coherence(rho))
            else:
                # corner element; the N! factor is carried in log space
                v = complex(rho.entries[n, 0])
                if method == "analytic":
                    v *= number_loss(t)
                else:
                    v *= ch.coherence_decay_three_body(n, chans["three_body_rate_per_s"], t)
                vals.append(v)
        vals = np.array(vals)
        with np.errstate(divide="ignore"):
            log_values = np.log10(np.abs(vals)) + (math.lgamma(n + 1) / math.log(10) if observable != "phase_coherence" else 0.0)
        phases = np.angle(vals)

    norm_abs = 10.0 ** (log_values - log_values[0])
    rel_phase = phases - phases[0]
    rows = [
        (float(t), float(a * math.cos(p)), float(a * math.sin(p)), float(a), float(lv))
        for t, a, p, lv in zip(times, norm_abs, rel_phase, log_values)
    ]
    header = {
        "command": "evolve",
        **resolved,
        **sres,
        "observable": observable,
        "method": method,
        "dt_s": dt if dt is not None else (dyn.default_dt(params) if method == "integrator" else "n/a"),
        **chans,
    }
    text = csv_text(
        header, ["t_s", "normalized_re", "normalized_im", "normalized_abs", "log10_abs_value"], rows
    )
    return {"evolve.csv": text}


def _closed_form_series(params, make_state, sres, observable, times, extra_rate, number_loss):
    n = params.n_total
    if observable == "phase_coherence":
        vals = np.array(
            [dyn.phase_coherence_closed_form(params, sres["phi_rad"], t) * math.exp(-extra_rate * t) for t in times]
        )
        with np.errstate(divide="ignore"):
            return np.log10(np.abs(vals)), np.angle(vals)
    # N-particle coherence: the corner element picks up no Kerr phase and damps as exp(-c N^2)
    amps = make_state().amplitudes
    corner = amps[n] * np.conj(amps[0])
    if corner == 0:
        raise DomainError("the chosen state has no N-particle coherence")
    log0 = math.lgamma(n + 1) / math.log(10) + math.log10(abs(corner))
    logs = np.array(
        [
            log0
            + (-(params.csl_rate + extra_rate) * n * n * t) / math.log(10)
            + (math.log10(number_loss(t)) if number_loss(t) > 0 else -math.inf)
            for t in times
        ]
    )
    return logs, np.full(times.shape, float(np.angle(corner)))


def cmd_bounds(cfg: dict, ctx: dict) -> dict[str, str]:
    _reject_unknown(
        cfg, "", {"t_coh_s", "n_values", "nucleons", "geometry", "gamma_method", "r_c_grid", "r_c_values_m", "gamma_bar"}
    )
    t_coh = _get(cfg, "t_coh_s", "", "number", check=_pos, why="must be > 0")
    n_values = _get(cfg, "n_values", "", "list", check=lambda v: len(v) > 0, why="must be non-empty")
    for i, v in enumerate(n_values):
        if not (isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 1 and float(v).is_integer()):
            raise ConfigError(f"n_values[{i}]", "must be an integer >= 1")
    nucleons = _get(cfg, "nucleons", "", "int", check=lambda v: v >= 1, why="must be >= 1")
    geom = _geometry(cfg, "")
    method = _choice(cfg, "gamma_method", "", ker.GAMMA_BAR_METHODS, ker.CLOSED_FORM_APPROX)
    const_gamma = _get(cfg, "gamma_bar", "", "number", None, lambda v: 0 < v <= 1, "must lie in (0, 1]")
    if "r_c_values_m" in cfg:
        grid = np.array(_get(cfg, "r_c_values_m", "", "list"), dtype=float)
    else:
        g = _get(cfg, "r_c_grid", "", "object", {"min_m": 1e-8, "max_m": 1e-4, "n_points": 81})
        _reject_unknown(g, "r_c_grid", {"min_m", "max_m", "n_points"})
        lo = _get(g, "min_m", "r_c_grid", "number", check=_pos, why="must be > 0")
        hi = _get(g, "max_m", "r_c_grid", "number", check=lambda v: v > lo, why="must exceed min_m")
        npts = _get(g, "n_points", "r_c_grid", "int", check=lambda v: v >= 2, why="must be >= 2")
        grid = np.geomspace(lo, hi, npts)
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ConfigError("r_c_values_m", "must be positive and strictly increasing")
    curves = [
        bnd.exclusion_curve(
            bnd.Scenario(t_coh, int(n), nucleons, geom, method), grid, threads=ctx["threads"], gamma_bar_value=const_gamma
        )
        for n in n_values
    ]
    header = {
        "command": "bounds",
        "t_coh_s": t_coh,
        "n_values": [int(n) for n in n_values],
        "nucleons": nucleons,
        "d_m": geom.separation_d,
        "sigma_m": geom.width_sigma,
        "gamma_method": method if const_gamma is None else "explicit",
        "gamma_bar": const_gamma if const_gamma is not None else "per r_c",
        "excluded_region": "lambda strictly above each curve",
    }
    payload = json.loads(bnd.curves_to_json(curves, header))
    payload["reference_points_external"] = bnd.REFERENCE_POINTS
    return {"bounds.csv": bnd.curves_to_csv(curves, header), "bounds.json": json_text(payload)}


def cmd_rates(cfg: dict, ctx: dict) -> dict[str, str]:
    _reject_unknown(cfg, "", {"gas", "lambda_loss_override_per_s", "n_total", "spont_emission", "csl"})
    g = _get(cfg, "gas", "", "object")
    _reject_unknown(
        g,
        "gas",
        {"n_therm_per_m3", "n_bec_per_m3", "n_therm_atoms", "temperature_ratio", "coupling_g_J_m3", "scattering_length_m", "mass_kg"},
    )
    n_total = _get(cfg, "n_total", "", "int", None, lambda v: v >= 1, "must be >= 1")
    t_ratio = _get(g, "temperature_ratio", "gas", "number", 0.0, _nonneg, "must be >= 0")
    if "n_therm_atoms" in g:
        n_therm_atoms = _get(g, "n_therm_atoms", "gas", "int", check=lambda v: v >= 1, why="must be >= 1")
        n_therm_source = "explicit"
    elif n_total is not None:
        n_therm_atoms = max(1, round(ch.thermal_atom_number(n_total, t_ratio)))
        n_therm_source = "N (T/T_C)^3"
    else:
        raise ConfigError("gas.n_therm_atoms", "give n_therm_atoms, or n_total with temperature_ratio")
    try:
        gas = ch.GasParams(
            n_therm=_get(g, "n_therm_per_m3", "gas", "number", 0.0, _nonneg, "must be >= 0"),
            n_bec=_get(g, "n_bec_per_m3", "gas", "number", 0.0, _nonneg, "must be >= 0"),
            n_therm_atoms=n_therm_atoms,
            temperature_ratio=t_ratio,
            coupling_g=_get(g, "coupling_g_J_m3", "gas", "number", None),
            scattering_length=_get(g, "scattering_length_m", "gas", "number", None, _nonneg, "must be >= 0"),
            mass=_get(g, "mass_kg", "gas", "number", None, _pos, "must be > 0"),
        )
    except DomainError as exc:
        raise ConfigError("gas", str(exc)) from None
    override = _get(cfg, "lambda_loss_override_per_s", "", "number", None, _nonneg, "must be >= 0")
    spont = 0.0
    se = _get(cfg, "spont_emission", "", "object", None)
    if se is not None:
        _reject_unknown(se, "spont_emission", {"gamma_sp_per_s", "delta_rad_per_s", "omega_bar_rad2_per_s2"})
        spont = ch.spont_emission_rate(
            _get(se, "gamma_sp_per_s", "spont_emission", "number", check=_nonneg, why="must be >= 0"),
            _get(se, "delta_rad_per_s", "spont_emission", "number", check=lambda v: v != 0, why="must be non-zero"),
            _get(se, "omega_bar_rad2_per_s2", "spont_emission", "number", check=_nonneg, why="must be >= 0"),
        )
    rates = ch.channel_rates(gas, override, spont_rate_eff=spont)
    report: dict[str, Any] = {
        "command": "rates",
        "parameters": {
            "n_therm_per_m3": gas.n_therm,
            "n_bec_per_m3": gas.n_bec,
            "n_therm_atoms": n_therm_atoms,
            "n_therm_atoms_source": n_therm_source,
            "temperature_ratio": t_ratio,
            "coupling_g_J_m3": gas.g,
            "scattering_length_m": gas.scattering_length,
            "mass_kg": gas.mass,
            "lambda_loss_override_per_s": override,
        },
        "rates": {
            "lambda_loss_per_s": rates.lambda_loss,
            "lambda_loss_source": "override" if override is not None else "g^2 n_therm^3 / hbar^2",
            "lambda_dec_per_s": rates.lambda_dec,
            "lambda_three_body_per_atom_per_s": rates.lambda_three_body,
            "spont_rate_eff_per_s": rates.spont_rate_eff,
        },
    }
    csl = _get(cfg, "csl", "", "object", None)
    if csl is not None:
        _reject_unknown(csl, "csl", {"lambda_per_s", "nucleons", "r_c_m", "gamma_bar", "gamma_method", "geometry"})
        lam = _get(csl, "lambda_per_s", "csl", "number", check=_pos, why="must be > 0")
        a = _get(csl, "nucleons", "csl", "int", check=lambda v: v >= 1, why="must be >= 1")
        r_c = _get(csl, "r_c_m", "csl", "number", 1e-7, _pos, "must be > 0")
        gam, gres = _resolve_gamma(csl, "csl", r_c)
        if gam <= 0:
            raise ConfigError("csl.gamma_bar", "must be > 0 to compare rates")
        verdicts = {}
        for name, rate, scaling in (
            ("atom_loss", rates.lambda_loss, ch.Scaling.LINEAR_IN_N),
            ("three_body", rates.lambda_three_body, ch.Scaling.LINEAR_IN_N),
            ("thermal_dephasing", rates.lambda_dec, ch.Scaling.CONSTANT_IN_N),
            ("spontaneous_emission", rates.spont_rate_eff, ch.Scaling.CONSTANT_IN_N),
        ):
            verdicts[name] = {
                "rate_per_s": rate,
                "n_scaling": scaling.value,
                "min_atoms_for_csl_dominance": bnd.min_atoms_vs_channel(rate, scaling, lam, a, gam),
            }
        report["csl"] = {"lambda_per_s": lam, "nucleons": a, "r_c_m": r_c, **gres, "csl_rate_per_s": lam * a * a * gam}
        report["dominance"] = verdicts
    return {"rates.json": json_text(report)}


def cmd_gamma_bar(cfg: dict, ctx: dict) -> dict[str, str]:
    _reject_unknown(cfg, "", {"geometry", "r_c_m", "r_c_values_m"})
    geom = _geometry(cfg, "")
    if "r_c_values_m" in cfg:
        values = _get(cfg, "r_c_values_m", "", "list", check=lambda v: len(v) > 0, why="must be non-empty")
        for i, v in enumerate(values):
            if not (isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0):
                raise ConfigError(f"r_c_values_m[{i}]", "must be a number > 0")
        r_cs = [float(v) for v in values]
    else:
        r_cs = [_get(cfg, "r_c_m", "", "number", check=_pos, why="must be > 0")]
    rows = [
        {
            "r_c_m": r,
            "quadrature": ker.gamma_bar(geom, r, ker.QUADRATURE),
            "analytic": ker.gamma_bar(geom, r, ker.ANALYTIC),
            "closed_form_approx": ker.gamma_bar(geom, r, ker.CLOSED_FORM_APPROX),
        }
        for r in r_cs
    ]
    report = {
        "command": "gamma-bar",
        "parameters": {"d_m": geom.separation_d, "sigma_m": geom.width_sigma, "sigma_convention": "1/e^2 half-width of each well density"},
        "gamma_bar": rows,
    }
    return {"gamma_bar.json": json_text(report)}


def cmd_momentum(cfg: dict, ctx: dict) -> dict[str, str]:
    _reject_unknown(cfg, "", (EVOLVE_FIELDS - {"times", "times_s", "observable", "method", "dt_s", "channels"}) | {"t_s", "p_grid"})
    if "geometry" not in cfg:
        raise ConfigError("geometry", "required field is missing")
    params, resolved = _model(cfg)
    geom = _geometry(cfg, "")
    if params.n_total > MAX_MATRIX_N:
        raise ConfigError("n_total", f"limited to N <= {MAX_MATRIX_N}")
    make_state, sres = _state(cfg, params.n_total)
    t = _get(cfg, "t_s", "", "number", 0.0, _nonneg, "must be >= 0")
    sigma_p = obs.hbar / (2 * geom.std)
    pg = _get(cfg, "p_grid", "", "object", {})
    _reject_unknown(pg, "p_grid", {"p_max_kg_m_per_s", "n_points"})
    p_max = _get(pg, "p_max_kg_m_per_s", "p_grid", "number", 4 * sigma_p, _pos, "must be > 0")
    npts = _get(pg, "n_points", "p_grid", "int", 2001, lambda v: v >= 3, "must be >= 3")
    p = np.linspace(-p_max, p_max, npts)
    rho0 = DensityMatrix.from_state(make_state())
    if params.j_over_hbar == 0:
        rho = dyn.evolve_csl_analytic(rho0, params, t)
    else:
        rho = dyn.integrate_master_equation(rho0, params, t) if t > 0 else rho0
    dens = obs.momentum_density(rho, p, geom)
    env = params.n_total * obs.momentum_envelope(p, geom)
    fit = obs.fringe_contrast(p, dens, geom, params.n_total)
    coh = obs.phase_coherence(rho)
    header = {"command": "momentum", **resolved, **sres, "t_s": t, "d_m": geom.separation_d, "sigma_m": geom.width_sigma}
    csv = csv_text(header, ["p_x_kg_m_per_s", "density_per_kg_m_per_s", "envelope_per_kg_m_per_s"], zip(p, dens, env))
    report = {
        "command": "momentum",
        "parameters": header,
        "fringe_period_kg_m_per_s": obs.fringe_period(geom),
        "fitted_contrast": fit.contrast,
        "fitted_phase_rad": fit.phase,
        "expected_contrast": 2 * abs(coh) / params.n_total,
        "phase_coherence_re": coh.real,
        "phase_coherence_im": coh.imag,
    }
    return {"momentum.csv": csv, "momentum.json": json_text(report)}


def run_validation(n_values, cases: int, seed: int, tol: float) -> dict:
    """Analytic propagator vs RK4 integrator on random density matrices."""
    rng = np.random.default_rng(seed)
    checks = []
    for n in n_values:
        worst = 0.0
        worst_trace = 0.0
        for _ in range(cases):
            rho0 = random_density_matrix(n, rng)
            u = float(rng.uniform(-2.0, 2.0))
            kappa = float(rng.uniform(0.0, 2.0))
            t = float(rng.uniform(0.1, 5.0)) / max(abs(u), kappa, 1e-12)
            params = dyn.ModelParams(n, 1, u_over_hbar=u, lambda_csl=kappa)
            exact = dyn.evolve_csl_analytic(rho0, params, t)
            rk4 = dyn.integrate_master_equation(rho0, params, t)
            worst = max(worst, float(np.max(np.abs(exact.entries - rk4.entries))))
            worst_trace = max(worst_trace, abs(rk4.trace - 1.0))
        checks.append(
            {
                "n_total": n,
                "cases": cases,
                "max_abs_deviation": worst,
                "max_trace_drift": worst_trace,
                "tolerance": tol,
                "passed": worst <= tol and worst_trace <= 1e-9,
            }
        )
    # phase coherence law through the integrator, N = max
    n = max(n_values)
    params = dyn.ModelParams(n, 1, u_over_hbar=1.0)
    ts = np.linspace(0, 2 * math.pi, 25)
    rhos = dyn.integrate_series(DensityMatrix.from_state(st.phase_state(n, 0.3)), params, ts)
    dev = max(
        abs(abs(expectation([adag_L, a_R], r)) - abs(dyn.phase_coherence_closed_form(params, 0.3, t)))
        for r, t in zip(rhos, ts)
    )
    checks.append({"check": "phase_coherence_law", "n_total": n, "max_abs_deviation": dev, "tolerance": 1e-10, "passed": dev <= 1e-10})
    return {"seed": seed, "checks": checks, "passed": all(c["passed"] for c in checks)}


def cmd_validate(cfg: dict, ctx: dict) -> dict[str, str]:
    _reject_unknown(cfg, "", {"n_values", "cases_per_n", "tolerance"})
    n_values = _get(cfg, "n_values", "", "list", [2, 4, 6])
    for i, v in enumerate(n_values):
        if not (isinstance(v, int) and not isinstance(v, bool) and 1 <= v <= 12):
            raise ConfigError(f"n_values[{i}]", "must be an integer in 1..12")
    cases = _get(cfg, "cases_per_n", "", "int", 5, lambda v: v >= 1, "must be >= 1")
    tol = _get(cfg, "tolerance", "", "number", 1e-8, _pos, "must be > 0")
    report = run_validation(n_values, cases, ctx["seed"], tol)
    ctx["failed"] = not report["passed"]
    return {"validate.json": json_text({"command": "validate", **report})}


COMMANDS = {
    "evolve": cmd_evolve,
    "bounds": cmd_bounds,
    "rates": cmd_rates,
    "gamma-bar": cmd_gamma_bar,
    "momentum": cmd_momentum,
    "validate": cmd_validate,
}


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("BJJ_CSL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("BJJ_CSL_THREADS", "must be an integer") from None
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bjj-csl", description="CSL collapse in Bose Josephson junctions")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="JSON scenario file (optional for validate)")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (env BJJ_CSL_THREADS)")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (u64)")
    return parser


def _fail(code: int, kind: str, message: str, path: str | None = None) -> int:
    err = {"error": kind, "message": message}
    if path is not None:
        err["path"] = path
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def run_scenario(command: str, cfg: dict, out: Path, threads: int = 1, seed: int = 0) -> int:
    """Run one command on a parsed config, writing files into ``out``; returns the exit code."""
    if not isinstance(cfg, dict):
        return _fail(EXIT_CONFIG, "schema", "config must be a JSON object", "")
    if "command" in cfg:
        if cfg["command"] != command:
            return _fail(EXIT_CONFIG, "schema", f"config is for {cfg['command']!r}, not {command!r}", "command")
        cfg = {k: v for k, v in cfg.items() if k != "command"}
    if not 0 <= seed < 2**64:
        return _fail(EXIT_CONFIG, "schema", "seed must be an unsigned 64-bit integer", "--seed")
    ctx = {"threads": max(1, threads), "seed": seed, "failed": False}
    try:
        files = COMMANDS[command](cfg, ctx)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "schema", exc.message, exc.path)
    except DomainError as exc:
        return _fail(EXIT_CONFIG, "domain", str(exc))
    except (NumericalError, FloatingPointError, OverflowError) as exc:
        return _fail(EXIT_NUMERICAL, "numerical", str(exc))
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    if ctx["failed"]:
        return _fail(EXIT_NUMERICAL, "validation", "one or more oracle checks failed; see validate.json")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = _threads(args.threads)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "schema", exc.message, exc.path)
    if args.config is None:
        if args.command != "validate":
            return _fail(EXIT_CONFIG, "schema", "--config is required", "--config")
        cfg: Any = {}
    else:
        try:
            cfg = json.loads(args.config.read_text())
        except OSError as exc:
            return _fail(EXIT_CONFIG, "io", str(exc), "--config")
        except json.JSONDecodeError as exc:
            return _fail(EXIT_CONFIG, "schema", f"invalid JSON: {exc}", "")
    return run_scenario(args.command, cfg, args.out, threads, args.seed)


if __name__ == "__main__":
    sys.exit(main())
