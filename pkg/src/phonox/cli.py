"""Config-driven command line front end.

``phonox run --config cfg.json`` executes one scenario and writes
``<prefix>.timeseries.csv`` plus ``<prefix>.summary.json``;
``phonox validate --config cfg.json`` prints the cooling-condition /
bubble-classification report without producing files. Configs are strict
JSON objects; unknown keys are rejected by name. Exit codes: 0 success,
2 configuration error, 3 numerical failure (a summary is still written).
The PHONOX_RTOL environment variable overrides the integrator relative
tolerance for diagnostics.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, bubbles, exchanger, fock, rates, thermo

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

WATER_DENSITY_G_PER_M3 = 1e6  # 1000 kg/m^3

SCENARIOS = (
    "single-ion",
    "cavity-single",
    "cavity-collective",
    "thermal",
    "bubble-spectrum",
    "exchanger",
    "sweep",
    "validate",
)


class ConfigError(ValueError):
    """Configuration rejected; message names the offending key/constraint."""


@dataclass
class ScenarioConfig:
    scenario: str
    parameters: dict
    output_prefix: str
    seed: int | None


@dataclass
class RunSummary:
    scenario: str
    status: str
    exit_code: int
    parameters: dict
    headline: dict
    warnings: list
    outputs: dict

    def as_dict(self):
        return {
            "scenario": self.scenario,
            "status": self.status,
            "exit_code": self.exit_code,
            "parameters": self.parameters,
            "headline": self.headline,
            "warnings": self.warnings,
            "outputs": self.outputs,
        }


# ---------------------------------------------------------------------------
# parameter schema machinery

_REQUIRED = object()


def _check_number(name, value, minimum=None, exclusive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"parameter '{name}': expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"parameter '{name}': must be finite")
    if integer:
        if float(value) != int(value):
            raise ConfigError(f"parameter '{name}': expected an integer")
        value = int(value)
    if minimum is not None:
        if exclusive and not value > minimum:
            raise ConfigError(f"parameter '{name}': must be > {minimum}")
        if not exclusive and not value >= minimum:
            raise ConfigError(f"parameter '{name}': must be >= {minimum}")
    return value


def number(minimum=None, exclusive=False, integer=False, default=_REQUIRED):
    return (
        lambda name, v: _check_number(name, v, minimum=minimum, exclusive=exclusive, integer=integer),
        default,
    )


def number_list(minimum=None, exclusive=False, default=_REQUIRED):
    def check(name, v):
        if not isinstance(v, list) or not v:
            raise ConfigError(f"parameter '{name}': expected a non-empty list of numbers")
        return [
            _check_number(f"{name}[{i}]", x, minimum=minimum, exclusive=exclusive)
            for i, x in enumerate(v)
        ]

    return (check, default)


def string(choices=None, default=_REQUIRED):
    def check(name, v):
        if not isinstance(v, str):
            raise ConfigError(f"parameter '{name}': expected a string")
        if choices and v not in choices:
            raise ConfigError(f"parameter '{name}': must be one of {sorted(choices)}")
        return v

    return (check, default)


def obj(default=_REQUIRED):
    def check(name, v):
        if not isinstance(v, dict):
            raise ConfigError(f"parameter '{name}': expected an object")
        return v

    return (check, default)


def _apply_schema(scenario, schema, raw):
    for key in raw:
        if key not in schema:
            raise ConfigError(f"unknown parameter '{key}' for scenario '{scenario}'")
    resolved = {}
    for key, (check, default) in schema.items():
        if key in raw:
            resolved[key] = check(key, raw[key])
        elif default is _REQUIRED:
            raise ConfigError(f"missing required parameter '{key}' for scenario '{scenario}'")
        elif default is not None:
            resolved[key] = default
        else:
            resolved[key] = None
    return resolved


_ORACLE_ATOM = {"phonon_cutoff": number(minimum=1, integer=True, default=20)}
_ORACLE_CAVITY = {
    "phonon_cutoff": number(minimum=1, integer=True, default=15),
    "photon_cutoff": number(minimum=1, integer=True, default=15),
}

_SINGLE_ION_KEYS = {
    "g": number(minimum=0.0),
    "gamma": number(minimum=0.0),
    "nu": number(minimum=0.0, exclusive=True),
    "omega0": number(),
    "omega_laser": number(),
}
_CAVITY_KEYS = {
    "g_eff": number(minimum=0.0),
    "kappa": number(minimum=0.0),
    "nu": number(minimum=0.0, exclusive=True),
    "delta_cav": number(),
}
_BUBBLE_KEYS = {
    "kappa": number(minimum=0.0),
    "nu_max": number(minimum=0.0, exclusive=True),
    "laser_frequency": number(minimum=0.0, exclusive=True),
    "mode_index": number(minimum=1, integer=True),
    "band_tolerance": number(minimum=0.0, exclusive=True, default=0.5),
    "refractive_index": number(minimum=0.0, exclusive=True, default=1.0),
    "diameters": number_list(minimum=0.0, exclusive=True, default=None),
    "diameter_mean": number(minimum=0.0, exclusive=True, default=None),
    "diameter_spread": number(minimum=0.0, default=None),
    "diameter_count": number(minimum=1, integer=True, default=None),
}
_EXCHANGER_KEYS = {
    "liquid_mass": number(minimum=0.0, exclusive=True),
    "heat_capacity": number(minimum=0.0, exclusive=True),
    "initial_temperature": number(minimum=0.0, exclusive=True),
    "n_atoms": number(minimum=1, integer=True),
    "emission_rate": number(minimum=0.0, exclusive=True),
    "nu_max": number(minimum=0.0, exclusive=True),
    "cooling_rate": number(minimum=0.0),
    "thermal_coupling_time": number(minimum=0.0, exclusive=True),
    "stage_period": number(minimum=0.0, exclusive=True, default=25e-6),
    "cooling_fraction": number(minimum=0.0, exclusive=True, default=0.02),
    "floor_temperature": number(minimum=0.0, exclusive=True, default=1e-3),
}

_SCHEMAS = {
    "single-ion": {
        **_SINGLE_ION_KEYS,
        "m0": number(minimum=0.0, default=2.0),
        "s0": number(minimum=0.0, default=0.0),
        "k1_0": number(default=0.0),
        "t_final": number(minimum=0.0, exclusive=True),
        "dt_observe": number(minimum=0.0, exclusive=True, default=None),
        "oracle": obj(default=None),
    },
    "cavity-single": {
        **_CAVITY_KEYS,
        "m0": number(minimum=0.0, default=1.0),
        "n0": number(minimum=0.0, default=0.0),
        "k1_0": number(default=0.0),
        "t_final": number(minimum=0.0, exclusive=True),
        "dt_observe": number(minimum=0.0, exclusive=True, default=None),
        "oracle": obj(default=None),
    },
    "cavity-collective": {
        **_CAVITY_KEYS,
        "n_atoms": number(minimum=1, integer=True),
        "per_atom_couplings": number_list(minimum=0.0, default=None),
        "m0": number(minimum=0.0, default=1.0),
        "n0": number(minimum=0.0, default=0.0),
        "k1_0": number(default=0.0),
        "t_final": number(minimum=0.0, exclusive=True),
        "dt_observe": number(minimum=0.0, exclusive=True, default=None),
        "oracle": obj(default=None),
    },
    "thermal": {
        "temperature": number_list(minimum=0.0, exclusive=True),
        "nu": number(minimum=0.0, exclusive=True),
        "nu_eff": number(minimum=0.0, exclusive=True, default=None),
        "n_atoms": number(minimum=1, integer=True, default=1),
    },
    "bubble-spectrum": _BUBBLE_KEYS,
    "exchanger": {
        **_EXCHANGER_KEYS,
        "duration": number(minimum=0.0, exclusive=True),
        "delta_T": number(minimum=0.0, default=1.0),
        "expected_seconds_per_kelvin": number(minimum=0.0, exclusive=True, default=None),
        "liquid_volume_m3": number(minimum=0.0, exclusive=True, default=None),
    },
    "sweep": {
        "base": obj(),
        "grid": (
            lambda name, v: v
            if isinstance(v, list) and v and all(isinstance(e, dict) for e in v)
            else (_ for _ in ()).throw(
                ConfigError(f"parameter '{name}': expected a non-empty list of objects")
            ),
            _REQUIRED,
        ),
        "delta_T": number(minimum=0.0, default=1.0),
    },
    "validate": {
        "target": string(choices={"single-ion", "cavity", "bubbles"}),
        "tolerance_band": number(minimum=0.0, exclusive=True, default=0.5),
        **{k: (check, None) for k, (check, _) in _SINGLE_ION_KEYS.items()},
        **{k: (check, None) for k, (check, _) in _CAVITY_KEYS.items()},
        **{k: (check, None) for k, (check, _) in _BUBBLE_KEYS.items()},
        "n_atoms": number(minimum=1, integer=True, default=1),
    },
}

# "temperature" accepts a single number as shorthand for a one-element list
def _normalise_thermal(raw):
    raw = dict(raw)
    if isinstance(raw.get("temperature"), (int, float)) and not isinstance(
        raw.get("temperature"), bool
    ):
        raw["temperature"] = [raw["temperature"]]
    return raw


def load_config(path):
    """Read and validate a scenario config; returns ScenarioConfig.

    Raises ConfigError naming the offending key/constraint on any problem.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config file is not valid UTF-8: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")

    allowed = {"scenario", "parameters", "output_prefix", "seed"}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown top-level key '{key}'")
    scenario = data.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown or missing scenario {scenario!r}; expected one of {list(SCENARIOS)}")
    raw_params = data.get("parameters")
    if not isinstance(raw_params, dict):
        raise ConfigError("missing or invalid 'parameters' object")
    if scenario == "thermal":
        raw_params = _normalise_thermal(raw_params)
    params = _apply_schema(scenario, _SCHEMAS[scenario], raw_params)
    _cross_validate(scenario, params)

    prefix = data.get("output_prefix", scenario)
    if not isinstance(prefix, str) or not prefix:
        raise ConfigError("output_prefix must be a non-empty string")
    seed = data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigError("seed must be an integer")
    return ScenarioConfig(scenario=scenario, parameters=params, output_prefix=prefix, seed=seed)


def _cross_validate(scenario, params):
    if scenario in ("single-ion", "cavity-single", "cavity-collective"):
        if params["dt_observe"] is None:
            params["dt_observe"] = params["t_final"] / 200.0
        if params["dt_observe"] > params["t_final"]:
            raise ConfigError("parameter 'dt_observe': must not exceed t_final")
        if params["oracle"] is not None:
            schema = _ORACLE_ATOM if scenario == "single-ion" else _ORACLE_CAVITY
            params["oracle"] = _apply_schema(scenario, schema, params["oracle"])
            if params.get("s0", 0.0) != 0.0 or params.get("n0", 0.0) != 0.0 or params["k1_0"] != 0.0:
                raise ConfigError(
                    "parameter 'oracle': cross-checks start from phonons only (s0/n0 and k1_0 = 0)"
                )
            if not float(params["m0"]).is_integer():
                raise ConfigError(
                    "parameter 'oracle': cross-checks need an integer m0 (a pure phonon level)"
                )
            if params["m0"] > params["oracle"]["phonon_cutoff"]:
                raise ConfigError("parameter 'm0': must not exceed the oracle phonon_cutoff")
    if scenario == "bubble-spectrum" or (scenario == "validate" and params.get("target") == "bubbles"):
        explicit = params.get("diameters") is not None
        sampled = params.get("diameter_mean") is not None
        if explicit == sampled:
            raise ConfigError(
                "exactly one of 'diameters' or 'diameter_mean'/'diameter_spread'/'diameter_count' is required"
            )
        if sampled and (params.get("diameter_spread") is None or params.get("diameter_count") is None):
            raise ConfigError("sampled diameters need 'diameter_spread' and 'diameter_count'")
    if scenario == "validate":
        needed = {
            "single-ion": ("g", "gamma", "nu", "omega0", "omega_laser"),
            "cavity": ("g_eff", "kappa", "nu", "delta_cav"),
            "bubbles": ("kappa", "nu_max", "laser_frequency", "mode_index"),
        }[params["target"]]
        for key in needed:
            if params.get(key) is None:
                raise ConfigError(f"missing required parameter '{key}' for validate target '{params['target']}'")


# ---------------------------------------------------------------------------
# scenario runners: each returns (columns, rows, headline, warnings)


def _headline(value, unit):
    return {"value": value, "unit": unit}


def _observation_times(t_final, dt_observe):
    n = int(math.floor(t_final / dt_observe + 1e-9))
    return dt_observe * np.arange(n + 1)


def _condition_warnings(report):
    warnings = []
    for check in report.checks:
        if not check.passed:
            warnings.append(f"cooling condition failed: {check.description} (value {check.value:.6g})")
    if not report.cooling_side:
        warnings.append(f"laser is on the {report.detuning_side} side of the resonance (heating side)")
    return warnings


def _oracle_initial_state(space, m0):
    return fock.DensityMatrix.pure(space, int(m0))


def _run_single_ion(params, rtol):
    p = rates.SingleIonParams(
        g=params["g"],
        gamma=params["gamma"],
        nu=params["nu"],
        omega0=params["omega0"],
        omega_laser=params["omega_laser"],
    )
    times = _observation_times(params["t_final"], params["dt_observe"])
    state0 = rates.RateStateAtom(m=params["m0"], s=params["s0"], k1=params["k1_0"])
    traj = rates.integrate_single_ion(state0, p, times, rtol=rtol)

    columns = ["time_s", "mean_phonons", "excited_population", "coherence"]
    rows = [[float(t), traj[i, 0], traj[i, 1], traj[i, 2]] for i, t in enumerate(times)]
    headline = {"final_mean_phonons": _headline(traj[-1, 0], "phonons")}
    if p.gamma > 0:
        headline["formula_cooling_rate"] = _headline(rates.cooling_rate_single(p), "rad/s")
    try:
        headline["fitted_decay_rate"] = _headline(
            rates.fit_decay_rate(times, traj[:, 0]), "rad/s"
        )
    except (ValueError, FloatingPointError):
        pass
    warnings = _condition_warnings(rates.validate_cooling_conditions(p))

    if params["oracle"] is not None:
        space = fock.FockSpace(phonon_cutoff=params["oracle"]["phonon_cutoff"])
        model = fock.build_atom_phonon_model(p.g, p.gamma, space)
        rho0 = _oracle_initial_state(space, params["m0"])
        snapshots = fock.evolve(model, rho0, float(times[-1]), params["dt_observe"], rtol=rtol)
        n_op = fock.phonon_number(space)
        s_op = fock.atom_excitation(space)
        sigma, b = fock.atom_lowering(space), fock.phonon_lowering(space)
        k_op = 1j * (sigma @ b.dag() - sigma.dag() @ b)
        columns += ["oracle_mean_phonons", "oracle_excited_population", "oracle_coherence"]
        tail = 0.0
        for i, (_, state) in enumerate(snapshots):
            rows[i] += [
                fock.expectation(n_op, state).real,
                fock.expectation(s_op, state).real,
                fock.expectation(k_op, state).real,
            ]
            tail = max(tail, state.top_level_populations()[0])
        dev = max(abs(r[1] - r[4]) for r in rows)
        headline["oracle_max_deviation_mean_phonons"] = _headline(dev, "phonons")
        headline["oracle_truncation_tail"] = _headline(tail, "probability")
        if tail > 1e-9:
            warnings.append(f"oracle truncation tail reached {tail:.3e}")
    return columns, rows, headline, warnings


def _run_cavity(params, rtol, collective):
    kwargs = dict(
        g_eff=params["g_eff"],
        kappa=params["kappa"],
        nu=params["nu"],
        delta_cav=params["delta_cav"],
    )
    if collective:
        kwargs["n_atoms"] = params["n_atoms"]
        if params["per_atom_couplings"] is not None:
            kwargs["per_atom_couplings"] = tuple(params["per_atom_couplings"])
    p = rates.CavityParams(**kwargs)
    times = _observation_times(params["t_final"], params["dt_observe"])
    state0 = rates.RateStateCavity(m=params["m0"], n=params["n0"], k1=params["k1_0"])
    traj = rates.integrate_cavity(state0, p, times, rtol=rtol)

    columns = ["time_s", "mean_phonons", "mean_photons", "coherence"]
    rows = [[float(t), traj[i, 0], traj[i, 1], traj[i, 2]] for i, t in enumerate(times)]
    headline = {
        "final_mean_phonons": _headline(traj[-1, 0], "phonons"),
        "final_mean_photons": _headline(traj[-1, 1], "photons"),
    }
    if p.kappa > 0:
        name = "collective_cooling_rate" if collective else "formula_cooling_rate"
        headline[name] = _headline(rates.cooling_rate_collective(p), "rad/s")
    try:
        headline["fitted_decay_rate"] = _headline(rates.fit_decay_rate(times, traj[:, 0]), "rad/s")
    except (ValueError, FloatingPointError):
        pass
    warnings = _condition_warnings(rates.validate_cooling_conditions(p))

    if params["oracle"] is not None:
        space = fock.FockSpace(
            phonon_cutoff=params["oracle"]["phonon_cutoff"],
            photon_cutoff=params["oracle"]["photon_cutoff"],
            atom_levels=None,
        )
        model = fock.build_phonon_photon_model(p.mode_coupling(), p.kappa, space)
        rho0 = _oracle_initial_state(space, params["m0"])
        snapshots = fock.evolve(model, rho0, float(times[-1]), params["dt_observe"], rtol=rtol)
        nb = fock.phonon_number(space)
        nc = fock.photon_number(space)
        b, c = fock.phonon_lowering(space), fock.photon_lowering(space)
        k_op = 1j * (b @ c.dag() - b.dag() @ c)
        columns += ["oracle_mean_phonons", "oracle_mean_photons", "oracle_coherence"]
        tail = 0.0
        for i, (_, state) in enumerate(snapshots):
            rows[i] += [
                fock.expectation(nb, state).real,
                fock.expectation(nc, state).real,
                fock.expectation(k_op, state).real,
            ]
            tops = state.top_level_populations()
            tail = max(tail, tops[0], tops[1])
        dev = max(abs(r[1] - r[4]) for r in rows)
        headline["oracle_max_deviation_mean_phonons"] = _headline(dev, "phonons")
        headline["oracle_truncation_tail"] = _headline(tail, "probability")
        if tail > 1e-9:
            warnings.append(f"oracle truncation tail reached {tail:.3e}")
    return columns, rows, headline, warnings


def _run_thermal(params, rtol):
    columns = [
        "temperature_K",
        "lambda",
        "lambda_eff",
        "partition_function",
        "mean_phonons",
        "mean_energy_J",
        "thermalised_occupation",
    ]
    rows = []
    for temp in params["temperature"]:
        tp = thermo.ThermalParams(temperature=temp, nu=params["nu"], nu_eff=params["nu_eff"])
        state = thermo.thermal_state(tp)
        occu = thermo.thermalise_gas(params["n_atoms"], tp)
        rows.append(
            [temp, tp.lam, tp.lam_eff, state.partition_function, state.mean_phonons,
             state.mean_energy, occu]
        )
    headline = {
        "mean_phonons": _headline(rows[0][4], "phonons"),
        "mean_energy": _headline(rows[0][5], "J"),
        "total_mean_energy": _headline(params["n_atoms"] * rows[0][5], "J"),
    }
    return columns, rows, headline, []


def _bubble_ensemble(params, seed):
    if params["diameters"] is not None:
        diameters = params["diameters"]
    else:
        diameters = bubbles.sample_diameters(
            params["diameter_mean"], params["diameter_spread"], params["diameter_count"], seed
        )
    specs = tuple(bubbles.BubbleSpec(d_min=d, kappa=params["kappa"], nu_max=params["nu_max"]) for d in diameters)
    return bubbles.BubbleEnsemble(
        bubbles=specs,
        laser_frequency=params["laser_frequency"],
        mode_index=params["mode_index"],
        refractive_index=params["refractive_index"],
    )


def _run_bubbles(params, seed):
    ensemble = _bubble_ensemble(params, seed)
    report = bubbles.classify_bubbles(ensemble, band_tolerance=params["band_tolerance"])
    band = bubbles.frequency_band(ensemble)
    columns = ["d_min_m", "mode_index", "omega_cav_rad_per_s", "lambda_cav_m", "delta_cav_rad_per_s", "label"]
    rows = [
        [a.d_min, ensemble.mode_index, a.omega_cav, a.lambda_cav, a.delta_cav, a.label.value]
        for a in report.assessments
    ]
    headline = {
        "band_low": _headline(band.low, "rad/s"),
        "band_high": _headline(band.high, "rad/s"),
        "band_gap_above": _headline(band.gap_above, "rad/s"),
        "ensemble_safe": _headline(report.safe, "flag"),
    }
    if band.gap_below is not None:
        headline["band_gap_below"] = _headline(band.gap_below, "rad/s")
    warnings = []
    n_heat = sum(1 for a in report.assessments if a.label is bubbles.BubbleLabel.HEATING_RISK)
    if n_heat:
        warnings.append(f"{n_heat} bubble(s) on the heating side; ensemble unsafe")
    return columns, rows, headline, warnings


def _exchanger_config(params):
    kwargs = {k: params[k] for k in _EXCHANGER_KEYS}
    try:
        return exchanger.ExchangerConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _run_exchanger(params):
    cfg = _exchanger_config(params)
    estimate = exchanger.estimate_cooling(cfg, params["delta_T"])
    trace = exchanger.run_exchanger(cfg, params["duration"])
    columns = [
        "time_s",
        "stage",
        "gas_temperature_K",
        "reservoir_temperature_K",
        "b_mode_occupation",
        "cumulative_photons",
        "cumulative_heat_removed_J",
    ]
    rows = [
        [r.time, r.stage, r.gas_temperature, r.reservoir_temperature, r.b_mode_occupation,
         r.cumulative_photons, r.cumulative_heat_removed]
        for r in trace.records
    ]
    final = trace.final
    headline = {
        "seconds_per_kelvin": _headline(estimate.seconds_per_kelvin, "s/K"),
        "cooling_time": _headline(estimate.cooling_time, "s"),
        "photons_needed": _headline(estimate.photons_needed, "photons"),
        "heat_removed_budget": _headline(estimate.heat_removed, "J"),
        "final_reservoir_temperature": _headline(final.reservoir_temperature, "K"),
        "final_gas_temperature": _headline(final.gas_temperature, "K"),
        "cumulative_photons": _headline(final.cumulative_photons, "photons"),
    }
    warnings = []
    ref = params["expected_seconds_per_kelvin"]
    if ref is not None:
        diff = abs(estimate.seconds_per_kelvin - ref) / ref
        if diff > 1e-3:
            warnings.append(
                f"recomputed cooling rate {estimate.seconds_per_kelvin:.6g} s/K differs from the "
                f"configured reference {ref:.6g} s/K by {100 * diff:.1f}%"
            )
    volume = params["liquid_volume_m3"]
    if volume is not None:
        implied = volume * WATER_DENSITY_G_PER_M3
        if abs(implied - cfg.liquid_mass) / implied > 1e-2:
            warnings.append(
                f"liquid_mass {cfg.liquid_mass:g} g is inconsistent with liquid_volume_m3 "
                f"{volume:g} m^3 at water density (expected {implied:g} g)"
            )
    return columns, rows, headline, warnings


def _run_sweep(params):
    base = params["base"]
    merged = []
    for i, override in enumerate(params["grid"]):
        entry = dict(base)
        entry.update(override)
        for key in entry:
            if key not in _EXCHANGER_KEYS:
                raise ConfigError(f"unknown parameter '{key}' in sweep entry {i}")
        merged.append(entry)
    results = exchanger.sweep(merged, params["delta_T"])
    columns = [
        "index",
        "liquid_mass_g",
        "heat_capacity_J_per_gK",
        "n_atoms",
        "emission_rate_per_s",
        "nu_max_per_s",
        "photons_needed",
        "cooling_time_s",
        "seconds_per_kelvin",
        "heat_removed_J",
        "error",
    ]
    rows = []
    best = None
    for entry in results:
        if entry.error is None:
            cfg, est = entry.config, entry.estimate
            rows.append(
                [entry.index, cfg.liquid_mass, cfg.heat_capacity, cfg.n_atoms, cfg.emission_rate,
                 cfg.nu_max, est.photons_needed, est.cooling_time, est.seconds_per_kelvin,
                 est.heat_removed, ""]
            )
            if best is None:
                best = est.seconds_per_kelvin
        else:
            rows.append([entry.index, "", "", "", "", "", "", "", "", "", entry.error])
    headline = {}
    if best is not None:
        headline["best_seconds_per_kelvin"] = _headline(best, "s/K")
    warnings = [f"sweep entry {e.index} rejected: {e.error}" for e in results if e.error]
    return columns, rows, headline, warnings


def _validation_report(params, seed):
    target = params["target"]
    if target == "bubbles":
        ensemble = _bubble_ensemble(params, seed)
        report = bubbles.classify_bubbles(ensemble, band_tolerance=params["tolerance_band"])
        columns = ["check", "value", "passed"]
        rows = [
            [f"bubble[{i}]:{a.label.value}", a.delta_cav, a.label is not bubbles.BubbleLabel.HEATING_RISK]
            for i, a in enumerate(report.assessments)
        ]
        rows.append(["ensemble-safe", float(report.safe), report.safe])
        headline = {"ensemble_safe": _headline(report.safe, "flag")}
        return columns, rows, headline, []
    if target == "single-ion":
        p = rates.SingleIonParams(
            g=params["g"], gamma=params["gamma"], nu=params["nu"],
            omega0=params["omega0"], omega_laser=params["omega_laser"],
        )
    else:
        p = rates.CavityParams(
            g_eff=params["g_eff"], kappa=params["kappa"], nu=params["nu"],
            delta_cav=params["delta_cav"], n_atoms=params["n_atoms"],
        )
    report = rates.validate_cooling_conditions(p, tolerance_band=params["tolerance_band"])
    columns = ["check", "value", "passed"]
    rows = [[c.name, c.value, c.passed] for c in report.checks]
    rows.append([f"detuning-side:{report.detuning_side}", report.detuning, report.cooling_side])
    headline = {"all_conditions_passed": _headline(report.all_passed, "flag")}
    return columns, rows, headline, _condition_warnings(report)


# ---------------------------------------------------------------------------
# output plumbing


def _csv_text(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _integrator_rtol():
    raw = os.environ.get("PHONOX_RTOL")
    if raw is None:
        return fock.DEFAULT_RTOL
    try:
        value = float(raw)
    except ValueError as exc:
        raise ConfigError(f"PHONOX_RTOL is not a number: {raw!r}") from exc
    if not 0 < value < 1:
        raise ConfigError("PHONOX_RTOL must be in (0, 1)")
    return value


def run_scenario(cfg):
    """Execute a validated scenario; writes the CSV and summary files.

    Returns the RunSummary. Numerical failures (truncation overflow, step
    failure) still produce a summary file with the failure reason and map to
    exit code 3.
    """
    rtol = _integrator_rtol()
    runners = {
        "single-ion": lambda: _run_single_ion(cfg.parameters, rtol),
        "cavity-single": lambda: _run_cavity(cfg.parameters, rtol, collective=False),
        "cavity-collective": lambda: _run_cavity(cfg.parameters, rtol, collective=True),
        "thermal": lambda: _run_thermal(cfg.parameters, rtol),
        "bubble-spectrum": lambda: _run_bubbles(cfg.parameters, cfg.seed),
        "exchanger": lambda: _run_exchanger(cfg.parameters),
        "sweep": lambda: _run_sweep(cfg.parameters),
        "validate": lambda: _validation_report(cfg.parameters, cfg.seed),
    }
    prefix = Path(cfg.output_prefix)
    csv_path = prefix.parent / (prefix.name + ".timeseries.csv")
    summary_path = prefix.parent / (prefix.name + ".summary.json")

    echoed = dict(cfg.parameters)
    echoed["rtol"] = rtol
    if cfg.seed is not None:
        echoed["seed"] = cfg.seed

    try:
        columns, rows, headline, warnings = runners[cfg.scenario]()
    except (fock.TruncationOverflow, fock.StepFailure) as exc:
        summary = RunSummary(
            scenario=cfg.scenario,
            status="numerical-failure",
            exit_code=EXIT_NUMERICAL,
            parameters=echoed,
            headline={},
            warnings=[f"{type(exc).__name__}: {exc}"],
            outputs={},
        )
        _atomic_write(summary_path, json.dumps(summary.as_dict(), indent=2) + "\n")
        return summary

    summary = RunSummary(
        scenario=cfg.scenario,
        status="ok",
        exit_code=EXIT_OK,
        parameters=echoed,
        headline=headline,
        warnings=warnings,
        outputs={"timeseries_csv": str(csv_path), "summary_json": str(summary_path)},
    )
    _atomic_write(csv_path, _csv_text(columns, rows))
    _atomic_write(summary_path, json.dumps(summary.as_dict(), indent=2) + "\n")
    return summary


# ---------------------------------------------------------------------------
# entry points


def _cmd_run(args):
    try:
        cfg = load_config(args.config)
        if args.output_prefix is not None:
            cfg.output_prefix = args.output_prefix
        if args.seed is not None:
            cfg.seed = args.seed
        summary = run_scenario(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for warning in summary.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    for name, entry in summary.headline.items():
        print(f"{name}: {entry['value']} {entry['unit']}")
    return summary.exit_code


def _cmd_validate(args):
    try:
        cfg = load_config(args.config)
        params = cfg.parameters
        scenario = cfg.scenario
        if scenario in ("single-ion", "cavity-single", "cavity-collective"):
            target = "single-ion" if scenario == "single-ion" else "cavity"
            params = dict(params, target=target, tolerance_band=0.5)
            if target == "cavity":
                params.setdefault("n_atoms", 1)
            columns, rows, headline, warnings = _validation_report(params, cfg.seed)
        elif scenario == "bubble-spectrum":
            params = dict(params, target="bubbles", tolerance_band=params["band_tolerance"])
            columns, rows, headline, warnings = _validation_report(params, cfg.seed)
        elif scenario == "validate":
            columns, rows, headline, warnings = _validation_report(params, cfg.seed)
        else:
            raise ConfigError(f"scenario '{scenario}' has no validation surface")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for row in rows:
        status = "PASS" if row[-1] else "FAIL"
        print(f"{status}  {row[0]} (value {row[1]:.6g})" if isinstance(row[1], float) else f"{status}  {row[0]}")
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phonox",
        description="Laser-cooling rate models, Lindblad oracles, bubble optics and the staged heat exchanger.",
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario config and write CSV + summary")
    run_p.add_argument("--config", required=True, help="path to the JSON scenario config")
    run_p.add_argument("--output-prefix", default=None, help="override the config's output prefix")
    run_p.add_argument("--seed", type=int, default=None, help="override the config's RNG seed")
    run_p.set_defaults(func=_cmd_run)

    val_p = sub.add_parser("validate", help="run the cooling-condition / bubble checks only")
    val_p.add_argument("--config", required=True, help="path to the JSON scenario config")
    val_p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
