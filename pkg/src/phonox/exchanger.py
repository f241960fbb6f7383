"""Staged heat-exchanger protocol and the closed-form photon-budget estimate.

The simulated period alternates a collapse (cooling) stage, during which the
collective vibrational mode of the trapped gas is drained into photons at a
throttled rate, and an expansion (thermalisation) stage, during which the
surrounding liquid reheats the gas and repopulates the collective mode.

Modelling choices (the source estimates leave these open):
  * The gas is mean-field uniform: the collective-mode occupation equals the
    per-atom mean phonon number, so a drain Delta-m emits
    n_atoms * Delta-m photons of energy hbar*nu_max each.
  * The drain obeys dm/dt = -min(cooling_rate * m, emission_rate), which
    makes the per-atom photon rate ceiling exact by construction.
  * Liquid and gas exchange heat only during thermalisation, relaxing toward
    their energy-weighted common temperature with the configured time
    constant. The gas's heat capacity is that of n_atoms quantum oscillators
    at nu_max; the liquid uses heat_capacity * liquid_mass. Bookkeeping is
    done in occupation space so the exchange conserves energy to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .thermo import (
    HBAR,
    K_BOLTZMANN,
    LAMBDA_OVERFLOW,
    bose_occupation,
    oscillator_heat_capacity,
)

COOLING = "COOLING"
THERMALISATION = "THERMALISATION"

_THERMAL_SUBSTEPS = 32
_BISECTION_ITERS = 60


@dataclass(frozen=True)
class ExchangerConfig:
    """Liquid, gas and schedule parameters of one exchanger.

    Units: liquid_mass in grams, heat_capacity in J/(g K), temperatures in
    Kelvin, emission_rate in photons per second per atom, nu_max in 1/s (it
    defines the photon energy quantum hbar*nu_max directly), cooling_rate in
    1/s, periods and time constants in seconds.
    """

    liquid_mass: float
    heat_capacity: float
    initial_temperature: float
    n_atoms: int
    emission_rate: float
    nu_max: float
    cooling_rate: float
    thermal_coupling_time: float
    stage_period: float = 25e-6
    cooling_fraction: float = 0.02
    floor_temperature: float = 1e-3

    def __post_init__(self):
        positive = (
            "liquid_mass",
            "heat_capacity",
            "initial_temperature",
            "n_atoms",
            "emission_rate",
            "nu_max",
            "thermal_coupling_time",
            "stage_period",
            "floor_temperature",
        )
        for name in positive:
            value = getattr(self, name)
            if not value > 0 or math.isnan(value):
                raise ValueError(f"{name} must be > 0")
        # cooling_rate = 0 is the no-drain (pure heat transfer) limit
        if not self.cooling_rate >= 0 or math.isnan(self.cooling_rate):
            raise ValueError("cooling_rate must be >= 0")
        if not 0.0 < self.cooling_fraction < 1.0:
            raise ValueError("cooling_fraction must be strictly between 0 and 1")
        if self.floor_temperature >= self.initial_temperature:
            raise ValueError("floor_temperature must be below initial_temperature")

    @property
    def energy_quantum(self):
        """Energy removed per photon, hbar * nu_max (J)."""
        return HBAR * self.nu_max

    @property
    def reservoir_capacity(self):
        """Heat capacity of the liquid, J/K."""
        return self.heat_capacity * self.liquid_mass


@dataclass(frozen=True)
class CoolingEstimate:
    """Closed-form photon budget for a temperature drop delta_T."""

    photons_needed: float
    cooling_time: float  # s
    seconds_per_kelvin: float  # time per Kelvin of temperature drop
    heat_removed: float  # J


@dataclass(frozen=True)
class StageRecord:
    time: float
    stage: str  # COOLING | THERMALISATION
    gas_temperature: float
    reservoir_temperature: float
    b_mode_occupation: float
    cumulative_photons: float
    cumulative_heat_removed: float


@dataclass(frozen=True)
class StageTrace:
    records: tuple
    config: ExchangerConfig

    @property
    def final(self):
        return self.records[-1]

    def of_stage(self, stage):
        return tuple(r for r in self.records if r.stage == stage)


def estimate_cooling(cfg, delta_T):
    """Photon count, time and seconds-per-Kelvin to cool the liquid by delta_T.

    heat = heat_capacity * liquid_mass * delta_T, one photon removes
    hbar*nu_max, and photons are produced at n_atoms * emission_rate; the
    seconds-per-Kelvin figure is independent of delta_T.
    """
    if delta_T < 0:
        raise ValueError("delta_T must be >= 0")
    quantum = cfg.energy_quantum
    rate = cfg.reservoir_capacity / (cfg.n_atoms * cfg.emission_rate * quantum)
    heat = cfg.reservoir_capacity * delta_T
    photons = heat / quantum
    return CoolingEstimate(
        photons_needed=photons,
        cooling_time=rate * delta_T,
        seconds_per_kelvin=rate,
        heat_removed=heat,
    )


def _occupation_at(temperature, nu):
    if temperature <= 0.0:
        return 0.0
    lam = HBAR * nu / (K_BOLTZMANN * temperature)
    if lam > LAMBDA_OVERFLOW:
        return 0.0
    return bose_occupation(lam)


def _temperature_at(m, nu):
    if m <= 0.0:
        return 0.0
    return HBAR * nu / (K_BOLTZMANN * math.log1p(1.0 / m))


def _drain(m0, cooling_rate, emission_rate, tau):
    """Occupation left after a cooling stage of length tau under
    dm/dt = -min(cooling_rate*m, emission_rate), in closed form."""
    if cooling_rate * m0 > emission_rate:
        # emission-limited: linear drain until cooling_rate*m == emission_rate
        t_lin = (m0 - emission_rate / cooling_rate) / emission_rate
        if t_lin >= tau:
            return m0 - emission_rate * tau
        return (emission_rate / cooling_rate) * math.exp(-cooling_rate * (tau - t_lin))
    return m0 * math.exp(-cooling_rate * tau)


def _common_temperature(m_gas, t_res, cfg):
    """Energy-weighted common temperature of gas and reservoir: the Tc with
    reservoir_capacity*(t_res - Tc) == n_atoms*quantum*(occ(Tc) - m_gas)."""
    quantum = cfg.energy_quantum
    c_res = cfg.reservoir_capacity

    def balance(tc):
        return c_res * (t_res - tc) - cfg.n_atoms * quantum * (_occupation_at(tc, cfg.nu_max) - m_gas)

    lo = _temperature_at(m_gas, cfg.nu_max)
    hi = t_res
    for _ in range(_BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        if balance(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def run_exchanger(cfg, duration):
    """Simulate alternating cooling and thermalisation stages.

    Returns a StageTrace with one record per stage boundary. Cooling stages
    drain the collective mode (each lost phonon of each atom is one emitted
    photon, throttled at the per-atom emission rate) and recompute the gas
    temperature from the remaining occupation; thermalisation stages move
    heat from the liquid into the gas toward the energy-weighted common
    temperature with the configured time constant, repopulating the
    collective mode. Stops early once the liquid reaches floor_temperature.
    Deterministic for fixed inputs.
    """
    if duration < cfg.stage_period:
        raise ValueError("duration must cover at least one stage_period")

    quantum = cfg.energy_quantum
    c_res = cfg.reservoir_capacity
    tau_cool = cfg.cooling_fraction * cfg.stage_period
    tau_thermal = cfg.stage_period - tau_cool
    n_periods = int(duration / cfg.stage_period + 1e-9)

    t_res = cfg.initial_temperature
    m_gas = _occupation_at(t_res, cfg.nu_max)
    photons = 0.0
    records = []

    substep = tau_thermal / _THERMAL_SUBSTEPS
    alpha = -math.expm1(-substep / cfg.thermal_coupling_time)

    for period in range(n_periods):
        # collapse: drain the collective mode into photons
        m_end = _drain(m_gas, cfg.cooling_rate, cfg.emission_rate, tau_cool)
        photons += cfg.n_atoms * (m_gas - m_end)
        m_gas = m_end
        records.append(
            StageRecord(
                time=period * cfg.stage_period + tau_cool,
                stage=COOLING,
                gas_temperature=_temperature_at(m_gas, cfg.nu_max),
                reservoir_temperature=t_res,
                b_mode_occupation=m_gas,
                cumulative_photons=photons,
                cumulative_heat_removed=photons * quantum,
            )
        )

        # expansion: liquid reheats the gas, collective mode repopulates
        for _ in range(_THERMAL_SUBSTEPS):
            t_gas = _temperature_at(m_gas, cfg.nu_max)
            if t_gas >= t_res:
                break
            c_gas = cfg.n_atoms * oscillator_heat_capacity(t_gas, cfg.nu_max)
            frac = c_res / (c_gas + c_res)
            t_target = t_gas + frac * (t_res - t_gas) * alpha
            m_new = _occupation_at(t_target, cfg.nu_max)
            heat_moved = cfg.n_atoms * quantum * (m_new - m_gas)
            t_res_new = t_res - heat_moved / c_res
            if t_res_new < t_target:
                # capacity grew across the jump; land on the exact balance point
                t_common = _common_temperature(m_gas, t_res, cfg)
                m_new = _occupation_at(t_common, cfg.nu_max)
                heat_moved = cfg.n_atoms * quantum * (m_new - m_gas)
                t_res_new = t_res - heat_moved / c_res
            m_gas = m_new
            t_res = t_res_new

        records.append(
            StageRecord(
                time=(period + 1) * cfg.stage_period,
                stage=THERMALISATION,
                gas_temperature=_temperature_at(m_gas, cfg.nu_max),
                reservoir_temperature=t_res,
                b_mode_occupation=m_gas,
                cumulative_photons=photons,
                cumulative_heat_removed=photons * quantum,
            )
        )
        if t_res <= cfg.floor_temperature:
            break

    return StageTrace(records=tuple(records), config=cfg)


@dataclass(frozen=True)
class SweepEntry:
    index: int
    config: ExchangerConfig | None
    estimate: CoolingEstimate | None
    error: str | None


def sweep(cfg_grid, delta_T):
    """Closed-form estimates over a grid of configurations.

    Entries may be ExchangerConfig instances or plain mappings of constructor
    arguments; invalid entries become per-row error markers instead of
    failing the sweep. Valid rows are sorted by seconds_per_kelvin, error
    rows follow in input order.
    """
    grid = list(cfg_grid)
    if not grid:
        raise ValueError("cfg_grid must not be empty")
    good, bad = [], []
    for idx, entry in enumerate(grid):
        try:
            cfg = entry if isinstance(entry, ExchangerConfig) else ExchangerConfig(**entry)
            est = estimate_cooling(cfg, delta_T)
        except (TypeError, ValueError) as exc:
            bad.append(SweepEntry(index=idx, config=None, estimate=None, error=str(exc)))
            continue
        good.append(SweepEntry(index=idx, config=cfg, estimate=est, error=None))
    good.sort(key=lambda e: e.estimate.seconds_per_kelvin)
    return good + bad
