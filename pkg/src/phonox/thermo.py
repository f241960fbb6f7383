"""Thermal-state quantities of a quantum harmonic oscillator and the
gas-rethermalisation step used between cooling stages."""

from __future__ import annotations

import math
from dataclasses import dataclass

K_BOLTZMANN = 1.380649e-23  # J/K
HBAR = 1.054571817e-34  # J s

LAMBDA_MIN = 1e-12  # below this the closed forms are not validated
LAMBDA_OVERFLOW = 700.0  # above this the occupation deliberately underflows to 0


@dataclass(frozen=True)
class ThermalParams:
    """Temperature and phonon frequency of a trapped oscillator.

    ``nu_eff`` is the collision-enhanced effective frequency felt during
    thermalisation stages; it defaults to ``nu`` (no collision model is
    assumed). The dimensionless ratios lam = hbar nu / (kB T) are computed
    on access, never stored.
    """

    temperature: float
    nu: float
    nu_eff: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.temperature) and self.temperature > 0):
            raise ValueError("temperature must be finite and > 0")
        if not (math.isfinite(self.nu) and self.nu > 0):
            raise ValueError("nu must be finite and > 0")
        if self.nu_eff is None:
            object.__setattr__(self, "nu_eff", self.nu)
        elif not (math.isfinite(self.nu_eff) and self.nu_eff > 0):
            raise ValueError("nu_eff must be finite and > 0")
        for lam in (self.lam, self.lam_eff):
            if lam < LAMBDA_MIN:
                raise ValueError(
                    f"hbar*nu/(kB*T) = {lam:.3e} is below the validated range ({LAMBDA_MIN:g})"
                )

    @property
    def lam(self):
        return HBAR * self.nu / (K_BOLTZMANN * self.temperature)

    @property
    def lam_eff(self):
        return HBAR * self.nu_eff / (K_BOLTZMANN * self.temperature)


@dataclass(frozen=True)
class ThermalState:
    partition_function: float
    mean_energy: float  # J
    mean_phonons: float


def bose_occupation(lam):
    """Mean occupation 1/(e^lam - 1), evaluated as e^-lam/(1 - e^-lam) so it
    underflows cleanly to 0 for lam > ~700 instead of overflowing."""
    if not lam > 0:
        raise ValueError("lam must be > 0")
    if lam > LAMBDA_OVERFLOW:
        return 0.0
    return math.exp(-lam) / (-math.expm1(-lam))


def thermal_state(p):
    """Partition function, mean energy and mean phonon number of one
    oscillator at the given temperature and frequency.

    Z = e^{-lam/2} / (1 - e^{-lam}), m = 1/(e^lam - 1), <H> = hbar nu (m + 1/2).
    """
    lam = p.lam
    z = math.exp(-0.5 * lam) / (-math.expm1(-lam))
    m = bose_occupation(lam)
    energy = HBAR * p.nu * (m + 0.5)
    return ThermalState(partition_function=z, mean_energy=energy, mean_phonons=m)


def thermalise_gas(n_atoms, p):
    """Per-atom mean phonon number after complete rethermalisation.

    Elastic collisions restore the gas to a product of identical single-atom
    thermal states at the effective frequency, so every atom carries
    m_i = 1/(e^{lam_eff} - 1) and any previously depleted collective mode is
    repopulated to the same occupation (uniform couplings). The result does
    not depend on prior depletion.
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    return bose_occupation(p.lam_eff)


def temperature_from_mean_phonons(m, nu):
    """Invert the thermal occupation: T = hbar nu / (kB ln(1 + 1/m)).

    Round-trips thermal_state to 1e-10 relative. Requires m > 0 (no finite
    positive temperature reproduces m = 0).
    """
    if not m > 0:
        raise ValueError("mean phonon number must be > 0")
    if not nu > 0:
        raise ValueError("nu must be > 0")
    return HBAR * nu / (K_BOLTZMANN * math.log1p(1.0 / m))


def oscillator_heat_capacity(temperature, nu):
    """d<H>/dT of one quantum oscillator: kB lam^2 e^-lam / (1 - e^-lam)^2.

    Approaches kB in the classical limit lam -> 0 and vanishes in the
    frozen-out limit. Returns 0.0 for temperature <= 0.
    """
    if temperature <= 0:
        return 0.0
    lam = HBAR * nu / (K_BOLTZMANN * temperature)
    if lam > LAMBDA_OVERFLOW:
        return 0.0
    ratio = math.exp(-lam) / (-math.expm1(-lam)) ** 2
    return K_BOLTZMANN * lam * lam * ratio
