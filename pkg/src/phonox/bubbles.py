"""Collapsing-bubble cavity spectrum, ensemble frequency bands, and
per-bubble cooling/heating classification for a given laser frequency."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8  # m/s, vacuum


class BubbleLabel(str, Enum):
    RESONANT_COOLING = "RESONANT_COOLING"
    OFF_RESONANT_COOLING = "OFF_RESONANT_COOLING"
    HEATING_RISK = "HEATING_RISK"


@dataclass(frozen=True)
class BubbleSpec:
    """One bubble at minimum diameter: geometry plus its cavity decay rate
    and peak phonon frequency (all angular frequencies in rad/s)."""

    d_min: float
    kappa: float
    nu_max: float

    def __post_init__(self):
        if not self.d_min > 0:
            raise ValueError("d_min must be > 0")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if not self.nu_max > 0:
            raise ValueError("nu_max must be > 0")


@dataclass(frozen=True)
class BubbleEnsemble:
    """A collection of bubbles driven by one laser, analysed at a single
    longitudinal mode index. ``refractive_index`` rescales the light speed
    inside the medium (default 1: vacuum value)."""

    bubbles: tuple
    laser_frequency: float
    mode_index: int
    refractive_index: float = 1.0

    def __post_init__(self):
        bubbles = tuple(self.bubbles)
        if not bubbles:
            raise ValueError("ensemble must contain at least one bubble")
        if self.mode_index < 1:
            raise ValueError("mode_index must be >= 1")
        if not self.laser_frequency > 0:
            raise ValueError("laser_frequency must be > 0")
        if not self.refractive_index > 0:
            raise ValueError("refractive_index must be > 0")
        object.__setattr__(self, "bubbles", bubbles)


def cavity_frequency(bubble, mode_index, refractive_index=1.0):
    """Standing-wave cavity frequency: mode_index * pi * c / d_min."""
    if mode_index < 1:
        raise ValueError("mode_index must be >= 1")
    c = SPEED_OF_LIGHT / refractive_index
    return mode_index * np.pi * c / bubble.d_min


def cavity_wavelength(bubble, mode_index):
    """Standing-wave wavelength 2 d_min / mode_index (exact formula path)."""
    if mode_index < 1:
        raise ValueError("mode_index must be >= 1")
    return 2.0 * bubble.d_min / mode_index


@dataclass(frozen=True)
class FrequencyBand:
    """Cavity-frequency extrema of an ensemble at one mode index, plus the
    gaps to the neighbouring mode bands (positive gap = disjoint)."""

    mode_index: int
    low: float
    high: float
    gap_below: float | None  # to the j-1 band; None when j = 1
    gap_above: float


def frequency_band(ensemble):
    """Extrema of the cavity frequencies over the ensemble's bubbles at its
    mode index, with the separations from the j-1 and j+1 bands."""
    j = ensemble.mode_index
    n = ensemble.refractive_index
    freqs = np.array([cavity_frequency(b, j, n) for b in ensemble.bubbles])
    low, high = float(freqs.min()), float(freqs.max())
    # neighbouring bands scale linearly with the mode index
    gap_above = float(low * (j + 1) / j - high)
    gap_below = None
    if j > 1:
        gap_below = float(low - high * (j - 1) / j)
    return FrequencyBand(mode_index=j, low=low, high=high, gap_below=gap_below, gap_above=gap_above)


@dataclass(frozen=True)
class BubbleAssessment:
    d_min: float
    omega_cav: float
    lambda_cav: float
    delta_cav: float  # omega_cav - omega_laser; positive = laser on the cooling side
    label: BubbleLabel


@dataclass(frozen=True)
class EnsembleReport:
    assessments: tuple
    safe: bool  # no bubble on the heating side

    @property
    def labels(self):
        return tuple(a.label for a in self.assessments)


def classify_bubbles(ensemble, band_tolerance=0.5):
    """Label every bubble for the ensemble's laser frequency.

    RESONANT_COOLING: detuning delta_cav = omega_cav - omega_laser is
    positive, within the relative ``band_tolerance`` of nu_max, and
    nu_max >= kappa. OFF_RESONANT_COOLING: positive detuning outside that
    band. HEATING_RISK: the laser is at or above the cavity line. The
    ensemble is safe iff no bubble is a heating risk.
    """
    if not band_tolerance > 0:
        raise ValueError("band_tolerance must be > 0")
    assessments = []
    for b in ensemble.bubbles:
        omega = cavity_frequency(b, ensemble.mode_index, ensemble.refractive_index)
        delta = omega - ensemble.laser_frequency
        if delta <= 0:
            label = BubbleLabel.HEATING_RISK
        elif abs(delta / b.nu_max - 1.0) <= band_tolerance and b.nu_max >= b.kappa:
            label = BubbleLabel.RESONANT_COOLING
        else:
            label = BubbleLabel.OFF_RESONANT_COOLING
        assessments.append(
            BubbleAssessment(
                d_min=b.d_min,
                omega_cav=float(omega),
                lambda_cav=cavity_wavelength(b, ensemble.mode_index),
                delta_cav=float(delta),
                label=label,
            )
        )
    safe = all(a.label is not BubbleLabel.HEATING_RISK for a in assessments)
    return EnsembleReport(assessments=tuple(assessments), safe=safe)


def sample_diameters(mean, spread, count, seed):
    """Uniform, seeded diameter sample on [mean - spread/2, mean + spread/2].

    ``spread`` is the full width of the interval; reproducible for a fixed
    seed.
    """
    if not mean > 0:
        raise ValueError("mean must be > 0")
    if spread < 0 or spread >= 2 * mean:
        raise ValueError("spread must be in [0, 2*mean)")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    return tuple(float(d) for d in rng.uniform(mean - spread / 2.0, mean + spread / 2.0, count))
