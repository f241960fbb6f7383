"""Simulation suite for converting trapped-gas heat into light.

Exact Lindblad dynamics on truncated Fock spaces, the closed rate-equation
cooling models they certify, thermal-state quantities, collapsing-bubble
cavity optics, and a staged cooling/thermalisation heat-exchanger loop with
its closed-form photon-budget estimate.
"""

__version__ = "0.1.0"

from .bubbles import (
    BubbleEnsemble,
    BubbleLabel,
    BubbleSpec,
    SPEED_OF_LIGHT,
    cavity_frequency,
    cavity_wavelength,
    classify_bubbles,
    frequency_band,
    sample_diameters,
)
from .exchanger import (
    CoolingEstimate,
    ExchangerConfig,
    StageRecord,
    StageTrace,
    estimate_cooling,
    run_exchanger,
    sweep,
)
from .fock import (
    DensityMatrix,
    FockSpace,
    LindbladModel,
    OperatorMatrix,
    StepFailure,
    TruncationOverflow,
    atom_excitation,
    atom_lowering,
    build_atom_phonon_model,
    build_phonon_photon_model,
    evolve,
    expectation,
    identity,
    phonon_lowering,
    phonon_number,
    photon_lowering,
    photon_number,
)
from .rates import (
    CavityParams,
    CoolingConditionReport,
    RateStateAtom,
    RateStateCavity,
    SingleIonParams,
    cavity_system_matrix,
    collective_coupling,
    cooling_rate_collective,
    cooling_rate_single,
    fit_decay_rate,
    integrate_cavity,
    integrate_single_ion,
    step_cavity,
    step_single_ion,
    validate_cooling_conditions,
)
from .thermo import (
    HBAR,
    K_BOLTZMANN,
    ThermalParams,
    ThermalState,
    bose_occupation,
    oscillator_heat_capacity,
    temperature_from_mean_phonons,
    thermal_state,
    thermalise_gas,
)

__all__ = [name for name in dir() if not name.startswith("_")]
