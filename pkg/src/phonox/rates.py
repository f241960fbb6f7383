"""Closed rate-equation models of sideband and cavity-mediated cooling.

Two three-variable moment systems: the nonlinear atom model for
(mean phonons, excited population, atom-phonon coherence) and the linear
cavity model for (mean phonons, mean photons, phonon-photon coherence),
plus the closed-form cooling-rate expressions, the collective coupling
constant, and a cooling-condition validator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .fock import DEFAULT_ATOL, DEFAULT_RTOL, StepFailure


@dataclass(frozen=True)
class SingleIonParams:
    """Parameters of laser cooling of one trapped two-level particle.

    All frequencies are angular (rad/s). The laser detuning is recomputed
    from the transition and laser frequencies, never stored stale.
    """

    g: float
    gamma: float
    nu: float
    omega0: float
    omega_laser: float
    delta: float = field(init=False)

    def __post_init__(self):
        for name in ("g", "gamma", "nu", "omega0", "omega_laser"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.g < 0:
            raise ValueError("g must be >= 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.nu <= 0:
            raise ValueError("nu must be > 0")
        object.__setattr__(self, "delta", self.omega0 - self.omega_laser)


@dataclass(frozen=True)
class CavityParams:
    """Parameters of cavity-mediated cooling of one atom or a uniform gas.

    ``n_atoms`` scales the collective coupling sqrt(N) g_eff when
    ``per_atom_couplings`` is not given; a non-uniform coupling list takes
    precedence and must have length n_atoms.
    """

    g_eff: float
    kappa: float
    nu: float
    delta_cav: float
    omega_cav: float | None = None
    n_atoms: int = 1
    per_atom_couplings: tuple | None = None

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.nu <= 0:
            raise ValueError("nu must be > 0")
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")
        if self.per_atom_couplings is not None:
            couplings = tuple(float(c) for c in self.per_atom_couplings)
            if len(couplings) != self.n_atoms:
                raise ValueError("per_atom_couplings length must equal n_atoms")
            object.__setattr__(self, "per_atom_couplings", couplings)

    def mode_coupling(self):
        """Coupling constant of the collective phonon mode to the cavity:
        root-sum-square of the per-atom constants (sqrt(N) g_eff when
        uniform, g_eff itself for one atom)."""
        if self.per_atom_couplings is not None:
            return collective_coupling(self.per_atom_couplings)
        return np.sqrt(self.n_atoms) * self.g_eff


@dataclass(frozen=True)
class RateStateAtom:
    """Moments of the atom model: mean phonon number m, excited-state
    population s, and the atom-phonon coherence i<sigma^- b^dag - sigma^+ b>."""

    m: float
    s: float
    k1: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.m, self.s, self.k1)):
            raise ValueError("state must be finite")

    def as_array(self):
        return np.array([self.m, self.s, self.k1], dtype=float)


@dataclass(frozen=True)
class RateStateCavity:
    """Moments of the cavity model: mean phonon number m, mean photon
    number n, and the phonon-photon coherence i<b c^dag - b^dag c>."""

    m: float
    n: float
    k1: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.m, self.n, self.k1)):
            raise ValueError("state must be finite")

    def as_array(self):
        return np.array([self.m, self.n, self.k1], dtype=float)


def _single_ion_rhs(g, gamma):
    def rhs(t, y):
        m, s, k1 = y
        return (
            -g * k1,
            g * k1 - gamma * s,
            2.0 * g * (m - s) - 4.0 * g * m * s - 0.5 * gamma * k1,
        )

    return rhs


def cavity_system_matrix(p):
    """Generator A of the linear cavity moment system d(m, n, k1)/dt = A x,
    using the collective mode coupling."""
    g = p.mode_coupling()
    k = p.kappa
    return np.array(
        [
            [0.0, 0.0, g],
            [0.0, -k, -g],
            [-2.0 * g, 2.0 * g, -0.5 * k],
        ]
    )


def _integrate(rhs, y0, times, rtol, atol):
    t_end = float(times[-1])
    if t_end == 0.0:
        return np.tile(np.asarray(y0, dtype=float), (len(times), 1))
    sol = solve_ivp(rhs, (0.0, t_end), y0, method="RK45", t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise StepFailure(f"rate-equation integration failed: {sol.message}")
    return sol.y.T


def integrate_single_ion(state, p, times, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Trajectory of the atom moment system at the requested times
    (array shape (len(times), 3), columns m, s, k1)."""
    return _integrate(_single_ion_rhs(p.g, p.gamma), state.as_array(), np.asarray(times, float), rtol, atol)


def integrate_cavity(state, p, times, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Trajectory of the cavity moment system (columns m, n, k1)."""
    a = cavity_system_matrix(p)
    return _integrate(lambda t, y: a @ y, state.as_array(), np.asarray(times, float), rtol, atol)


def step_single_ion(state, p, dt, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Advance the nonlinear atom moment system by dt."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    y = integrate_single_ion(state, p, [dt], rtol=rtol, atol=atol)[-1]
    return RateStateAtom(*y)


def step_cavity(state, p, dt, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Advance the linear cavity moment system by dt."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    y = integrate_cavity(state, p, [dt], rtol=rtol, atol=atol)[-1]
    return RateStateCavity(*y)


def cooling_rate_single(p):
    """Standard single-particle cooling rate g^2 / Gamma."""
    if p.gamma <= 0:
        raise ValueError("cooling rate undefined for gamma = 0")
    return p.g**2 / p.gamma


def collective_coupling(per_atom):
    """Root-sum-square of the per-atom cavity couplings; sqrt(N) g for N
    equal entries."""
    arr = np.asarray(per_atom, dtype=float)
    if arr.size == 0:
        raise ValueError("per-atom coupling list is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("couplings must be finite")
    return float(np.linalg.norm(arr))


def cooling_rate_collective(p):
    """Cavity-mediated cooling rate of the collective mode: N g_eff^2 / kappa
    for uniform couplings, (collective coupling)^2 / kappa otherwise."""
    if p.kappa <= 0:
        raise ValueError("cooling rate undefined for kappa = 0")
    if p.per_atom_couplings is None:
        # N times the single-atom rate, computed as such: the enhancement
        # factor stays an exact integer multiple, no sqrt round-trip
        return p.n_atoms * (p.g_eff**2 / p.kappa)
    return collective_coupling(p.per_atom_couplings) ** 2 / p.kappa


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    description: str
    value: float
    passed: bool


@dataclass(frozen=True)
class CoolingConditionReport:
    checks: tuple
    detuning: float
    detuning_side: str  # "red" (cooling side), "blue" (heating side) or "on-resonance"

    @property
    def cooling_side(self):
        return self.detuning_side == "red"

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks) and self.cooling_side


def validate_cooling_conditions(p, tolerance_band=0.5):
    """Diagnostic report on the resonance conditions for cooling.

    The detuning must be comparable to the phonon frequency (within the
    relative ``tolerance_band``, default +/-50%) and the decay rate must not
    exceed the phonon frequency. A positive detuning (laser below the
    transition / cavity line) is the cooling side; negative is flagged as
    the heating side. Always returns a report, never raises on failed
    conditions.
    """
    if not tolerance_band > 0:
        raise ValueError("tolerance_band must be > 0")
    if isinstance(p, SingleIonParams):
        detuning, decay = p.delta, p.gamma
        det_name, decay_name = "delta", "gamma"
    elif isinstance(p, CavityParams):
        detuning, decay = p.delta_cav, p.kappa
        det_name, decay_name = "delta_cav", "kappa"
    else:
        raise TypeError("expected SingleIonParams or CavityParams")

    ratio_dev = abs(detuning / p.nu - 1.0)
    checks = (
        ConditionCheck(
            name=f"{det_name}-near-nu",
            description=f"|{det_name}/nu - 1| <= {tolerance_band:g}",
            value=ratio_dev,
            passed=ratio_dev <= tolerance_band,
        ),
        ConditionCheck(
            name=f"nu-at-least-{decay_name}",
            description=f"{decay_name}/nu <= 1",
            value=decay / p.nu,
            passed=decay <= p.nu,
        ),
    )
    if detuning > 0:
        side = "red"
    elif detuning < 0:
        side = "blue"
    else:
        side = "on-resonance"
    return CoolingConditionReport(checks=checks, detuning=detuning, detuning_side=side)


def fit_decay_rate(times, values, upper=0.9, lower=1e-3):
    """Least-squares exponential decay rate of a positive trajectory.

    Fits log(values) over the window where the trajectory has decayed below
    ``upper`` of its initial value but stays above ``lower`` of it, skipping
    the startup transient and the noise floor. Returns the positive rate.
    """
    t = np.asarray(times, float)
    v = np.asarray(values, float)
    v0 = v[0]
    mask = (v > lower * v0) & (v < upper * v0)
    if mask.sum() < 2:
        raise ValueError("trajectory has not decayed enough to fit a rate")
    slope = np.polyfit(t[mask], np.log(v[mask]), 1)[0]
    return -float(slope)
