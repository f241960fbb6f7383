import numpy as np
import pytest
from scipy.linalg import expm

from phonox.rates import (
    CavityParams,
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


def ion_params(g=0.05, gamma=1.0, nu=1.0, delta=1.0):
    return SingleIonParams(g=g, gamma=gamma, nu=nu, omega0=10.0 + delta, omega_laser=10.0)


def cavity_params(g_eff=0.5, kappa=2.0, nu=1.0, delta_cav=1.0, **kw):
    return CavityParams(g_eff=g_eff, kappa=kappa, nu=nu, delta_cav=delta_cav, **kw)


# ---------------------------------------------------------------------------
# parameter containers


def test_detuning_recomputed_exactly():
    p = SingleIonParams(g=0.1, gamma=1.0, nu=2.0, omega0=7.25, omega_laser=5.0)
    assert p.delta == 7.25 - 5.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(g=-0.1, gamma=1.0, nu=1.0, omega0=1.0, omega_laser=0.0),
        dict(g=0.1, gamma=-1.0, nu=1.0, omega0=1.0, omega_laser=0.0),
        dict(g=0.1, gamma=1.0, nu=0.0, omega0=1.0, omega_laser=0.0),
        dict(g=np.nan, gamma=1.0, nu=1.0, omega0=1.0, omega_laser=0.0),
    ],
)
def test_single_ion_params_rejections(kwargs):
    with pytest.raises(ValueError):
        SingleIonParams(**kwargs)


def test_cavity_params_rejections():
    with pytest.raises(ValueError):
        cavity_params(kappa=-1.0)
    with pytest.raises(ValueError):
        cavity_params(n_atoms=0)
    with pytest.raises(ValueError):
        cavity_params(n_atoms=3, per_atom_couplings=(1.0, 2.0))


def test_rate_states_reject_non_finite():
    with pytest.raises(ValueError):
        RateStateAtom(m=np.inf, s=0.0, k1=0.0)
    with pytest.raises(ValueError):
        RateStateCavity(m=0.0, n=np.nan, k1=0.0)


# ---------------------------------------------------------------------------
# fixed points and decoupled limits


def test_zero_state_is_stationary_for_both_systems():
    ion = step_single_ion(RateStateAtom(0.0, 0.0, 0.0), ion_params(), dt=3.0)
    assert (ion.m, ion.s, ion.k1) == (0.0, 0.0, 0.0)
    cav = step_cavity(RateStateCavity(0.0, 0.0, 0.0), cavity_params(), dt=3.0)
    assert (cav.m, cav.n, cav.k1) == (0.0, 0.0, 0.0)


def test_decoupled_ion_decays_exponentially():
    # g = 0: m frozen, s(t) = s0 e^{-Gamma t}
    p = ion_params(g=0.0, gamma=0.7)
    times = np.linspace(0.0, 6.0, 25)
    traj = integrate_single_ion(RateStateAtom(2.0, 0.6, 0.0), p, times)
    assert np.max(np.abs(traj[:, 0] - 2.0)) < 1e-10
    assert np.max(np.abs(traj[:, 1] - 0.6 * np.exp(-0.7 * times))) < 1e-9


def test_lossless_cavity_conserves_total_quanta():
    # kappa = 0: beam-splitter oscillation with m + n = 1
    p = cavity_params(g_eff=0.8, kappa=0.0)
    times = np.linspace(0.0, 12.0, 60)
    traj = integrate_cavity(RateStateCavity(1.0, 0.0, 0.0), p, times)
    assert np.max(np.abs(traj[:, 0] + traj[:, 1] - 1.0)) < 1e-9
    assert traj[:, 0].min() < 0.05  # the quantum actually moves


# ---------------------------------------------------------------------------
# cavity system: linearity, matrix-exponential oracle, stability


def test_cavity_step_matches_matrix_exponential():
    g, kappa, t = 0.5, 2.0, 1.0
    p = cavity_params(g_eff=g, kappa=kappa)
    got = step_cavity(RateStateCavity(1.0, 0.0, 0.0), p, t)
    expected = expm(cavity_system_matrix(p) * t) @ np.array([1.0, 0.0, 0.0])
    assert np.max(np.abs(got.as_array() - expected)) < 1e-9


def test_cavity_step_is_linear_in_the_state():
    p = cavity_params(g_eff=0.3, kappa=1.1)
    x = RateStateCavity(0.7, 0.2, -0.4)
    alpha = 3.5
    scaled = RateStateCavity(alpha * x.m, alpha * x.n, alpha * x.k1)
    a = step_cavity(x, p, 2.0).as_array()
    b = step_cavity(scaled, p, 2.0).as_array()
    assert np.max(np.abs(b - alpha * a)) < 1e-8


def test_cavity_generator_is_hurwitz_over_grid():
    for g in np.geomspace(1e-3, 10.0, 12):
        for kappa in np.geomspace(1e-2, 10.0, 12):
            p = cavity_params(g_eff=float(g), kappa=float(kappa))
            eigs = np.linalg.eigvals(cavity_system_matrix(p))
            assert np.all(eigs.real < 0.0)


def test_single_ion_moments_decay_to_threshold():
    # m0 = 2, g = 0.05*Gamma, integrate to 10/(g^2/Gamma): m well below 0.05
    p = ion_params(g=0.05, gamma=1.0)
    horizon = 10.0 / cooling_rate_single(p)
    end = step_single_ion(RateStateAtom(2.0, 0.0, 0.0), p, horizon)
    assert end.m < 0.05


def test_steps_are_deterministic():
    p = ion_params()
    s0 = RateStateAtom(1.5, 0.1, -0.2)
    a = step_single_ion(s0, p, 4.0)
    b = step_single_ion(s0, p, 4.0)
    assert (a.m, a.s, a.k1) == (b.m, b.s, b.k1)


def test_step_requires_positive_dt():
    with pytest.raises(ValueError):
        step_cavity(RateStateCavity(1.0, 0.0, 0.0), cavity_params(), 0.0)


# ---------------------------------------------------------------------------
# cooling-rate formulas


def test_cooling_rate_single_formula():
    assert cooling_rate_single(ion_params(g=0.0)) == 0.0
    assert cooling_rate_single(ion_params(g=0.1, gamma=1.0)) == pytest.approx(0.01, rel=1e-12)
    with pytest.raises(ValueError):
        cooling_rate_single(ion_params(gamma=0.0))


def test_single_ion_decay_fit_matches_integrated_dynamics():
    # The fitted asymptotic decay of m(t) equals the slow eigenvalue of the
    # moment system, 4 g^2/Gamma in the overdamped limit (the quoted formula
    # rate g^2/Gamma is a scaling convention, a factor 4 below it).
    p = ion_params(g=0.05, gamma=1.0)
    gamma_formula = cooling_rate_single(p)
    times = np.linspace(0.0, 8.0 / gamma_formula, 400)
    traj = integrate_single_ion(RateStateAtom(2.0, 0.0, 0.0), p, times)
    fitted = fit_decay_rate(times, traj[:, 0])
    assert abs(fitted / (4.0 * gamma_formula) - 1.0) < 0.2


def test_collective_coupling_values():
    assert collective_coupling([0.7]) == 0.7
    n, g = 25, 0.3
    assert abs(collective_coupling([g] * n) - np.sqrt(n) * g) < 1e-12 * np.sqrt(n) * g
    assert collective_coupling([3.0, 4.0]) == 5.0
    with pytest.raises(ValueError):
        collective_coupling([])


def test_cooling_rate_collective_formula():
    single = cavity_params(g_eff=0.2, kappa=1.5, n_atoms=1)
    assert cooling_rate_collective(single) == 0.2**2 / 1.5
    hundred = cavity_params(g_eff=0.01, kappa=1.0, n_atoms=100)
    assert cooling_rate_collective(hundred) == pytest.approx(0.01, rel=1e-12)
    # doubling the atom number doubles the rate, exactly
    for n in (1, 10, 100, 1000):
        a = cooling_rate_collective(cavity_params(g_eff=0.07, kappa=0.9, n_atoms=n))
        b = cooling_rate_collective(cavity_params(g_eff=0.07, kappa=0.9, n_atoms=2 * n))
        assert b == 2 * a
    with pytest.raises(ValueError):
        cooling_rate_collective(cavity_params(kappa=0.0))


def test_cooling_rate_collective_non_uniform():
    p = cavity_params(g_eff=0.0, kappa=2.0, n_atoms=2, per_atom_couplings=(3.0, 4.0))
    assert cooling_rate_collective(p) == 25.0 / 2.0


def test_collective_dynamics_uses_mode_coupling():
    # N uniform atoms evolve like one mode with sqrt(N) g_eff
    times = np.linspace(0.0, 3.0, 10)
    many = cavity_params(g_eff=0.2, kappa=1.0, n_atoms=9)
    one = cavity_params(g_eff=0.6, kappa=1.0, n_atoms=1)
    a = integrate_cavity(RateStateCavity(1.0, 0.0, 0.0), many, times)
    b = integrate_cavity(RateStateCavity(1.0, 0.0, 0.0), one, times)
    assert np.max(np.abs(a - b)) < 1e-9


# ---------------------------------------------------------------------------
# cooling-condition validation


def test_conditions_pass_at_resonance():
    report = validate_cooling_conditions(ion_params(g=0.1, gamma=0.5, nu=1.0, delta=1.0))
    assert all(c.passed for c in report.checks)
    assert report.detuning_side == "red"
    assert report.all_passed


def test_condition_fails_for_fast_decay():
    report = validate_cooling_conditions(ion_params(g=0.1, gamma=2.0, nu=1.0, delta=1.0))
    by_name = {c.name: c for c in report.checks}
    assert by_name["delta-near-nu"].passed
    assert not by_name["nu-at-least-gamma"].passed
    assert not report.all_passed


def test_blue_detuning_flagged_as_heating_side():
    p = cavity_params(g_eff=0.1, kappa=0.5, nu=1.0, delta_cav=-1.0)
    report = validate_cooling_conditions(p)
    assert report.detuning_side == "blue"
    assert not report.cooling_side
    assert not report.all_passed


def test_tolerance_band_widens_the_detuning_window():
    p = ion_params(g=0.1, gamma=0.5, nu=1.0, delta=1.4)
    tight = validate_cooling_conditions(p, tolerance_band=0.1)
    wide = validate_cooling_conditions(p, tolerance_band=0.5)
    assert not tight.checks[0].passed
    assert wide.checks[0].passed
    with pytest.raises(ValueError):
        validate_cooling_conditions(p, tolerance_band=0.0)
