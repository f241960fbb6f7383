import numpy as np
import pytest
from scipy.linalg import expm

from phonox import fock
from phonox.fock import (
    ATOM_EXCITED,
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


def moments_cavity(space, state):
    b = phonon_lowering(space)
    c = photon_lowering(space)
    k_op = 1j * (b @ c.dag() - b.dag() @ c)
    return (
        expectation(phonon_number(space), state).real,
        expectation(photon_number(space), state).real,
        expectation(k_op, state).real,
    )


# ---------------------------------------------------------------------------
# spaces and operators


def test_space_dimensions():
    assert FockSpace(phonon_cutoff=3).dim == 2 * 4
    assert FockSpace(phonon_cutoff=3, photon_cutoff=2).dim == 2 * 4 * 3
    assert FockSpace(phonon_cutoff=3, photon_cutoff=2, atom_levels=None).dim == 4 * 3


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(phonon_cutoff=0),
        dict(phonon_cutoff=-1),
        dict(phonon_cutoff=2, photon_cutoff=0),
        dict(phonon_cutoff=2, atom_levels=3),
    ],
)
def test_space_rejects_bad_cutoffs(kwargs):
    with pytest.raises(ValueError):
        FockSpace(**kwargs)


def test_ladder_matrix_elements():
    space = FockSpace(phonon_cutoff=6, atom_levels=None)
    b = phonon_lowering(space).matrix
    bdag = phonon_lowering(space).dag().matrix
    for m in range(1, 7):
        assert b[m - 1, m] == np.sqrt(m)
    for m in range(6):
        assert bdag[m + 1, m] == np.sqrt(m + 1)


def test_commutator_identity_below_cutoff():
    # [b, b~dag] acts as the identity on every phonon level below the cutoff;
    # only the top row carries the truncation artefact.
    cutoff = 7
    space = FockSpace(phonon_cutoff=cutoff)
    b = phonon_lowering(space)
    comm = (b @ b.dag() - b.dag() @ b).matrix
    eye = np.eye(space.dim)
    for atom in (0, 1):
        for m in range(cutoff + 1):
            idx = space.basis_index(m, atom=atom)
            off = np.delete(comm[idx], idx)
            assert np.array_equal(off, np.zeros_like(off))  # structurally exact zeros
            if m < cutoff:
                assert abs(comm[idx, idx] - 1.0) < 1e-14  # sqrt(m)^2 rounding only
            else:
                assert abs(comm[idx, idx] + cutoff) < 1e-13


def test_operator_space_mismatch():
    a = identity(FockSpace(phonon_cutoff=2))
    b = identity(FockSpace(phonon_cutoff=3))
    with pytest.raises(ValueError):
        _ = a @ b


# ---------------------------------------------------------------------------
# states


def test_density_matrix_rejects_non_hermitian():
    space = FockSpace(phonon_cutoff=1, atom_levels=None)
    mat = np.array([[0.5, 0.1], [0.3, 0.5]], dtype=complex)
    with pytest.raises(ValueError, match="Hermitian"):
        DensityMatrix(space, mat)


def test_density_matrix_rejects_bad_trace():
    space = FockSpace(phonon_cutoff=1, atom_levels=None)
    with pytest.raises(ValueError, match="trace"):
        DensityMatrix(space, np.diag([0.7, 0.7]).astype(complex))


def test_density_matrix_positivity_check():
    space = FockSpace(phonon_cutoff=1, atom_levels=None)
    state = DensityMatrix(space, np.diag([1.5, -0.5]).astype(complex))
    with pytest.raises(ValueError, match="negative eigenvalue"):
        state.validate()
    DensityMatrix.pure(space, 0).validate()


def test_states_are_immutable():
    space = FockSpace(phonon_cutoff=1)
    state = DensityMatrix.pure(space, 0)
    with pytest.raises(ValueError):
        state.matrix[0, 0] = 0.0


# ---------------------------------------------------------------------------
# model builders


def test_atom_phonon_builder_rejections():
    space = FockSpace(phonon_cutoff=3)
    with pytest.raises(ValueError):
        build_atom_phonon_model(np.inf, 0.1, space)
    with pytest.raises(ValueError):
        build_atom_phonon_model(1.0, -0.1, space)
    with pytest.raises(ValueError):
        build_atom_phonon_model(1.0, 0.1, FockSpace(phonon_cutoff=3, photon_cutoff=3))


def test_phonon_photon_builder_rejections():
    with pytest.raises(ValueError):
        build_phonon_photon_model(1.0, 0.1, FockSpace(phonon_cutoff=3))
    with pytest.raises(ValueError):
        build_phonon_photon_model(1.0, -2.0, FockSpace(phonon_cutoff=3, photon_cutoff=3))


def test_lindblad_model_rejects_non_hermitian_hamiltonian():
    space = FockSpace(phonon_cutoff=2, atom_levels=None)
    h = OperatorMatrix(space, np.triu(np.ones((3, 3), dtype=complex)))
    with pytest.raises(ValueError, match="Hermitian"):
        LindbladModel(h, ())


def test_null_dynamics_is_identity():
    # g = 0, gamma = 0: zero Hamiltonian, no effective dissipation
    space = FockSpace(phonon_cutoff=3)
    model = build_atom_phonon_model(0.0, 0.0, space)
    rho0 = DensityMatrix.pure(space, phonons=2, atom=ATOM_EXCITED)
    for _, state in evolve(model, rho0, 5.0, 1.0):
        assert np.max(np.abs(state.matrix - rho0.matrix)) < 1e-12


def test_evolve_identity_for_zero_hamiltonian_no_collapse():
    space = FockSpace(phonon_cutoff=2, atom_levels=None)
    model = LindbladModel(0.0 * identity(space), ())
    rho0 = DensityMatrix(space, np.diag([0.5, 0.5, 0.0]).astype(complex))
    for _, state in evolve(model, rho0, 2.0, 0.5):
        assert np.max(np.abs(state.matrix - rho0.matrix)) < 1e-14


# ---------------------------------------------------------------------------
# dynamics against analytic oracles


def test_rabi_pair_two_state_reduction():
    # |g,1> couples only to |e,0> with matrix element g: excited-state
    # population sin^2(g t). Cutoff 2 keeps the truncation monitor quiet
    # while leaving the two-state block untouched.
    g = 1.0
    space = FockSpace(phonon_cutoff=2)
    model = build_atom_phonon_model(g, 0.0, space)
    rho0 = DensityMatrix.pure(space, phonons=1)
    s_op = atom_excitation(space)
    for t, state in evolve(model, rho0, 3.0, 0.25):
        expected = np.sin(g * t) ** 2
        assert abs(expectation(s_op, state).real - expected) < 1e-8


def test_spontaneous_decay_exponential():
    # H = 0, collapse (sigma-, Gamma), initial |e>: population e^{-Gamma t}
    gamma = 0.8
    space = FockSpace(phonon_cutoff=1)
    model = LindbladModel(0.0 * identity(space), ((atom_lowering(space), gamma),))
    rho0 = DensityMatrix.pure(space, phonons=0, atom=ATOM_EXCITED)
    s_op = atom_excitation(space)
    for t, state in evolve(model, rho0, 6.0, 0.5):
        assert abs(expectation(s_op, state).real - np.exp(-gamma * t)) < 1e-8


def test_damped_atom_phonon_reaches_cold_stationary_state():
    # weak coupling, dissipative: phonons and excitation drain toward zero
    g, gamma = 1.0, 0.1
    space = FockSpace(phonon_cutoff=5)
    model = build_atom_phonon_model(g, gamma, space)
    rho0 = DensityMatrix.pure(space, phonons=2)
    snaps = evolve(model, rho0, 400.0, 40.0)
    m_end = expectation(phonon_number(space), snaps[-1][1]).real
    s_end = expectation(atom_excitation(space), snaps[-1][1]).real
    assert m_end < 1e-4
    assert s_end < 1e-4
    m_start = expectation(phonon_number(space), snaps[0][1]).real
    assert m_end < m_start


def test_phonon_photon_decoupled_when_g_zero():
    space = FockSpace(phonon_cutoff=4, photon_cutoff=2, atom_levels=None)
    model = build_phonon_photon_model(0.0, 2.0, space)
    rho0 = DensityMatrix.pure(space, phonons=2)
    for _, state in evolve(model, rho0, 3.0, 0.5):
        assert abs(expectation(phonon_number(space), state).real - 2.0) < 1e-10


def test_phonon_photon_matches_matrix_exponential_oracle():
    # closed linear moment system: independent expm oracle, computed here
    g, kappa, m0 = 0.5, 2.0, 1
    space = FockSpace(phonon_cutoff=6, photon_cutoff=6, atom_levels=None)
    model = build_phonon_photon_model(g, kappa, space)
    rho0 = DensityMatrix.pure(space, phonons=m0)
    a = np.array([[0.0, 0.0, g], [0.0, -kappa, -g], [-2.0 * g, 2.0 * g, -0.5 * kappa]])
    for t, state in evolve(model, rho0, 4.0, 0.5):
        expected = expm(a * t) @ np.array([float(m0), 0.0, 0.0])
        got = np.array(moments_cavity(space, state))
        assert np.max(np.abs(got - expected)) < 1e-6


def test_phonon_photon_stationary_state_is_empty():
    g, kappa = 0.4, 1.0
    space = FockSpace(phonon_cutoff=5, photon_cutoff=5, atom_levels=None)
    model = build_phonon_photon_model(g, kappa, space)
    rho0 = DensityMatrix.pure(space, phonons=2)
    snaps = evolve(model, rho0, 120.0, 20.0)
    m_end, n_end, _ = moments_cavity(space, snaps[-1][1])
    assert m_end < 1e-6 and n_end < 1e-6


def test_trace_preserved_along_cavity_evolution():
    space = FockSpace(phonon_cutoff=4, photon_cutoff=4, atom_levels=None)
    model = build_phonon_photon_model(0.7, 1.5, space)
    rho0 = DensityMatrix.pure(space, phonons=1)
    for _, state in evolve(model, rho0, 10.0, 0.5):
        assert state.trace_deviation() < 1e-10


def test_lindblad_invariants_over_long_horizon():
    # trace, Hermiticity, positivity preserved over t ~ 100/max(rates)
    rng = np.random.default_rng(7)
    for _ in range(4):
        g = rng.uniform(0.1, 1.0)
        kappa = rng.uniform(0.2, 2.0)
        space = FockSpace(phonon_cutoff=6, photon_cutoff=6, atom_levels=None)
        model = build_phonon_photon_model(g, kappa, space)
        rho0 = DensityMatrix.pure(space, phonons=int(rng.integers(0, 4)))
        horizon = 100.0 / max(g, kappa)
        for _, state in evolve(model, rho0, horizon, horizon / 20.0):
            assert state.trace_deviation() < 1e-9
            assert state.hermiticity_deviation() < 1e-9
            assert state.min_eigenvalue() > -1e-7


def test_truncation_overflow_fires_at_cutoff():
    space = FockSpace(phonon_cutoff=4, photon_cutoff=4, atom_levels=None)
    model = build_phonon_photon_model(0.5, 1.0, space)
    rho0 = DensityMatrix.pure(space, phonons=4)  # initial level == cutoff
    with pytest.raises(TruncationOverflow):
        evolve(model, rho0, 1.0, 0.5)


def test_evolve_input_validation():
    space = FockSpace(phonon_cutoff=2)
    model = build_atom_phonon_model(1.0, 0.1, space)
    rho0 = DensityMatrix.pure(space, phonons=0)
    with pytest.raises(ValueError):
        evolve(model, rho0, -1.0, 0.1)
    with pytest.raises(ValueError):
        evolve(model, rho0, 1.0, 2.0)
    with pytest.raises(ValueError):
        evolve(model, rho0, np.inf, 0.1)
    other = DensityMatrix.pure(FockSpace(phonon_cutoff=3), phonons=0)
    with pytest.raises(ValueError):
        evolve(model, other, 1.0, 0.1)


# ---------------------------------------------------------------------------
# expectation values


def test_expectation_of_identity_is_one():
    space = FockSpace(phonon_cutoff=3)
    rho = DensityMatrix.phonon_thermal(space, lam=0.9)
    assert abs(expectation(identity(space), rho) - 1.0) < 1e-12


def test_expectation_thermal_occupation_geometric_series():
    # lam = ln 2: sum(m x^m)/sum(x^m) with x = 1/2 -> 1 up to the 2^-M tail
    lam = np.log(2.0)
    cutoff = 60
    space = FockSpace(phonon_cutoff=cutoff, atom_levels=None)
    rho = DensityMatrix.phonon_thermal(space, lam)
    x = np.exp(-lam)
    weights = x ** np.arange(cutoff + 1)
    expected = float(np.sum(np.arange(cutoff + 1) * weights) / np.sum(weights))
    got = expectation(phonon_number(space), rho).real
    assert abs(got - expected) < 1e-12
    assert abs(got - 1.0) < 1e-10  # truncation tail is ~2^-60


def test_expectation_excitation_on_ground_states():
    space = FockSpace(phonon_cutoff=3)
    for m in range(4):
        rho = DensityMatrix.pure(space, phonons=m)
        assert expectation(atom_excitation(space), rho) == 0


def test_expectation_hermitian_operator_is_real():
    space = FockSpace(phonon_cutoff=3)
    rho = DensityMatrix.phonon_thermal(space, lam=0.7)
    value = expectation(phonon_number(space), rho)
    assert abs(value.imag) < 1e-10


def test_expectation_dimension_mismatch():
    a = FockSpace(phonon_cutoff=2)
    b = FockSpace(phonon_cutoff=3)
    with pytest.raises(ValueError):
        expectation(identity(a), DensityMatrix.pure(b, 0))
