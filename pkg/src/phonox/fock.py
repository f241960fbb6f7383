"""Truncated Fock-space operator algebra and an exact Lindblad integrator.

Dense operators on (two-level atom) x (phonon mode) x (photon mode) product
spaces, ladder-operator constructors, and adaptive RK45 integration of the
master equation on the vectorised density matrix. This layer is the
brute-force reference that the closed rate models are checked against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
from scipy.integrate import solve_ivp

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8
TRUNCATION_TOL = 1e-6

ATOM_GROUND = 0
ATOM_EXCITED = 1


class TruncationOverflow(RuntimeError):
    """Population reached the top retained Fock level; the result is untrustworthy."""


class StepFailure(RuntimeError):
    """The adaptive integrator could not advance within tolerance."""


@dataclass(frozen=True)
class FockSpace:
    """Truncated product Hilbert space.

    Factors, in tensor order: optional two-level atom {|g>, |e>}, a phonon
    mode truncated at ``phonon_cutoff`` (levels 0..cutoff), and an optional
    photon mode truncated at ``photon_cutoff``. ``atom_levels`` is 2 when the
    atomic factor is present and None when it is omitted (pure phonon-photon
    systems where the atom stays in its ground state).
    """

    phonon_cutoff: int
    photon_cutoff: int | None = None
    atom_levels: int | None = 2

    def __post_init__(self):
        if self.atom_levels not in (None, 2):
            raise ValueError("atom_levels must be 2 (present) or None (absent)")
        if not isinstance(self.phonon_cutoff, (int, np.integer)) or self.phonon_cutoff < 1:
            raise ValueError("phonon_cutoff must be an integer >= 1")
        if self.photon_cutoff is not None:
            if not isinstance(self.photon_cutoff, (int, np.integer)) or self.photon_cutoff < 1:
                raise ValueError("photon_cutoff must be an integer >= 1 when present")

    @property
    def has_atom(self):
        return self.atom_levels is not None

    @property
    def has_photon(self):
        return self.photon_cutoff is not None

    @property
    def factor_dims(self):
        """Dimensions of the present tensor factors, in order."""
        dims = []
        if self.has_atom:
            dims.append(2)
        dims.append(self.phonon_cutoff + 1)
        if self.has_photon:
            dims.append(self.photon_cutoff + 1)
        return tuple(dims)

    @property
    def dim(self):
        return int(np.prod(self.factor_dims))

    def basis_index(self, phonons, photons=None, atom=None):
        """Flat index of the basis state |atom, phonons(, photons)>."""
        if not 0 <= phonons <= self.phonon_cutoff:
            raise ValueError("phonon level outside the truncated space")
        idx = 0
        if self.has_atom:
            atom = ATOM_GROUND if atom is None else atom
            if atom not in (ATOM_GROUND, ATOM_EXCITED):
                raise ValueError("atom level must be 0 (ground) or 1 (excited)")
            idx = atom
        elif atom not in (None, ATOM_GROUND):
            raise ValueError("space has no atomic factor")
        idx = idx * (self.phonon_cutoff + 1) + phonons
        if self.has_photon:
            photons = 0 if photons is None else photons
            if not 0 <= photons <= self.photon_cutoff:
                raise ValueError("photon level outside the truncated space")
            idx = idx * (self.photon_cutoff + 1) + photons
        elif photons not in (None, 0):
            raise ValueError("space has no photon factor")
        return idx


def _lowering(dim):
    """Single-mode lowering operator: <m-1| a |m> = sqrt(m)."""
    return np.diag(np.sqrt(np.arange(1.0, dim)), k=1).astype(complex)


def _embed(space, atom=None, phonon=None, photon=None):
    """Kronecker product of per-factor matrices, identity where None."""
    mats = []
    if space.has_atom:
        mats.append(np.eye(2, dtype=complex) if atom is None else atom)
    p_dim = space.phonon_cutoff + 1
    mats.append(np.eye(p_dim, dtype=complex) if phonon is None else phonon)
    if space.has_photon:
        c_dim = space.photon_cutoff + 1
        mats.append(np.eye(c_dim, dtype=complex) if photon is None else photon)
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense linear operator on a truncated Fock space."""

    space: FockSpace
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (self.space.dim, self.space.dim):
            raise ValueError(
                f"operator shape {mat.shape} does not match space dimension {self.space.dim}"
            )
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def dag(self):
        return OperatorMatrix(self.space, self.matrix.conj().T)

    def is_hermitian(self, tol=HERMITICITY_TOL):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) <= tol

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check_space(other)
            return OperatorMatrix(self.space, self.matrix @ other.matrix)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check_space(other)
            return OperatorMatrix(self.space, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check_space(other)
            return OperatorMatrix(self.space, self.matrix - other.matrix)
        return NotImplemented

    def __mul__(self, scalar):
        return OperatorMatrix(self.space, self.matrix * scalar)

    __rmul__ = __mul__

    def _check_space(self, other):
        if other.space != self.space:
            raise ValueError("operators live on different spaces")


def identity(space):
    return OperatorMatrix(space, np.eye(space.dim, dtype=complex))


def phonon_lowering(space):
    """b with <m-1| b |m> = sqrt(m), truncated at the phonon cutoff."""
    return OperatorMatrix(space, _embed(space, phonon=_lowering(space.phonon_cutoff + 1)))


def photon_lowering(space):
    """c with <n-1| c |n> = sqrt(n); requires a photon factor."""
    if not space.has_photon:
        raise ValueError("space has no photon factor")
    return OperatorMatrix(space, _embed(space, photon=_lowering(space.photon_cutoff + 1)))


def atom_lowering(space):
    """sigma^- = |g><e|; requires the atomic factor."""
    if not space.has_atom:
        raise ValueError("space has no atomic factor")
    sigma = np.zeros((2, 2), dtype=complex)
    sigma[ATOM_GROUND, ATOM_EXCITED] = 1.0
    return OperatorMatrix(space, _embed(space, atom=sigma))


def phonon_number(space):
    b = phonon_lowering(space)
    return b.dag() @ b


def photon_number(space):
    c = photon_lowering(space)
    return c.dag() @ c


def atom_excitation(space):
    """sigma^+ sigma^- = |e><e|."""
    s = atom_lowering(space)
    return s.dag() @ s


@dataclass(frozen=True)
class DensityMatrix:
    """Quantum state on a truncated Fock space.

    Construction checks Hermiticity and unit trace (cheap, O(dim^2)); the
    positivity check is an eigensolve and is exposed separately via
    ``min_eigenvalue`` / ``validate``.
    """

    space: FockSpace
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (self.space.dim, self.space.dim):
            raise ValueError(
                f"state shape {mat.shape} does not match space dimension {self.space.dim}"
            )
        herm = float(np.max(np.abs(mat - mat.conj().T)))
        if herm > HERMITICITY_TOL:
            raise ValueError(f"state is not Hermitian (max deviation {herm:.3e})")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"state trace {tr} deviates from 1 beyond tolerance")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def pure(cls, space, phonons, photons=None, atom=None):
        """|atom, phonons(, photons)><...| projector."""
        idx = space.basis_index(phonons, photons=photons, atom=atom)
        mat = np.zeros((space.dim, space.dim), dtype=complex)
        mat[idx, idx] = 1.0
        return cls(space, mat)

    @classmethod
    def phonon_thermal(cls, space, lam):
        """Thermal phonon occupation with Boltzmann factor e^{-lam} per level,
        atom in |g> and photon mode in vacuum, trace-normalised over the
        truncated space."""
        if lam <= 0:
            raise ValueError("lam must be positive")
        weights = np.exp(-lam * np.arange(space.phonon_cutoff + 1))
        weights /= weights.sum()
        mat = np.zeros((space.dim, space.dim), dtype=complex)
        for m, w in enumerate(weights):
            idx = space.basis_index(m)
            mat[idx, idx] = w
        return cls(space, mat)

    def min_eigenvalue(self):
        sym = (self.matrix + self.matrix.conj().T) / 2.0
        return float(np.linalg.eigvalsh(sym)[0])

    def hermiticity_deviation(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def trace_deviation(self):
        return abs(complex(np.trace(self.matrix)) - 1.0)

    def validate(self):
        """Full invariant check including positivity; raises on violation."""
        ev = self.min_eigenvalue()
        if ev < -POSITIVITY_TOL:
            raise ValueError(f"state has negative eigenvalue {ev:.3e}")
        return self

    def top_level_populations(self):
        """Population of the highest retained phonon and photon levels."""
        diag = np.real(np.diag(self.matrix)).reshape(self.space.factor_dims)
        axis = 1 if self.space.has_atom else 0
        phonon_top = float(np.take(diag, -1, axis=axis).sum())
        photon_top = None
        if self.space.has_photon:
            photon_top = float(np.take(diag, -1, axis=diag.ndim - 1).sum())
        return phonon_top, photon_top


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian (angular-frequency units, hbar factored out) plus weighted
    collapse operators defining an open-system evolution."""

    hamiltonian: OperatorMatrix
    collapse_terms: tuple

    def __post_init__(self):
        if not self.hamiltonian.is_hermitian():
            raise ValueError("Hamiltonian is not Hermitian within tolerance")
        terms = tuple(self.collapse_terms)
        for op, rate in terms:
            if op.space != self.hamiltonian.space:
                raise ValueError("collapse operator lives on a different space")
            if not np.isfinite(rate) or rate < 0:
                raise ValueError("collapse rates must be finite and >= 0")
        object.__setattr__(self, "collapse_terms", terms)

    @property
    def space(self):
        return self.hamiltonian.space


def build_atom_phonon_model(g, gamma, space):
    """Resonant atom-phonon exchange with spontaneous atomic decay.

    Hamiltonian g(sigma^- b^dag + sigma^+ b) and one collapse channel
    (sigma^-, gamma). The space must carry an atomic factor and no photon
    factor.

    Parameters
    ----------
    g : float
        Atom-phonon coupling constant (angular frequency).
    gamma : float
        Spontaneous decay rate of the excited atomic state (angular
        frequency, >= 0).
    space : FockSpace
    """
    if not (np.isfinite(g) and np.isfinite(gamma)):
        raise ValueError("g and gamma must be finite")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if space.has_photon:
        raise ValueError("atom-phonon model takes a space without a photon factor")
    if not space.has_atom:
        raise ValueError("atom-phonon model needs the atomic factor")
    sigma = atom_lowering(space)
    b = phonon_lowering(space)
    h = g * (sigma @ b.dag() + sigma.dag() @ b)
    return LindbladModel(h, ((sigma, float(gamma)),))


def build_phonon_photon_model(g_eff, kappa, space):
    """Beam-splitter exchange between phonon and photon modes with cavity loss.

    Hamiltonian g_eff(b c^dag + b^dag c) and one collapse channel (c, kappa).
    The space must carry a photon factor; the atomic factor may be present
    (the operators act as identity on it) or omitted.
    """
    if not (np.isfinite(g_eff) and np.isfinite(kappa)):
        raise ValueError("g_eff and kappa must be finite")
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    if not space.has_photon:
        raise ValueError("phonon-photon model needs a photon factor")
    b = phonon_lowering(space)
    c = photon_lowering(space)
    h = g_eff * (b @ c.dag() + b.dag() @ c)
    return LindbladModel(h, ((c, float(kappa)),))


def _liouvillian(model):
    """Vectorised generator: vec(rho') = L vec(rho) with C-order vec.

    vec(A rho B) = (A kron B^T) vec(rho). Built sparse: the ladder-operator
    structure keeps nnz ~ dim^2 while dense matmuls would be dim^3 per
    right-hand-side evaluation.
    """
    h = sparse.csr_matrix(model.hamiltonian.matrix)
    d = h.shape[0]
    eye = sparse.identity(d, format="csr", dtype=complex)
    gen = -1j * (sparse.kron(h, eye) - sparse.kron(eye, h.T))
    for op, rate in model.collapse_terms:
        if rate == 0.0:
            continue
        ell = sparse.csr_matrix(op.matrix)
        ell_dag_ell = (ell.conj().T @ ell).tocsr()
        gen = gen + rate * (
            sparse.kron(ell, ell.conj())
            - 0.5 * sparse.kron(ell_dag_ell, eye)
            - 0.5 * sparse.kron(eye, ell_dag_ell.T)
        )
    return gen.tocsr()


def evolve(model, rho0, t_final, dt_observe, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Integrate the master equation and return snapshots of the state.

    Parameters
    ----------
    model : LindbladModel
    rho0 : DensityMatrix
        Initial state on the model's space.
    t_final, dt_observe : float
        Snapshots are taken at every multiple of ``dt_observe`` up to
        ``t_final`` (t = 0 included). Requires 0 < dt_observe <= t_final.
    rtol, atol : float
        Tolerances of the adaptive RK45 scheme.

    Returns
    -------
    list of (time, DensityMatrix)

    Raises
    ------
    TruncationOverflow
        If the population of the highest retained phonon or photon level
        exceeds 1e-6 at any snapshot.
    StepFailure
        If the adaptive integrator cannot meet tolerance.
    """
    if rho0.space != model.space:
        raise ValueError("initial state lives on a different space")
    if not (np.isfinite(t_final) and t_final > 0):
        raise ValueError("t_final must be finite and > 0")
    if not (np.isfinite(dt_observe) and 0 < dt_observe <= t_final):
        raise ValueError("dt_observe must satisfy 0 < dt_observe <= t_final")

    n_obs = int(np.floor(t_final / dt_observe + 1e-9))
    times = dt_observe * np.arange(n_obs + 1)
    gen = _liouvillian(model)

    sol = solve_ivp(
        lambda t, y: gen @ y,
        (0.0, float(times[-1])),
        rho0.matrix.ravel(),
        method="RK45",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise StepFailure(f"adaptive integration failed: {sol.message}")

    dim = model.space.dim
    snapshots = []
    for k, t in enumerate(times):
        state = DensityMatrix(model.space, sol.y[:, k].reshape(dim, dim))
        phonon_top, photon_top = state.top_level_populations()
        if phonon_top > TRUNCATION_TOL or (photon_top is not None and photon_top > TRUNCATION_TOL):
            raise TruncationOverflow(
                f"top-level population {max(phonon_top, photon_top or 0.0):.3e} "
                f"exceeds {TRUNCATION_TOL:g} at t={t:g}; raise the cutoffs"
            )
        snapshots.append((float(t), state))
    return snapshots


def expectation(op, rho):
    """Tr(op rho). Spaces must match."""
    if op.space != rho.space:
        raise ValueError("operator and state live on different spaces")
    return complex(np.einsum("ij,ji->", op.matrix, rho.matrix))
