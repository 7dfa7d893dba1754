"""
Two-qubit basis conventions, states, observables and Hilbert-Schmidt
vectorization.

Everything lives in the decoupled product basis, in this fixed order::

    0: |ee>   1: |eg>   2: |ge>   3: |gg>

The first label is atom 1. Operators are vectorized row-major, so the
component ``4*i + j`` (0-based) of a vectorized operator holds ``rho[i, j]``.
With this convention ``vec(A @ rho @ B) = kron(A, B.T) @ vec(rho)``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .spectral import CollectiveStates

BASIS_LABELS = ("ee", "eg", "ge", "gg")
EE, EG, GE, GG = range(4)
DIM = 4
HS_DIM = DIM * DIM

CONSTRUCTION_TOL = 1e-12


class InvalidParameters(ValueError):
    """Raised when a parameter set violates the physical constraints."""


class InvalidState(ValueError):
    """Raised when an array is not a valid pure state or density matrix."""


@dataclass(frozen=True)
class SystemParams:
    """Rates and frequencies of the two-atom master equation.

    All quantities are in the same (arbitrary) unit; the figures of the
    package use ``gamma0 = (gamma1 + gamma2) / 2 = 1``.

    Attributes
    ----------
    gamma1, gamma2 : float
        Individual spontaneous-emission rates.
    gamma12 : float
        Cross-damping rate, ``|gamma12| <= sqrt(gamma1 * gamma2)``.
    s1, s2 : float
        Local Lamb shifts. They only enter the dressed one-excitation
        Hamiltonian, never the Liouvillian (they renormalize the atomic
        frequencies).
    s12 : float
        Coherent (dipole-dipole) coupling.
    omega0 : float
        Mean transition frequency ``(omega1 + omega2) / 2``.
    delta : float
        Detuning ``omega1 - omega2``.
    dep11, dep22, dep12 : float
        Dephasing rates, ``|dep12| <= sqrt(dep11 * dep22)``.
    """

    gamma1: float = 1.0
    gamma2: float = 1.0
    gamma12: float = 0.0
    s1: float = 0.0
    s2: float = 0.0
    s12: float = 0.0
    omega0: float = 10.0
    delta: float = 0.0
    dep11: float = 0.0
    dep22: float = 0.0
    dep12: float = 0.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidParameters(f"{f.name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise InvalidParameters(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, float(value))
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise InvalidParameters("gamma1 and gamma2 must be non-negative")
        bound = math.sqrt(self.gamma1 * self.gamma2)
        if abs(self.gamma12) > bound * (1 + CONSTRUCTION_TOL) + CONSTRUCTION_TOL:
            raise InvalidParameters(
                f"|gamma12| = {abs(self.gamma12):g} exceeds sqrt(gamma1*gamma2) = {bound:g}"
            )
        if self.dep11 < 0 or self.dep22 < 0:
            raise InvalidParameters("dep11 and dep22 must be non-negative")
        dep_bound = math.sqrt(self.dep11 * self.dep22)
        if abs(self.dep12) > dep_bound * (1 + CONSTRUCTION_TOL) + CONSTRUCTION_TOL:
            raise InvalidParameters(
                f"|dep12| = {abs(self.dep12):g} exceeds sqrt(dep11*dep22) = {dep_bound:g}"
            )
        if self.omega0 <= 0:
            raise InvalidParameters("omega0 must be positive")

    @property
    def gamma0(self) -> float:
        return 0.5 * (self.gamma1 + self.gamma2)

    @property
    def omega1(self) -> float:
        return self.omega0 + 0.5 * self.delta

    @property
    def omega2(self) -> float:
        return self.omega0 - 0.5 * self.delta

    @property
    def has_dephasing(self) -> bool:
        return self.dep11 != 0 or self.dep22 != 0 or self.dep12 != 0

    def replace(self, **changes) -> SystemParams:
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


# ---------------------------------------------------------------------------
# Kets, operators and vectorization
# ---------------------------------------------------------------------------

def basis_ket(label: str) -> np.ndarray:
    """Return the decoupled-basis ket named ``ee``, ``eg``, ``ge`` or ``gg``."""
    try:
        idx = BASIS_LABELS.index(label)
    except ValueError:
        raise ValueError(f"unknown basis label {label!r}") from None
    ket = np.zeros(DIM, dtype=complex)
    ket[idx] = 1.0
    return ket


def canonical_phase(psi: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate the global phase so the first nonzero amplitude is real positive."""
    psi = np.asarray(psi, dtype=complex)
    nonzero = np.flatnonzero(np.abs(psi) > tol)
    if nonzero.size == 0:
        raise InvalidState("zero vector has no phase")
    lead = psi[nonzero[0]]
    return psi * (abs(lead) / lead)


def pure_state(amplitudes) -> np.ndarray:
    """Normalize ``amplitudes`` and fix the global phase."""
    psi = np.asarray(amplitudes, dtype=complex).reshape(DIM)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise InvalidState("zero vector is not a state")
    return canonical_phase(psi / norm)


def check_pure_state(psi: np.ndarray, tol: float = CONSTRUCTION_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (DIM,):
        raise InvalidState(f"pure state must have shape (4,), got {psi.shape}")
    if abs(np.linalg.norm(psi) - 1) > tol:
        raise InvalidState("pure state is not normalized")
    return psi


def projector(psi: np.ndarray) -> np.ndarray:
    """``|psi><psi|``."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def ketbra(ket: np.ndarray, bra: np.ndarray) -> np.ndarray:
    """``|ket><bra|`` (the bra argument is conjugated)."""
    return np.outer(np.asarray(ket, dtype=complex), np.asarray(bra, dtype=complex).conj())


def check_density_matrix(
    rho: np.ndarray,
    tol: float = CONSTRUCTION_TOL,
    positivity_tol: float = 1e-10,
) -> np.ndarray:
    """Validate a 4x4 density matrix and return it as a complex array.

    Raises
    ------
    InvalidState
        If ``rho`` is not Hermitian or unit-trace within ``tol`` or has an
        eigenvalue below ``-positivity_tol``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (DIM, DIM):
        raise InvalidState(f"density matrix must be 4x4, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidState("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidState(f"density matrix trace is {np.trace(rho).real:.3e}, not 1")
    lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lowest < -positivity_tol:
        raise InvalidState(f"density matrix has negative eigenvalue {lowest:.3e}")
    return rho


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Map a 4x4 operator to its 16-component Hilbert-Schmidt vector."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (DIM, DIM):
        raise ValueError(f"expected a 4x4 operator, got shape {rho.shape}")
    return rho.reshape(rho.shape[:-2] + (HS_DIM,)).copy()


def devectorize(vec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`; also accepts stacks of vectors."""
    vec = np.asarray(vec, dtype=complex)
    if vec.shape[-1] != HS_DIM:
        raise ValueError(f"expected 16 components, got shape {vec.shape}")
    return vec.reshape(vec.shape[:-1] + (DIM, DIM)).copy()


def hs_inner(tau: np.ndarray, rho: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product ``Tr(tau^dagger rho)``."""
    return complex(np.vdot(np.asarray(tau, dtype=complex), np.asarray(rho, dtype=complex)))


# ---------------------------------------------------------------------------
# Local operators
# ---------------------------------------------------------------------------

_I2 = np.eye(2, dtype=complex)
# single-atom basis order is (|e>, |g>)
_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_RAISE = np.array([[0, 1], [0, 0]], dtype=complex)


def _embed(single: np.ndarray, site: int) -> np.ndarray:
    if site == 1:
        return np.kron(single, _I2)
    if site == 2:
        return np.kron(_I2, single)
    raise ValueError(f"site must be 1 or 2, got {site!r}")


def sigma_plus(site: int) -> np.ndarray:
    """Raising operator ``|e><g|`` of atom ``site``."""
    return _embed(_RAISE, site)


def sigma_minus(site: int) -> np.ndarray:
    """Lowering operator ``|g><e|`` of atom ``site``."""
    return _embed(_RAISE.T.copy(), site)


def sigma_z(site: int) -> np.ndarray:
    return _embed(_PAULI["z"], site)


@dataclass(frozen=True, eq=False)
class Observable:
    """A Hermitian 4x4 operator with a display label."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (DIM, DIM):
            raise ValueError(f"observable must be 4x4, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > CONSTRUCTION_TOL:
            raise ValueError(f"observable {self.label!r} is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_bloch(cls, site: int, ax: float = 0.0, ay: float = 0.0, az: float = 0.0,
                   ad: float = 0.0, label: str = "") -> Observable:
        """Single-atom operator ``ax*sx + ay*sy + az*sz + ad*1`` on ``site``."""
        single = ax * _PAULI["x"] + ay * _PAULI["y"] + az * _PAULI["z"] + ad * _I2
        return cls(_embed(single, site), label or f"O{site}")

    def expect(self, rho: np.ndarray) -> float | np.ndarray:
        """``Tr(O rho)`` for one operator or a stack of shape ``(n, 4, 4)``."""
        rho = np.asarray(rho, dtype=complex)
        values = np.einsum("ij,...ji->...", self.matrix, rho)
        return values.real if values.ndim else float(values.real)


def local_pauli(site: int, axis: str) -> Observable:
    """Pauli operator ``sigma^axis`` acting on atom ``site`` (1 or 2)."""
    if axis not in _PAULI:
        raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")
    return Observable(_embed(_PAULI[axis], site), f"s{axis}{site}")


def excitation_number() -> Observable:
    """``n1 + n2`` with ``n_k = |e><e|_k``."""
    n = sigma_plus(1) @ sigma_minus(1) + sigma_plus(2) @ sigma_minus(2)
    return Observable(n, "n")


# ---------------------------------------------------------------------------
# Named initial states
# ---------------------------------------------------------------------------

def dressed_one_excitation_eigenstates(params: SystemParams) -> tuple[np.ndarray, np.ndarray]:
    """Eigenstates of ``H_S + H_LS`` inside the one-excitation manifold.

    Returns the pair ordered by descending energy, each with the first
    nonzero amplitude real positive.
    """
    detuning = 0.5 * params.delta + params.s1 - params.s2
    block = np.array([[detuning, params.s12], [params.s12, -detuning]], dtype=float)
    _, vecs = np.linalg.eigh(block)
    states = []
    for col in (1, 0):
        psi = np.zeros(DIM, dtype=complex)
        psi[EG], psi[GE] = vecs[0, col], vecs[1, col]
        states.append(pure_state(psi))
    return states[0], states[1]


_ALIASES = {"S_δ": "S_delta", "A_δ": "A_delta", "G+A_R": "G_plus_AR", "G+S_R": "G_plus_SR"}
_NEEDS_CS = {"S_R", "A_R", "G_plus_AR", "G_plus_SR"}
_NEEDS_PARAMS = {"S_delta", "A_delta"}
STATE_NAMES = (
    "ee", "eg", "ge", "gg", "S", "A", "S_R", "A_R", "S_delta", "A_delta",
    "plusplus", "G_plus_AR", "G_plus_SR",
)


def named_state(name: str, cs: CollectiveStates | None = None,
                params: SystemParams | None = None) -> np.ndarray:
    """Density matrix of one of the named pure initial states.

    ``S_R``, ``A_R``, ``G_plus_AR`` and ``G_plus_SR`` need the collective
    states ``cs``; ``S_delta`` and ``A_delta`` need ``params``.
    """
    name = _ALIASES.get(name, name)
    if name not in STATE_NAMES:
        raise ValueError(f"unknown state {name!r}; known states: {', '.join(STATE_NAMES)}")
    if name in _NEEDS_CS and cs is None:
        raise ValueError(f"state {name!r} requires collective states")
    if name in _NEEDS_PARAMS and params is None:
        raise ValueError(f"state {name!r} requires system parameters")

    eg, ge, gg = basis_ket("eg"), basis_ket("ge"), basis_ket("gg")
    if name in BASIS_LABELS:
        psi = basis_ket(name)
    elif name == "S":
        psi = eg + ge
    elif name == "A":
        psi = ge - eg
    elif name == "S_R":
        psi = cs.SR
    elif name == "A_R":
        psi = cs.AR
    elif name == "S_delta":
        psi = dressed_one_excitation_eigenstates(params)[0]
    elif name == "A_delta":
        psi = dressed_one_excitation_eigenstates(params)[1]
    elif name == "plusplus":
        plus = np.array([1, 1], dtype=complex)
        psi = np.kron(plus, plus)
    elif name == "G_plus_AR":
        psi = gg + cs.AR
    else:
        psi = gg + cs.SR
    return projector(pure_state(psi))
