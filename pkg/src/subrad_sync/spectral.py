"""Eigen-decomposition of the Liouvillian, sector by sector.

Where closed forms exist (all eigenvalues without dephasing, most sector-a
eigenvectors, half of the sector-b ones) they are used directly; the
remaining eigenvectors come from a dense eigensolver on the sector block and
are matched to their analytic labels by eigenvalue.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.optimize import linear_sum_assignment

from .core import (
    DIM,
    HS_DIM,
    SystemParams,
    basis_ket,
    devectorize,
    hs_inner,
    ketbra,
    projector,
)
from .liouvillian import SECTOR_INDICES, SECTOR_LABELS, SectorMatrix, build_sectors

DEGENERACY_RTOL = 1e-9
SPECTRAL_TOL = 1e-9

_E = basis_ket("ee")
_G = basis_ket("gg")


class IndependentAtoms(ValueError):
    """gamma12 = s12 = 0: the collective states are undefined."""


class DegenerateSpectrum(RuntimeError):
    """The modal expansion is unavailable because eigenvalues collide."""

    def __init__(self, collisions):
        self.collisions = tuple(collisions)
        desc = ", ".join(f"{a}={la_:.10g} ~ {b}={lb:.10g}" for a, b, la_, lb in self.collisions)
        super().__init__(
            f"degenerate Liouvillian spectrum ({desc}); use the Runge-Kutta integrator instead"
        )


def _branch_sqrt(re: float, im: float) -> complex:
    """Principal square root with Re >= 0, ties broken toward Im >= 0."""
    root = cmath.sqrt(complex(re, im + 0.0))
    if root.real < 0 or (root.real == 0 and root.imag < 0):
        root = -root
    return root


def _coupling(gamma12: float, s12: float, half_diff: float, delta: float) -> complex:
    # (gamma12 + 2i s12)^2 + (half_diff + i delta)^2 in real arithmetic, so
    # purely real arguments stay exactly real
    re = gamma12 ** 2 - 4 * s12 ** 2 + half_diff ** 2 - delta ** 2
    im = 4 * gamma12 * s12 + 2 * half_diff * delta
    return _branch_sqrt(re, im)


def coupling_parameter(params: SystemParams) -> complex:
    """Collective coupling ``V``; ``Re V`` sets the super/subradiant splitting."""
    return _coupling(params.gamma12, params.s12, 0.5 * (params.gamma1 - params.gamma2), params.delta)


def sync_constants(params: SystemParams) -> tuple[float, float]:
    """Return ``(kappa_s, nu_s)``: synchronization rate and frequency."""
    v = coupling_parameter(params)
    return v.real, params.omega0 - 0.5 * v.imag


@dataclass(frozen=True, eq=False)
class CollectiveStates:
    """Generalized super/subradiant states of the one-excitation manifold.

    ``SR`` and ``AR`` are ``(alpha |eg> + |ge>) / sqrt(1 + |alpha|^2)``; the
    left partners are their componentwise conjugates.
    """

    V: complex
    alphaS: complex
    alphaA: complex
    SR: np.ndarray
    AR: np.ndarray
    SL: np.ndarray
    AL: np.ndarray


def _one_excitation(alpha: complex) -> np.ndarray:
    psi = alpha * basis_ket("eg") + basis_ket("ge")
    return psi / math.sqrt(1 + abs(alpha) ** 2)


def collective_states(params: SystemParams) -> CollectiveStates:
    coupling = complex(params.gamma12, 2 * params.s12)
    if coupling == 0:
        raise IndependentAtoms("gamma12 = s12 = 0: collective states are undefined")
    v = coupling_parameter(params)
    base = complex(0.5 * (params.gamma1 - params.gamma2), params.delta)
    alpha_s = (base + v) / coupling
    alpha_a = (base - v) / coupling
    sr, ar = _one_excitation(alpha_s), _one_excitation(alpha_a)
    return CollectiveStates(v, alpha_s, alpha_a, sr, ar, sr.conj(), ar.conj())


# ---------------------------------------------------------------------------
# Spectral decomposition containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mode:
    """One eigenpair: right eigenoperator, left (dual) eigenoperator, overlap."""

    sector: str
    index: int
    eigenvalue: complex
    right: np.ndarray
    left: np.ndarray
    norm: complex
    analytic: bool

    @property
    def label(self) -> str:
        return f"{self.sector}{self.index}"


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    params: SystemParams
    modes: tuple[Mode, ...]
    collisions: tuple[tuple[str, str, complex, complex], ...] = ()

    @property
    def degenerate(self) -> bool:
        return bool(self.collisions)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([m.eigenvalue for m in self.modes])

    def sector(self, label: str) -> tuple[Mode, ...]:
        return tuple(m for m in self.modes if m.sector == label)

    def position(self, sector: str, index: int) -> int:
        for pos, m in enumerate(self.modes):
            if m.sector == sector and m.index == index:
                return pos
        raise KeyError(f"no mode {sector}{index}")

    def mode(self, sector: str, index: int) -> Mode:
        return self.modes[self.position(sector, index)]

    def require_nondegenerate(self):
        if self.degenerate:
            raise DegenerateSpectrum(self.collisions)

    def to_dict(self) -> dict:
        def cplx(z):
            return [float(np.real(z)), float(np.imag(z))]

        def op(m):
            return {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}

        kappa, nu = sync_constants(self.params)
        return {
            "params": self.params.as_dict(),
            "V": cplx(coupling_parameter(self.params)),
            "kappaS": kappa,
            "nuS": nu,
            "degenerate": self.degenerate,
            "collisions": [[a, b, cplx(x), cplx(y)] for a, b, x, y in self.collisions],
            "modes": [
                {
                    "sector": m.sector,
                    "index": m.index,
                    "eigenvalue": cplx(m.eigenvalue),
                    "analytic": m.analytic,
                    "norm": cplx(m.norm),
                    "right": op(m.right),
                    "left": op(m.left),
                }
                for m in self.modes
            ],
        }


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _embed(vec: np.ndarray, sector: str) -> np.ndarray:
    full = np.zeros(HS_DIM, dtype=complex)
    full[list(SECTOR_INDICES[sector])] = vec
    return devectorize(full)


def _collisions(labels, values) -> list[tuple[str, str, complex, complex]]:
    values = np.asarray(values, dtype=complex)
    scale = max(float(np.max(np.abs(values))), 1.0) if values.size else 1.0
    out = []
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if abs(values[i] - values[j]) < DEGENERACY_RTOL * scale:
                out.append((labels[i], labels[j], complex(values[i]), complex(values[j])))
    return out


def _match(expected: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """Permutation ``perm`` with ``numeric[perm[i]]`` closest to ``expected[i]``."""
    cost = np.abs(expected[:, None] - numeric[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(expected), dtype=int)
    perm[rows] = cols
    return perm


def _unit_right(vec: np.ndarray) -> np.ndarray:
    vec = vec / np.linalg.norm(vec)
    lead = vec.flat[np.argmax(np.abs(vec))]
    return vec * (abs(lead) / lead)


def _dual_phase(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Unit-norm left operator rotated so ``<<left|right>>`` is real positive."""
    left = left / np.linalg.norm(left)
    overlap = hs_inner(left, right)
    if overlap == 0:
        return left
    return left * (overlap / abs(overlap))


def _right_dual_phase(right: np.ndarray, left: np.ndarray) -> np.ndarray:
    """Unit-norm right operator rotated so ``<<left|right>>`` is real positive."""
    right = right / np.linalg.norm(right)
    overlap = hs_inner(left, right)
    if overlap == 0:
        return right
    return right * (abs(overlap) / overlap)


def _make_mode(sector, index, eigenvalue, right, left, analytic) -> Mode:
    right = np.asarray(right, dtype=complex)
    left = np.asarray(left, dtype=complex)
    right.setflags(write=False)
    left.setflags(write=False)
    return Mode(sector, index, complex(eigenvalue), right, left, hs_inner(left, right), analytic)


def _numeric_eig(matrix: np.ndarray):
    w, vl, vr = la.eig(matrix, left=True, right=True)
    return w, vl, vr


def _dephasing_neutral_a(params: SystemParams) -> bool:
    return abs(params.dep11 + params.dep22 - 2 * params.dep12) <= 1e-15 * (1 + params.dep11 + params.dep22)


# ---------------------------------------------------------------------------
# Sector a
# ---------------------------------------------------------------------------

def analytic_eigenvalues_a(params: SystemParams) -> np.ndarray:
    """Sector-a eigenvalues without (or with neutral) dephasing, labels 1..6."""
    v = coupling_parameter(params)
    g0 = params.gamma0
    return np.array([0, -2 * g0, -g0 - 1j * v.imag, -g0 + 1j * v.imag, -g0 - v.real, -g0 + v.real],
                    dtype=complex)


def _null_vector(matrix: np.ndarray) -> np.ndarray:
    _, _, vh = la.svd(matrix)
    return vh[-1].conj()


def _tau2(sector: SectorMatrix, g0: float) -> np.ndarray:
    """Right eigenoperator for -2 gamma0 with unit |EE><EE| component."""
    vec = _null_vector(sector.matrix + 2 * g0 * np.eye(6))
    if abs(vec[0]) < SPECTRAL_TOL:
        # -2 gamma0 is shared with another mode; any null vector will do
        return _unit_right(_embed(vec, "a"))
    return _embed(vec / vec[0], "a")


def left_coefficients(params: SystemParams, cs: CollectiveStates) -> tuple[complex, float, float]:
    """|EE><EE| admixtures ``(x', y1, y2)`` of the sector-a left eigenoperators.

    ``x'`` belongs to ``|S_L><A_L| + x' |EE><EE|``, i.e. the dual of
    ``|S_R><A_R|`` scaled by ``Tr(|S_L><A_L|)`` so it stays finite when
    ``S_R`` and ``A_R`` are orthogonal.
    """
    g1, g2, g12, g0 = params.gamma1, params.gamma2, params.gamma12, params.gamma0
    v = cs.V
    a_s, a_a = cs.alphaS, cs.alphaA
    n_s, n_a = 1 + abs(a_s) ** 2, 1 + abs(a_a) ** 2
    y1 = (g0 + v.real + (g1 - g2) * (1 - abs(a_s) ** 2) / n_s) / (g0 - v.real)
    y2 = (g0 - v.real + (g1 - g2) * (1 - abs(a_a) ** 2) / n_a) / (g0 + v.real)
    x = abs(a_a) * (g1 + g2 * a_a * a_s.conjugate() + g12 * (a_a + a_s.conjugate())) / (
        n_a * (g0 + 1j * v.imag))
    return x, y1, y2


def eigensystem_a(params: SystemParams, sectors: dict[str, SectorMatrix] | None = None):
    """Eigenpairs of sector a.

    Returns ``(modes, collisions)``. The analytic route is used whenever
    dephasing leaves sector a unchanged and the collective states exist;
    otherwise eigenvectors 3-6 are numeric.
    """
    sectors = sectors or build_sectors(params)
    sec = sectors["a"]
    g0 = params.gamma0
    labels = [f"a{i}" for i in range(1, 7)]
    expected = analytic_eigenvalues_a(params)
    eye = np.eye(DIM, dtype=complex)
    e_proj, g_proj = projector(_E), projector(_G)
    tau2 = _tau2(sec, g0)

    try:
        cs = collective_states(params)
    except IndependentAtoms:
        cs = None

    # y1 divides by gamma0 - Re V, which vanishes in the Dicke limit
    finite = cs is not None and g0 - abs(cs.V.real) > SPECTRAL_TOL * max(g0, 1.0)
    if finite and _dephasing_neutral_a(params):
        x, y1, y2 = left_coefficients(params, cs)
        sr, ar, sl, al = cs.SR, cs.AR, cs.SL, cs.AL
        rights = [
            g_proj,
            tau2,
            ketbra(sr, ar) - np.vdot(ar, sr) * g_proj,
            ketbra(ar, sr) - np.vdot(sr, ar) * g_proj,
            projector(sr) - g_proj,
            projector(ar) - g_proj,
        ]
        lefts = [
            eye,
            e_proj,
            ketbra(sl, al) + x * e_proj,
            ketbra(al, sl) + np.conj(x) * e_proj,
            projector(sl) + y1 * e_proj,
            projector(al) + y2 * e_proj,
        ]
        flags = [True, False, True, True, True, True]
        modes = [_make_mode("a", i + 1, expected[i], rights[i], lefts[i], flags[i]) for i in range(6)]
        return modes, _collisions(labels, expected)

    w, vl, vr = _numeric_eig(sec.matrix)
    perm = _match(expected, w)
    values = w[perm]
    values[0], values[1] = 0.0, -2 * g0
    modes = [
        _make_mode("a", 1, 0.0, g_proj, eye, True),
        _make_mode("a", 2, -2 * g0, tau2, e_proj, False),
    ]
    for i in range(2, 6):
        right = _unit_right(_embed(vr[:, perm[i]], "a"))
        left = _dual_phase(_embed(vl[:, perm[i]], "a"), right)
        modes.append(_make_mode("a", i + 1, values[i], right, left, False))
    return modes, _collisions(labels, values)


# ---------------------------------------------------------------------------
# Sectors b, c, d, e
# ---------------------------------------------------------------------------

def analytic_eigenvalues_b(params: SystemParams) -> np.ndarray:
    """Sector-b eigenvalues, labels 1..4, including dephasing.

    Sector b is block lower-triangular with two 2x2 diagonal blocks, so its
    eigenvalues have closed forms. Unequal local dephasing rates shift the
    effective rate asymmetry ``(gamma1 - gamma2)/2`` by ``-+2 (dep11 - dep22)``.
    """
    g0, w0 = params.gamma0, params.omega0
    half = 0.5 * (params.gamma1 - params.gamma2)
    ddiff = 2 * (params.dep11 - params.dep22)
    shift = -(params.dep11 + params.dep22)
    v_up = _coupling(params.gamma12, params.s12, half - ddiff, params.delta).conjugate()
    v_low = _coupling(params.gamma12, params.s12, half + ddiff, params.delta)
    return np.array([
        -0.5 * (3 * g0 + v_up) - 1j * w0 + shift,
        -0.5 * (3 * g0 - v_up) - 1j * w0 + shift,
        -0.5 * (g0 + v_low) - 1j * w0 + shift,
        -0.5 * (g0 - v_low) - 1j * w0 + shift,
    ])


def eigenvalue_d(params: SystemParams) -> complex:
    return (-params.gamma0 - 2j * params.omega0
            - 2 * (params.dep11 + params.dep22 + 2 * params.dep12))


def eigensystem_bcde(params: SystemParams, sectors: dict[str, SectorMatrix] | None = None):
    """Eigenpairs of sectors b, c, d and e; returns ``(modes, collisions)``."""
    sectors = sectors or build_sectors(params)
    expected = analytic_eigenvalues_b(params)
    w, vl, vr = _numeric_eig(sectors["b"].matrix)
    perm = _match(expected, w)

    try:
        cs = collective_states(params)
    except IndependentAtoms:
        cs = None
    analytic = cs is not None and params.dep11 == params.dep22

    modes = []
    for i in range(4):
        numeric_right = _embed(vr[:, perm[i]], "b")
        numeric_left = _embed(vl[:, perm[i]], "b")
        if analytic and i >= 2:
            right = ketbra(cs.SR if i == 2 else cs.AR, _G)
            left = _dual_phase(numeric_left, right)
        elif analytic:
            left = ketbra(_E, cs.SL if i == 0 else cs.AL)
            right = _right_dual_phase(numeric_right, left)
        else:
            right = _unit_right(numeric_right)
            left = _dual_phase(numeric_left, right)
        # flag marks pairs whose right eigenoperator is closed-form
        modes.append(_make_mode("b", i + 1, expected[i], right, left, analytic and i >= 2))
    for m in list(modes):
        modes.append(_make_mode("c", m.index, np.conj(m.eigenvalue), m.right.conj().T,
                                m.left.conj().T, m.analytic))
    lam_d = eigenvalue_d(params)
    eg_op = ketbra(_E, _G)
    modes.append(_make_mode("d", 1, lam_d, eg_op, eg_op, True))
    modes.append(_make_mode("e", 1, np.conj(lam_d), eg_op.T.copy(), eg_op.T.copy(), True))

    labels = [f"b{i}" for i in range(1, 5)]
    collisions = _collisions(labels, expected)
    collisions += [(f"c{a[1:]}", f"c{b[1:]}", np.conj(x), np.conj(y)) for a, b, x, y in collisions]
    return modes, collisions


def decompose(params: SystemParams) -> SpectralDecomposition:
    """Full biorthogonal eigen-decomposition of the Liouvillian."""
    sectors = build_sectors(params)
    modes_a, coll_a = eigensystem_a(params, sectors)
    modes_rest, coll_rest = eigensystem_bcde(params, sectors)
    modes = tuple(modes_a + modes_rest)
    order = {s: k for k, s in enumerate(SECTOR_LABELS)}
    modes = tuple(sorted(modes, key=lambda m: (order[m.sector], m.index)))
    return SpectralDecomposition(params, modes, tuple(coll_a + coll_rest))


def mode_weights(rho0: np.ndarray, decomp: SpectralDecomposition) -> np.ndarray:
    """Modal amplitudes ``<<left_i|rho0>> / <<left_i|right_i>>``, aligned with ``decomp.modes``."""
    decomp.require_nondegenerate()
    rho0 = np.asarray(rho0, dtype=complex)
    return np.array([hs_inner(m.left, rho0) / m.norm for m in decomp.modes])


def mode_weight(rho0: np.ndarray, mode: Mode) -> complex:
    """Amplitude of a single mode; needs only that mode's own biorthogonal pair."""
    return hs_inner(mode.left, np.asarray(rho0, dtype=complex)) / mode.norm
