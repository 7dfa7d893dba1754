"""Liouville-space generator of the two-atom master equation.

Two independent constructions are provided. :func:`build_full` assembles the
16x16 superoperator from operator Kronecker products, while
:func:`build_sectors` writes down the five invariant blocks entry by entry.
:func:`verify_block_structure` checks that the two agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    CONSTRUCTION_TOL,
    DIM,
    HS_DIM,
    SystemParams,
    sigma_minus,
    sigma_plus,
    sigma_z,
)

SECTOR_LABELS = ("a", "b", "c", "d", "e")
# 0-based row-major indices of the basis elements spanning each sector
SECTOR_INDICES: dict[str, tuple[int, ...]] = {
    "a": (0, 5, 6, 9, 10, 15),  # |ee><ee| |eg><eg| |eg><ge| |ge><eg| |ge><ge| |gg><gg|
    "b": (1, 2, 7, 11),         # |ee><eg| |ee><ge| |eg><gg| |ge><gg|
    "c": (4, 8, 13, 14),        # |eg><ee| |ge><ee| |gg><eg| |gg><ge|
    "d": (3,),                  # |ee><gg|
    "e": (12,),                 # |gg><ee|
}

_ID = np.eye(DIM, dtype=complex)


@dataclass(frozen=True, eq=False)
class SectorMatrix:
    label: str
    matrix: np.ndarray
    indices: tuple[int, ...]

    def __post_init__(self):
        if self.indices != SECTOR_INDICES[self.label]:
            raise ValueError(f"sector {self.label} must use indices {SECTOR_INDICES[self.label]}")
        n = len(self.indices)
        if self.matrix.shape != (n, n):
            raise ValueError(f"sector {self.label} must be {n}x{n}")


def hamiltonian(params: SystemParams) -> np.ndarray:
    """``H_S + H_LS`` without the local shifts ``s1``, ``s2``."""
    h = 0.5 * params.omega1 * sigma_z(1) + 0.5 * params.omega2 * sigma_z(2)
    hop = sigma_minus(1) @ sigma_plus(2) + sigma_plus(1) @ sigma_minus(2)
    return h + params.s12 * hop


def _left(op):
    return np.kron(op, _ID)


def _right(op):
    return np.kron(_ID, op.T)


def _lindblad_sum(rates: np.ndarray, jump_ops, dagger_ops) -> np.ndarray:
    """``sum_ij r_ij (A_i rho B_j - {B_j A_i, rho}/2)`` as a superoperator."""
    out = np.zeros((HS_DIM, HS_DIM), dtype=complex)
    for i, a in enumerate(jump_ops):
        for j, b in enumerate(dagger_ops):
            if rates[i, j] == 0:
                continue
            ba = b @ a
            out += rates[i, j] * (np.kron(a, b.T) - 0.5 * _left(ba) - 0.5 * _right(ba))
    return out


def build_full(params: SystemParams) -> np.ndarray:
    """Full 16x16 Liouvillian acting on row-major vectorized operators."""
    h = hamiltonian(params)
    generator = -1j * (_left(h) - _right(h))

    damping = np.array([[params.gamma1, params.gamma12], [params.gamma12, params.gamma2]])
    lowering = [sigma_minus(1), sigma_minus(2)]
    raising = [sigma_plus(1), sigma_plus(2)]
    generator += _lindblad_sum(damping, lowering, raising)

    if params.has_dephasing:
        dephasing = np.array([[params.dep11, params.dep12], [params.dep12, params.dep22]])
        zs = [sigma_z(1), sigma_z(2)]
        generator += _lindblad_sum(dephasing, zs, zs)
    return generator


def build_sectors(params: SystemParams) -> dict[str, SectorMatrix]:
    """The five diagonal blocks of the Liouvillian, written out explicitly.

    Dephasing adds ``-2 (d_11 (dz1)^2 + 2 d_12 dz1 dz2 + d_22 (dz2)^2) / 4``
    to the element ``|m><n|`` where ``dz_k`` is the difference of the
    ``sigma^z_k`` eigenvalues of ``m`` and ``n``; it is diagonal in every
    sector.
    """
    g1, g2, g12 = params.gamma1, params.gamma2, params.gamma12
    s12, w0, d = params.s12, params.omega0, params.delta
    g0 = params.gamma0
    cm = -0.5 * g12 + 1j * s12
    cp = -0.5 * g12 - 1j * s12

    la = np.array([
        [-(g1 + g2), 0, 0, 0, 0, 0],
        [g2, -g1, cm, cp, 0, 0],
        [g12, cm, -g0 - 1j * d, 0, cp, 0],
        [g12, cp, 0, -g0 + 1j * d, cm, 0],
        [g1, 0, cp, cm, -g2, 0],
        [0, g1, g12, g12, g2, 0],
    ], dtype=complex)
    lb = np.array([
        [-g1 - 0.5 * g2 - 1j * (w0 - 0.5 * d), cm, 0, 0],
        [cm, -0.5 * g1 - g2 - 1j * (w0 + 0.5 * d), 0, 0],
        [g12, g2, -0.5 * g1 - 1j * (w0 + 0.5 * d), cp],
        [g1, g12, cp, -0.5 * g2 - 1j * (w0 - 0.5 * d)],
    ], dtype=complex)
    ld = np.array([[-g0 - 2j * w0]], dtype=complex)

    d11, d22, d12 = params.dep11, params.dep22, params.dep12
    # coherence |eg><ge| has dz = (2, -2); one-atom coherences have a single dz = 2
    la[2, 2] -= 2 * (d11 + d22 - 2 * d12)
    la[3, 3] -= 2 * (d11 + d22 - 2 * d12)
    lb += np.diag([-2 * d22, -2 * d11, -2 * d11, -2 * d22])
    ld[0, 0] -= 2 * (d11 + d22 + 2 * d12)

    blocks = {"a": la, "b": lb, "c": lb.conj(), "d": ld, "e": ld.conj()}
    return {k: SectorMatrix(k, v, SECTOR_INDICES[k]) for k, v in blocks.items()}


def assemble(sectors: dict[str, SectorMatrix]) -> np.ndarray:
    """Embed the sector blocks back into a 16x16 matrix."""
    full = np.zeros((HS_DIM, HS_DIM), dtype=complex)
    for sec in sectors.values():
        idx = np.array(sec.indices)
        full[np.ix_(idx, idx)] = sec.matrix
    return full


class BlockStructureError(AssertionError):
    def __init__(self, report: BlockReport):
        self.report = report
        super().__init__(report.describe())


@dataclass
class BlockReport:
    residuals: dict[str, float]
    off_block: float
    offending: list[tuple[int, int, complex]] = field(default_factory=list)
    tol: float = CONSTRUCTION_TOL

    @property
    def ok(self) -> bool:
        return not self.offending

    def describe(self) -> str:
        if self.ok:
            worst = max(self.residuals.values())
            return f"block structure ok (max residual {worst:.2e})"
        lines = [f"{len(self.offending)} entries exceed {self.tol:g}:"]
        for i, j, v in self.offending[:10]:
            lines.append(f"  L[{i}, {j}] residual {abs(v):.3e}")
        return "\n".join(lines)


def verify_block_structure(full: np.ndarray, sectors: dict[str, SectorMatrix],
                           tol: float = CONSTRUCTION_TOL, strict: bool = True) -> BlockReport:
    """Compare the full Liouvillian with the direct sum of its sectors.

    Returns the maximum entrywise residual per sector and outside the
    blocks. With ``strict`` a mismatch raises :class:`BlockStructureError`
    whose report lists the offending ``(row, col)`` index pairs of the
    16x16 matrix.
    """
    diff = np.asarray(full) - assemble(sectors)
    residuals = {}
    in_block = np.zeros((HS_DIM, HS_DIM), dtype=bool)
    for label, sec in sectors.items():
        idx = np.array(sec.indices)
        residuals[label] = float(np.max(np.abs(diff[np.ix_(idx, idx)])))
        in_block[np.ix_(idx, idx)] = True
    off = np.abs(diff[~in_block])
    report = BlockReport(residuals, float(off.max()) if off.size else 0.0, tol=tol)
    rows, cols = np.nonzero(np.abs(diff) > tol)
    report.offending = [(int(i), int(j), complex(diff[i, j])) for i, j in zip(rows, cols)]
    if strict and not report.ok:
        raise BlockStructureError(report)
    return report
