"""Time evolution: modal synthesis, a fixed-step RK4 oracle and closed forms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._csvio import write_csv
from .core import (
    BASIS_LABELS,
    DIM,
    Observable,
    SystemParams,
    check_density_matrix,
    devectorize,
    projector,
    vectorize,
)
from .liouvillian import build_full
from .spectral import CollectiveStates, SpectralDecomposition, coupling_parameter, decompose, mode_weights

HERMITIAN_TOL = 1e-9
DEFAULT_RK4_DT = 1e-3


class StepSizeError(ValueError):
    pass


class HermiticityError(RuntimeError):
    """Modal synthesis produced a visibly non-Hermitian operator."""


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on the uniform grid ``t0 + dt * k``, ``k = 0..n-1``."""

    t0: float
    dt: float
    states: np.ndarray
    provenance: str

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("time step must be positive")
        if self.states.ndim != 3 or self.states.shape[1:] != (DIM, DIM):
            raise ValueError(f"states must have shape (n, 4, 4), got {self.states.shape}")
        if self.provenance not in ("modal", "rk4", "closed-form"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def expect(self, observable: Observable | np.ndarray) -> np.ndarray:
        matrix = observable.matrix if isinstance(observable, Observable) else observable
        return np.einsum("ij,nji->n", matrix, self.states).real

    def validate(self, tol: float = 1e-10, positivity_tol: float = 1e-8) -> None:
        for rho in self.states:
            check_density_matrix(rho, tol=tol, positivity_tol=positivity_tol)


def _modal_sum(weights: np.ndarray, decomp: SpectralDecomposition, times: np.ndarray) -> np.ndarray:
    rights = np.array([m.right for m in decomp.modes])
    lams = decomp.eigenvalues
    phases = np.exp(np.outer(times, lams)) * weights
    return np.einsum("tk,kij->tij", phases, rights)


def evolve_modal(weights: np.ndarray, decomp: SpectralDecomposition, t) -> np.ndarray:
    """Density matrix at time(s) ``t`` from the modal amplitudes.

    The synthesized operator is symmetrized as ``(M + M^dagger) / 2`` only
    after checking that ``M`` was already Hermitian to ``1e-9``.
    """
    decomp.require_nondegenerate()
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0):
        raise ValueError("modal evolution requires t >= 0")
    states = _modal_sum(np.asarray(weights), decomp, times)
    adjoint = states.conj().transpose(0, 2, 1)
    residual = float(np.max(np.abs(states - adjoint))) if states.size else 0.0
    if residual > HERMITIAN_TOL:
        raise HermiticityError(f"modal state is not Hermitian (residual {residual:.2e})")
    states = 0.5 * (states + adjoint)
    return states[0] if np.ndim(t) == 0 else states


def modal_trajectory(rho0: np.ndarray, decomp: SpectralDecomposition, dt: float, n: int,
                     t0: float = 0.0) -> Trajectory:
    weights = mode_weights(rho0, decomp)
    times = t0 + dt * np.arange(n)
    return Trajectory(t0, dt, evolve_modal(weights, decomp, times), "modal")


def propagate_rk4(rho0: np.ndarray, generator: np.ndarray, dt: float, n_steps: int,
                  t0: float = 0.0, store_every: int = 1) -> Trajectory:
    """Integrate ``d|rho>>/dt = L|rho>>`` with the classic fixed-step RK4 scheme.

    Stores every ``store_every``-th state, so the trajectory step is
    ``dt * store_every``.
    """
    bound = 0.1 / float(np.max(np.abs(generator)))
    if dt > bound:
        raise StepSizeError(f"dt = {dt:g} exceeds the stability guard 0.1/max|L| = {bound:g}")
    if n_steps < 0 or store_every < 1 or n_steps % store_every:
        raise ValueError("n_steps must be a non-negative multiple of store_every")
    y = vectorize(rho0)
    out = np.empty((n_steps // store_every + 1, y.size), dtype=complex)
    out[0] = y
    half = 0.5 * dt
    for step in range(1, n_steps + 1):
        k1 = generator @ y
        k2 = generator @ (y + half * k1)
        k3 = generator @ (y + half * k2)
        k4 = generator @ (y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if step % store_every == 0:
            out[step // store_every] = y
    return Trajectory(t0, dt * store_every, devectorize(out), "rk4")


def rk4_substeps(dt: float, max_step: float = DEFAULT_RK4_DT) -> int:
    return max(1, math.ceil(dt / max_step - 1e-9))


def rk4_trajectory(rho0: np.ndarray, params: SystemParams, dt: float, n: int,
                   max_step: float = DEFAULT_RK4_DT) -> Trajectory:
    """RK4 sampled every ``dt`` with internal steps no longer than ``max_step``."""
    sub = rk4_substeps(dt, max_step)
    return propagate_rk4(rho0, build_full(params), dt / sub, (n - 1) * sub, store_every=sub)


def evolve(rho0: np.ndarray, params: SystemParams, dt: float, n: int,
           decomp: SpectralDecomposition | None = None) -> Trajectory:
    """Modal evolution when the spectrum allows it, RK4 otherwise."""
    decomp = decomp or decompose(params)
    if decomp.degenerate:
        return rk4_trajectory(rho0, params, dt, n)
    return modal_trajectory(rho0, decomp, dt, n)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def _single_channel(t, ket, rate):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("closed forms require t >= 0")
    decay = np.exp(-rate * t)[..., None, None]
    ground = np.zeros((DIM, DIM), dtype=complex)
    ground[3, 3] = 1.0
    return ground * (1 - decay) + projector(ket) * decay


def closed_form_pure_AR(t, cs: CollectiveStates, params: SystemParams) -> np.ndarray:
    """State at ``t`` starting from ``|A_R><A_R|``: one subradiant channel."""
    return _single_channel(t, cs.AR, params.gamma0 - cs.V.real)


def closed_form_pure_SR(t, cs: CollectiveStates, params: SystemParams) -> np.ndarray:
    """State at ``t`` starting from ``|S_R><S_R|``: one superradiant channel."""
    return _single_channel(t, cs.SR, params.gamma0 + cs.V.real)


# ---------------------------------------------------------------------------
# Sector-a rate equations in the S_L / A_L frame
# ---------------------------------------------------------------------------

RATE_COMPONENTS = ("EE", "SL_SL", "SL_AL", "AL_SL", "AL_AL", "GG")


def rate_components(rho: np.ndarray, cs: CollectiveStates) -> np.ndarray:
    """``(rho_EE, <S_L|rho|S_L>, <S_L|rho|A_L>, <A_L|rho|S_L>, <A_L|rho|A_L>, rho_GG)``."""
    rho = np.asarray(rho, dtype=complex)
    sl, al = cs.SL, cs.AL
    return np.array([
        rho[0, 0],
        sl.conj() @ rho @ sl,
        sl.conj() @ rho @ al,
        al.conj() @ rho @ sl,
        al.conj() @ rho @ al,
        rho[3, 3],
    ])


def rate_rhs_a(components, params: SystemParams, cs: CollectiveStates) -> np.ndarray:
    """Time derivatives of :func:`rate_components`.

    ``S_L`` and ``A_L`` each feed the ground state through their own channel
    (rates ``gamma0 +- Re V``) and are refilled only from ``|EE>``. In the
    ground-state line the ``gamma2`` term of the ``<S_L|rho|A_L>``
    coefficient carries ``alpha_A**2`` (its partner the conjugate), which
    keeps the derivative real.
    """
    ee, ss, sa, as_, aa, _ = np.asarray(components, dtype=complex)
    g1, g2, g12, g0 = params.gamma1, params.gamma2, params.gamma12, params.gamma0
    vr, vi = cs.V.real, cs.V.imag
    a_s, a_a = cs.alphaS, cs.alphaA
    mod_a = abs(a_a)
    n_a = 1 + mod_a ** 2
    imbalance = (g1 - g2) * (1 - mod_a ** 2) / n_a

    feed_sa = mod_a * (g1 + g2 * a_s * a_a.conjugate() + g12 * (a_s + a_a.conjugate())) / n_a
    feed_as = mod_a * (g1 + g2 * a_a * a_s.conjugate() + g12 * (a_a + a_s.conjugate())) / n_a
    cross = -g1 * mod_a + g2 * a_a ** 2 / mod_a + g12 * (a_a * mod_a - a_a / mod_a)

    d_ee = -(g1 + g2) * ee
    d_ss = (g0 + vr - imbalance) * ee - (g0 + vr) * ss
    d_sa = feed_sa * ee - (g0 + 1j * vi) * sa
    d_as = feed_as * ee - (g0 - 1j * vi) * as_
    d_aa = (g0 - vr + imbalance) * ee - (g0 - vr) * aa
    d_gg = n_a / abs(1 + a_a ** 2) ** 2 * (
        n_a * (g0 + vr) * ss + cross * sa + np.conj(cross) * as_ + n_a * (g0 - vr) * aa
    )
    return np.array([d_ee, d_ss, d_sa, d_as, d_aa, d_gg])


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def state_columns() -> list[str]:
    idx = [(i, j) for i in range(DIM) for j in range(DIM)]
    return ([f"re(rho_{i + 1}{j + 1})" for i, j in idx]
            + [f"im(rho_{i + 1}{j + 1})" for i, j in idx])


def write_trajectory_csv(path, traj: Trajectory, meta: dict,
                         extra: dict[str, np.ndarray] | None = None,
                         footer: list[str] | None = None):
    """Write ``t``, real and imaginary parts of every ``rho_ij``, then ``extra`` columns."""
    flat = traj.states.reshape(traj.n, DIM * DIM)
    columns = ["t"] + state_columns()
    data = [traj.times[:, None], flat.real, flat.imag]
    for name, values in (extra or {}).items():
        columns.append(name)
        data.append(np.asarray(values, dtype=float)[:, None])
    meta = dict(meta, basis=list(BASIS_LABELS), provenance=traj.provenance)
    return write_csv(path, columns, np.hstack(data), meta, footer)


def decay_rates(params: SystemParams) -> tuple[float, float]:
    """Subradiant and superradiant single-channel rates ``gamma0 -+ Re V``."""
    vr = coupling_parameter(params).real
    return params.gamma0 - vr, params.gamma0 + vr
