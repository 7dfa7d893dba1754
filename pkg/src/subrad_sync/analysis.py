"""Observables built on the modal picture: Bloch signals, emission and synchronization.

Signals are plain :class:`SignalSeries` on a uniform grid. The Pearson
indicator integrates with the trapezoidal rule over a window of the grid;
its delayed variant shifts the second signal through a cubic spline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .core import Observable, SystemParams, local_pauli, named_state, sigma_minus, sigma_plus
from .dynamics import Trajectory, evolve
from .spectral import (
    CollectiveStates,
    IndependentAtoms,
    SpectralDecomposition,
    collective_states,
    decompose,
    mode_weight,
    sync_constants,
)

LEAKAGE_TOL = 1e-12
DELAY_POINTS = 256
MIN_WINDOW_SAMPLES = 10
FLAT_TOL = 1e-14
DEFAULT_WINDOW = 2.0
DEFAULT_SIGNAL_DT = 1e-2


class UndefinedCorrelation(ValueError):
    """A window in which one of the signals is constant."""


class SectorLeakage(AssertionError):
    pass


@dataclass(frozen=True, eq=False)
class SignalSeries:
    t0: float
    dt: float
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("signal values must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"signal {self.label!r} has non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def index(self, t: float) -> int:
        """Grid index of ``t``; raises if ``t`` is not a grid point."""
        k = round((t - self.t0) / self.dt)
        if abs(self.t0 + k * self.dt - t) > 1e-9 * max(1.0, abs(t)) or not 0 <= k < self.n:
            raise ValueError(f"t = {t} is not on the grid of {self.label!r}")
        return k

    def at(self, t: float) -> float:
        return float(self.values[self.index(t)])


@dataclass(frozen=True, eq=False)
class SyncReport:
    """Plain and delayed Pearson series; ``delay`` holds the chosen shift at each time."""

    window: float
    plain: SignalSeries
    delay: SignalSeries
    delayed: SignalSeries

    @property
    def best_delay(self) -> float:
        return float(self.delay.values[-1])


@dataclass(frozen=True, eq=False)
class RadianceReport:
    intensity: SignalSeries
    subradiant: SignalSeries
    ratio: SignalSeries
    flagged: bool = False
    notes: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Bloch components
# ---------------------------------------------------------------------------

_SECTORS_FOR_AXIS = {"x": ("b", "c"), "y": ("b", "c"), "z": ("a",)}


def bloch_series(traj: Trajectory, site: int, axis: str) -> SignalSeries:
    """``<sigma^axis_site>`` along a trajectory by direct traces."""
    obs = local_pauli(site, axis)
    return SignalSeries(traj.t0, traj.dt, traj.expect(obs), obs.label)


def modal_expectation(obs: Observable, weights: np.ndarray, decomp: SpectralDecomposition,
                      times: np.ndarray, sectors: tuple[str, ...] | None = None) -> np.ndarray:
    """``sum_i p_i Tr(O tau_i) exp(lambda_i t)``.

    With ``sectors`` given, every mode outside them must have a vanishing
    trace against ``O``; anything else raises :class:`SectorLeakage`.
    """
    decomp.require_nondegenerate()
    traces = np.array([np.trace(obs.matrix @ m.right) for m in decomp.modes])
    if sectors is not None:
        outside = np.array([m.sector not in sectors for m in decomp.modes])
        leak = np.abs(traces[outside] * weights[outside])
        if leak.size and leak.max() > LEAKAGE_TOL:
            raise SectorLeakage(f"{obs.label} picks up {leak.max():.2e} outside sectors {sectors}")
        traces = np.where(outside, 0, traces)
    values = np.exp(np.outer(times, decomp.eigenvalues)) @ (weights * traces)
    return values.real


def bloch_series_modal(weights: np.ndarray, decomp: SpectralDecomposition, dt: float, n: int,
                       site: int, axis: str) -> SignalSeries:
    """Bloch component from the modal expansion, restricted to the sectors that carry it."""
    obs = local_pauli(site, axis)
    times = dt * np.arange(n)
    values = modal_expectation(obs, weights, decomp, times, _SECTORS_FOR_AXIS[axis])
    return SignalSeries(0.0, dt, values, obs.label)


def closed_form_bloch(initial: str, site: int, t, cs: CollectiveStates,
                      params: SystemParams) -> np.ndarray:
    """``<sigma^x_site>`` for ``(|G> + |A_R>)/sqrt 2`` or ``(|G> + |S_R>)/sqrt 2``.

    Each signal is a single damped cosine. For the ``S_R`` start both sites
    decay at ``(gamma0 + Re V)/2``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("closed forms require t >= 0")
    if initial == "G_plus_AR":
        alpha, rate = cs.alphaA, params.gamma0 - cs.V.real
        freq = params.omega0 - 0.5 * cs.V.imag
    elif initial == "G_plus_SR":
        alpha, rate = cs.alphaS, params.gamma0 + cs.V.real
        freq = params.omega0 + 0.5 * cs.V.imag
    else:
        raise ValueError(f"no closed form for initial state {initial!r}")
    norm = math.sqrt(1 + abs(alpha) ** 2)
    envelope = np.exp(-0.5 * rate * t) / norm
    if site == 1:
        return abs(alpha) * envelope * np.cos(freq * t - np.angle(alpha))
    if site == 2:
        return envelope * np.cos(freq * t)
    raise ValueError("site must be 1 or 2")


# ---------------------------------------------------------------------------
# Radiation
# ---------------------------------------------------------------------------

def radiation_operator(params: SystemParams) -> Observable:
    """``Q = sum_ij gamma_ij sigma_i^+ sigma_j^-``."""
    rates = np.array([[params.gamma1, params.gamma12], [params.gamma12, params.gamma2]])
    q = sum(rates[i, j] * sigma_plus(i + 1) @ sigma_minus(j + 1)
            for i in range(2) for j in range(2))
    return Observable(q, "Q")


def radiation_rate(rho: np.ndarray, params: SystemParams) -> float:
    return radiation_operator(params).expect(rho)


def radiation_series(traj: Trajectory, params: SystemParams) -> SignalSeries:
    return SignalSeries(traj.t0, traj.dt, traj.expect(radiation_operator(params)), "I")


def radiation_series_modal(weights: np.ndarray, decomp: SpectralDecomposition, dt: float,
                           n: int) -> SignalSeries:
    """``I(t)`` from sector-a modes only; the steady state must not radiate."""
    q = radiation_operator(decomp.params)
    ground = decomp.mode("a", 1)
    residual = abs(np.trace(q.matrix @ ground.right))
    if residual > LEAKAGE_TOL:
        raise SectorLeakage(f"steady state radiates ({residual:.2e})")
    values = modal_expectation(q, weights, decomp, dt * np.arange(n), ("a",))
    return SignalSeries(0.0, dt, values, "I")


def _ratio(intensity: np.ndarray, subradiant: np.ndarray) -> np.ndarray:
    both_small = (np.abs(intensity) < FLAT_TOL) & (np.abs(subradiant) < FLAT_TOL)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.minimum(intensity / subradiant, subradiant / intensity)
    r = np.where(np.isfinite(r), r, 0.0)
    return np.where(both_small, 1.0, np.clip(r, 0.0, 1.0))


def radiance_report(intensity: SignalSeries, p06: complex, mode6,
                    params: SystemParams) -> RadianceReport:
    """Compare ``I(t)`` with the slow subradiant term ``p06 Tr(Q tau6) exp(lambda6 t)``."""
    amplitude = p06 * np.trace(radiation_operator(params).matrix @ mode6.right)
    times = intensity.times
    sub = (amplitude * np.exp(mode6.eigenvalue * times)).real
    notes = []
    flagged = abs(p06) < FLAT_TOL
    if flagged:
        sub = np.zeros_like(times)
        notes.append("initial state has no weight on the slowest sector-a mode; I_SR is zero")
    ratio = _ratio(intensity.values, sub)
    return RadianceReport(
        intensity,
        SignalSeries(intensity.t0, intensity.dt, sub, "I_SR"),
        SignalSeries(intensity.t0, intensity.dt, ratio, "R_I"),
        flagged,
        notes,
    )


def subradiance_ratio(weights: np.ndarray, decomp: SpectralDecomposition, dt: float,
                      n: int) -> RadianceReport:
    """Radiation rate, its slow subradiant part and the ratio ``R_I``."""
    intensity = radiation_series_modal(weights, decomp, dt, n)
    p06 = weights[decomp.position("a", 6)]
    return radiance_report(intensity, p06, decomp.mode("a", 6), decomp.params)


# ---------------------------------------------------------------------------
# Pearson indicator
# ---------------------------------------------------------------------------

def _window_samples(series: SignalSeries, window: float) -> int:
    m = round(window / series.dt)
    if m < 1 or abs(m * series.dt - window) > 1e-9 * window:
        raise ValueError(f"window {window} is not a multiple of the grid step {series.dt}")
    if m + 1 < MIN_WINDOW_SAMPLES:
        raise ValueError(f"window holds {m + 1} samples; at least {MIN_WINDOW_SAMPLES} needed")
    return m


def _trapezoid_weights(m: int, dt: float) -> np.ndarray:
    w = np.full(m + 1, dt)
    w[[0, -1]] = 0.5 * dt
    return w


def _correlate(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Pearson of ``a`` (m,) against each row of ``b`` (..., m) with quadrature weights ``w``."""
    if np.ptp(a) < FLAT_TOL or np.any(np.ptp(b, axis=-1) < FLAT_TOL):
        raise UndefinedCorrelation("a signal is constant over the window")
    total = w.sum()
    da = a - (w @ a) / total
    db = b - (b @ w)[..., None] / total
    num = db @ (w * da)
    den = np.sqrt((w @ da ** 2) * ((db ** 2) @ w))
    return np.clip(num / den, -1.0, 1.0)


def pearson(a: SignalSeries, b: SignalSeries, t: float, window: float = DEFAULT_WINDOW) -> float:
    """Windowed Pearson coefficient of two signals over ``[t, t + window]``."""
    if a.dt != b.dt or a.t0 != b.t0:
        raise ValueError("signals must share a time grid")
    m = _window_samples(a, window)
    k = a.index(t)
    if k + m >= min(a.n, b.n):
        raise ValueError(f"window [{t}, {t + window}] leaves the signal grid")
    w = _trapezoid_weights(m, a.dt)
    return float(_correlate(a.values[k:k + m + 1], b.values[k:k + m + 1], w))


def delay_grid(nu_s: float, points: int = DELAY_POINTS) -> np.ndarray:
    """``points`` equally spaced delays covering one synchronized period ``[0, 2 pi / nu_S)``."""
    if not nu_s > 0:
        raise ValueError(f"synchronization frequency must be positive, got {nu_s}")
    return np.arange(points) * (2 * math.pi / nu_s) / points


def delayed_pearson(a: SignalSeries, b: SignalSeries, nu_s: float,
                    window: float = DEFAULT_WINDOW, times=None) -> SyncReport:
    """Plain and best-delay Pearson series.

    At each start time the second signal is shifted by every delay of
    :func:`delay_grid` (spline-interpolated) and the largest coefficient is
    kept. Without ``times`` every grid start whose shifted window fits is
    evaluated.
    """
    if a.dt != b.dt or a.t0 != b.t0 or a.n != b.n:
        raise ValueError("signals must share a time grid")
    m = _window_samples(a, window)
    delays = delay_grid(nu_s)
    t_end = a.times[-1]
    last = int(math.floor((t_end - window - delays[-1] - a.t0) / a.dt + 1e-9))
    if last < 0:
        raise ValueError("signals are too short for the window plus one delay period")
    if times is None:
        starts = np.arange(last + 1)
    else:
        starts = np.array([a.index(t) for t in np.atleast_1d(times)])
        if np.any(starts > last):
            raise ValueError("requested start time leaves no room for the delayed window")
    spline = CubicSpline(b.times, b.values)
    offsets = np.arange(m + 1) * a.dt
    w = _trapezoid_weights(m, a.dt)

    plain = np.empty(len(starts))
    best = np.empty(len(starts))
    chosen = np.empty(len(starts))
    for out, k in enumerate(starts):
        seg_a = a.values[k:k + m + 1]
        plain[out] = _correlate(seg_a, b.values[k:k + m + 1], w)
        shifted = spline(a.times[k] + offsets[None, :] + delays[:, None])
        shifted[0] = b.values[k:k + m + 1]
        c = _correlate(seg_a, shifted, w)
        j = int(np.argmax(c))
        best[out], chosen[out] = c[j], delays[j]

    t0 = a.times[starts[0]]
    step = a.dt * (starts[1] - starts[0]) if len(starts) > 1 else a.dt
    if len(starts) > 2 and np.any(np.diff(starts) != starts[1] - starts[0]):
        raise ValueError("requested start times must be uniformly spaced")
    return SyncReport(
        window,
        SignalSeries(t0, step, plain, "C"),
        SignalSeries(t0, step, chosen, "delay"),
        SignalSeries(t0, step, best, "C_delayed"),
    )


def sync_report(traj: Trajectory, params: SystemParams, window: float = DEFAULT_WINDOW,
                times=None) -> SyncReport:
    """Delayed Pearson of ``<sigma^x_1>`` against ``<sigma^x_2>`` along ``traj``."""
    _, nu_s = sync_constants(params)
    x1, x2 = bloch_series(traj, 1, "x"), bloch_series(traj, 2, "x")
    return delayed_pearson(x1, x2, nu_s, window, times)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def kappa_surface(deltas, s12s, base: SystemParams) -> list[tuple[float, float, float]]:
    """``(delta, s12, kappa_S)`` rows, ``delta`` varying slowest."""
    rows = []
    for d in deltas:
        for s in s12s:
            kappa, _ = sync_constants(base.replace(delta=float(d), s12=float(s)))
            rows.append((float(d), float(s), kappa))
    return rows


FIG6_PARAMS = SystemParams(gamma1=1.0, gamma2=1.0, gamma12=1.0, s12=0.6, delta=1.0, omega0=10.0)


def sync_and_radiance_at(params: SystemParams, t_star: float, window: float = DEFAULT_WINDOW,
                         initial: str = "plusplus",
                         dt: float = DEFAULT_SIGNAL_DT) -> tuple[float, float]:
    """Delayed Pearson of the ``x`` components and ``R_I``, both at ``t_star``.

    A degenerate spectrum switches the trajectory to RK4 while ``I_SR``
    still uses the slowest sector-a mode, whose own biorthogonal pair stays
    well defined.
    """
    _, nu_s = sync_constants(params)
    horizon = t_star + window + 2 * math.pi / nu_s + 2 * dt
    n = int(math.ceil(horizon / dt)) + 1
    decomp = decompose(params)
    rho0 = _initial(initial, params)
    traj = evolve(rho0, params, dt, n, decomp)
    report = sync_report(traj, params, window, times=[t_star])

    mode6 = decomp.mode("a", 6)
    intensity = radiation_series(traj, params)
    radiance = radiance_report(intensity, mode_weight(rho0, mode6), mode6, params)
    return float(report.delayed.values[0]), radiance.ratio.at(t_star)


def _initial(initial, params: SystemParams) -> np.ndarray:
    if not isinstance(initial, str):
        return np.asarray(initial, dtype=complex)
    try:
        cs = collective_states(params)
    except IndependentAtoms:
        cs = None
    return named_state(initial, cs, params)


def sync_vs_subradiance_sweep(gamma12s, base: SystemParams = FIG6_PARAMS, t_star: float = 5.0,
                              window: float = DEFAULT_WINDOW) -> list[tuple[float, float, float]]:
    """``(gamma12, C_delayed(t*), R_I(t*))`` rows starting from ``plusplus``."""
    rows = []
    for g in gamma12s:
        c, r = sync_and_radiance_at(base.replace(gamma12=float(g)), t_star, window)
        rows.append((float(g), c, r))
    return rows
