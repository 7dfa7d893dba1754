import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subrad_sync.core import SystemParams, excitation_number, local_pauli, named_state
from subrad_sync.dynamics import modal_trajectory, propagate_rk4, rk4_trajectory
from subrad_sync.liouvillian import build_full
from subrad_sync.spectral import collective_states, decompose, mode_weights, sync_constants
from subrad_sync.analysis import (
    FIG6_PARAMS,
    SectorLeakage,
    SignalSeries,
    UndefinedCorrelation,
    bloch_series,
    bloch_series_modal,
    closed_form_bloch,
    delay_grid,
    delayed_pearson,
    kappa_surface,
    modal_expectation,
    pearson,
    radiation_rate,
    radiation_series,
    radiation_series_modal,
    subradiance_ratio,
    sync_and_radiance_at,
    sync_report,
)

from conftest import FIG3, random_pure_state, system_params

DT = 0.01


@pytest.fixture(scope="module")
def fig3_decomp():
    return decompose(FIG3)


@pytest.fixture(scope="module")
def fig3_cs():
    return collective_states(FIG3)


def _weights(name, decomp, cs=None):
    return mode_weights(named_state(name, cs, decomp.params), decomp)


class TestBloch:
    def test_ground_z(self, fig3_decomp):
        traj = modal_trajectory(named_state("gg"), fig3_decomp, DT, 100)
        assert np.array_equal(bloch_series(traj, 1, "z").values, -np.ones(100))

    def test_independent_atoms(self):
        p = SystemParams(delta=0.4, omega0=10.0)
        traj = rk4_trajectory(named_state("plusplus"), p, DT, 301)
        t = traj.times
        expected = np.exp(-t / 2) * np.cos(p.omega1 * t)
        assert np.max(np.abs(bloch_series(traj, 1, "x").values - expected)) < 1e-9

    @settings(max_examples=30)
    @given(system_params(unit_gamma0=True, omega0=10.0), st.integers(0, 2 ** 32 - 1),
           st.sampled_from([(1, "x"), (2, "y"), (1, "z"), (2, "z")]))
    def test_modal_matches_trace(self, p, seed, component):
        d = decompose(p)
        rho0 = random_pure_state(np.random.default_rng(seed))
        w = mode_weights(rho0, d)
        traj = modal_trajectory(rho0, d, 0.05, 101)
        direct = bloch_series(traj, *component).values
        modal = bloch_series_modal(w, d, 0.05, 101, *component).values
        assert np.max(np.abs(direct - modal)) < 1e-9

    def test_leakage_is_detected(self, fig3_decomp):
        w = _weights("plusplus", fig3_decomp)
        with pytest.raises(SectorLeakage):
            modal_expectation(local_pauli(1, "x"), w, fig3_decomp, np.zeros(1), ("a",))

    def test_z_has_single_frequency(self, fig3_decomp, fig3_cs):
        w = _weights("plusplus", fig3_decomp)
        z = local_pauli(1, "z").matrix
        freqs = {round(abs(m.eigenvalue.imag), 9) for m, p in zip(fig3_decomp.modes, w)
                 if abs(p * np.trace(z @ m.right)) > 1e-12}
        assert freqs == {0.0, round(fig3_cs.V.imag, 9)}


class TestClosedFormBloch:
    @pytest.mark.parametrize("initial", ["G_plus_AR", "G_plus_SR"])
    @pytest.mark.parametrize("site", [1, 2])
    def test_matches_modal(self, fig3_decomp, fig3_cs, initial, site):
        w = _weights(initial, fig3_decomp, fig3_cs)
        modal = bloch_series_modal(w, fig3_decomp, DT, 500, site, "x")
        closed = closed_form_bloch(initial, site, modal.times, fig3_cs, FIG3)
        assert np.max(np.abs(modal.values - closed)) < 1e-9

    def test_initial_value(self, fig3_cs):
        value = closed_form_bloch("G_plus_AR", 2, 0.0, fig3_cs, FIG3)
        assert value == pytest.approx(1 / math.sqrt(1 + abs(fig3_cs.alphaA) ** 2), abs=1e-15)

    def test_phase_offset(self, fig3_cs):
        assert math.degrees(np.angle(fig3_cs.alphaA)) == pytest.approx(162.16, abs=0.01)

    def test_superradiant_decay_exponent(self, fig3_cs):
        # oracle: (1 + Re V) / 2 with V from numpy complex arithmetic
        # sample at cosine maxima of site 2 to read off the envelope
        period = 2 * math.pi / (FIG3.omega0 + 0.5 * fig3_cs.V.imag)
        t = np.array([0.0, 3 * period])
        v = closed_form_bloch("G_plus_SR", 2, t, fig3_cs, FIG3)
        rate = -math.log(v[1] / v[0]) / t[1]
        assert rate == pytest.approx(0.9161087100687282, abs=1e-12)

    def test_errors(self, fig3_cs):
        with pytest.raises(ValueError):
            closed_form_bloch("plusplus", 1, 0.0, fig3_cs, FIG3)
        with pytest.raises(ValueError):
            closed_form_bloch("G_plus_AR", 1, -1.0, fig3_cs, FIG3)
        with pytest.raises(ValueError):
            closed_form_bloch("G_plus_AR", 3, 0.0, fig3_cs, FIG3)


class TestRadiation:
    def test_examples(self):
        assert radiation_rate(named_state("gg"), FIG3) == 0
        assert radiation_rate(named_state("ee"), FIG3) == pytest.approx(FIG3.gamma1 + FIG3.gamma2)

    def test_single_rate_AR(self, fig3_decomp, fig3_cs):
        w = _weights("A_R", fig3_decomp, fig3_cs)
        series = radiation_series_modal(w, fig3_decomp, DT, 500)
        rate = 1 - fig3_cs.V.real
        assert np.max(np.abs(series.values - rate * np.exp(-rate * series.times))) < 1e-12

    @settings(max_examples=30)
    @given(system_params(unit_gamma0=True, omega0=10.0), st.integers(0, 2 ** 32 - 1))
    def test_modal_matches_trace(self, p, seed):
        d = decompose(p)
        rho0 = random_pure_state(np.random.default_rng(seed))
        traj = modal_trajectory(rho0, d, 0.05, 101)
        modal = radiation_series_modal(mode_weights(rho0, d), d, 0.05, 101)
        assert np.max(np.abs(radiation_series(traj, p).values - modal.values)) < 1e-9
        assert modal.values.min() >= -1e-10

    @pytest.mark.parametrize("dephasing", [False, True])
    def test_photon_balance(self, dephasing):
        p = FIG3.replace(dep11=0.2, dep22=0.05, dep12=0.03) if dephasing else FIG3
        h = 1e-3
        traj = propagate_rk4(named_state("plusplus"), build_full(p), h, 4000)
        n = traj.expect(excitation_number())
        dn = (n[2:] - n[:-2]) / (2 * h)
        intensity = radiation_series(traj, p).values[1:-1]
        assert np.max(np.abs(intensity + dn)) < 1e-6

    def test_emitted_photons(self, fig3_decomp, fig3_cs):
        rates = (1 - fig3_cs.V.real, 1 + fig3_cs.V.real)
        n = int(60 / min(rates) / DT) + 1
        series = radiation_series_modal(_weights("ee", fig3_decomp), fig3_decomp, DT, n)
        assert np.trapezoid(series.values, dx=DT) == pytest.approx(2, abs=1e-3)


class TestSubradiance:
    def test_AR_is_pure_subradiant(self, fig3_decomp, fig3_cs):
        report = subradiance_ratio(_weights("A_R", fig3_decomp, fig3_cs), fig3_decomp, DT, 500)
        assert not report.flagged
        assert np.max(np.abs(report.ratio.values - 1)) < 1e-9

    def test_SR_is_flagged(self, fig3_decomp, fig3_cs):
        report = subradiance_ratio(_weights("S_R", fig3_decomp, fig3_cs), fig3_decomp, DT, 50)
        assert report.flagged and report.notes
        assert np.all(report.subradiant.values == 0)

    def test_ratio_tends_to_one(self, fig3_decomp):
        report = subradiance_ratio(_weights("plusplus", fig3_decomp), fig3_decomp, 0.1, 601)
        r = report.ratio.values
        assert np.all((r >= 0) & (r <= 1))
        assert r[-1] > 1 - 1e-6

    def test_sweep_examples(self):
        c1, r1 = sync_and_radiance_at(FIG6_PARAMS.replace(gamma12=1.0), 5.0)
        c3, r3 = sync_and_radiance_at(FIG6_PARAMS.replace(gamma12=0.3), 5.0)
        c0, _ = sync_and_radiance_at(FIG6_PARAMS.replace(gamma12=0.0), 5.0)
        assert c1 > 0.99 and r1 > 0.99
        assert c3 < 0.85 and r3 < 0.85
        assert abs(c0) < 0.5


def _series(values, dt=DT):
    return SignalSeries(0.0, dt, np.asarray(values, dtype=float))


class TestPearson:
    t = np.arange(0, 4 + DT / 2, DT)
    w = 2 * math.pi

    def test_self(self):
        s = _series(np.sin(self.w * self.t) * np.exp(-self.t))
        assert pearson(s, s, 0.5, 2.0) == pytest.approx(1)

    def test_antiphase(self):
        a, b = _series(np.sin(self.w * self.t)), _series(-np.sin(self.w * self.t))
        assert pearson(a, b, 0.0, 1.0) == pytest.approx(-1)

    def test_quadrature(self):
        a, b = _series(np.sin(self.w * self.t)), _series(np.cos(self.w * self.t))
        assert pearson(a, b, 0.0, 1.0) == pytest.approx(0, abs=1e-12)

    def test_flat_window(self):
        a = _series(np.where(self.t < 2, 1.0, np.sin(self.t)))
        with pytest.raises(UndefinedCorrelation):
            pearson(a, a, 0.0, 1.0)

    def test_window_errors(self):
        a = _series(np.sin(self.t))
        with pytest.raises(ValueError):
            pearson(a, a, 0.0, 0.05)
        with pytest.raises(ValueError):
            pearson(a, a, 3.0, 2.0)
        with pytest.raises(ValueError):
            pearson(a, _series(np.sin(self.t), dt=0.02), 0.0, 1.0)

    @given(st.integers(0, 2 ** 32 - 1))
    def test_bounded(self, seed):
        rng = np.random.default_rng(seed)
        a, b = _series(rng.normal(size=300)), _series(rng.normal(size=300))
        assert -1 <= pearson(a, b, 0.5, 1.0) <= 1


class TestDelayedPearson:
    def test_identical_signals(self):
        t = np.arange(0, 6 + DT / 2, DT)
        s = _series(np.cos(9 * t) * np.exp(-0.2 * t))
        report = delayed_pearson(s, s, 9.0, 2.0)
        assert np.all(report.delay.values == 0)
        assert np.allclose(report.delayed.values, 1)

    def test_recovers_shift(self):
        t = np.arange(0, 8 + DT / 2, DT)
        nu = 2 * math.pi
        a, b = _series(np.cos(nu * t)), _series(np.cos(nu * (t - 0.25)))
        report = delayed_pearson(a, b, nu, 2.0, times=[1.0])
        assert report.best_delay == pytest.approx(0.25, abs=delay_grid(nu)[1])
        assert report.delayed.values[0] > 0.9999

    def test_delay_grid(self):
        grid = delay_grid(2.0)
        assert len(grid) == 256 and grid[0] == 0 and grid[-1] < math.pi
        with pytest.raises(ValueError):
            delay_grid(0.0)

    def test_plusplus_antisynchronizes(self, fig3_decomp):
        traj = modal_trajectory(named_state("plusplus"), fig3_decomp, DT, 1201)
        report = sync_report(traj, FIG3, 2.0, times=[0.5, 6.5])
        plain = report.plain.values
        assert abs(plain[0]) < 0.95
        # the 162 degree offset keeps the plain indicator just short of -1
        assert plain[1] < -0.9
        assert report.delayed.values[1] > 0.99


def test_frequency_lock(fig3_decomp):
    kappa, nu = sync_constants(FIG3)
    dt = 1e-3
    t_start = 8 / kappa
    span = 20 * math.pi / nu
    k0, m = round(t_start / dt), round(span / dt)
    w = _weights("plusplus", fig3_decomp)
    bin_width = 2 * math.pi / (m * dt)
    for site in (1, 2):
        x = bloch_series_modal(w, fig3_decomp, dt, k0 + m, site, "x").values[k0:]
        spectrum = np.abs(np.fft.rfft(x))
        freqs = 2 * math.pi * np.fft.rfftfreq(m, dt)
        assert abs(freqs[np.argmax(spectrum)] - nu) <= bin_width


class TestKappaSurface:
    base = SystemParams(gamma12=0.8)

    def test_symmetric_limit(self):
        (row,) = kappa_surface([0.0], [0.0], self.base)
        assert row == (0.0, 0.0, pytest.approx(0.8, abs=1e-15))

    def test_threshold(self):
        (row,) = kappa_surface([0.8], [0.0], self.base)
        assert row[2] == 0

    def test_hopping_smooths_threshold(self):
        (row,) = kappa_surface([0.8], [0.6], self.base)
        assert row[2] > 0

    def test_row_order(self):
        rows = kappa_surface([0.0, 1.0], [0.0, 0.5, 1.0], self.base)
        assert [(r[0], r[1]) for r in rows] == [(d, s) for d in (0.0, 1.0) for s in (0.0, 0.5, 1.0)]
