import numpy as np
import pytest

from chirpmem.cavity import (CavityError, FanoFitResult, FitError,
                             ResonatorParams, SpinCavityCoupling, cavity_filter,
                             cooperativity, dc_gain, dispersive_curves,
                             effective_wurst_duration, fano_transmission,
                             fit_fano, intracavity_drive, one_way_efficiency,
                             wurst_bandwidth_limit)
from chirpmem.waveforms import TimeGrid, Waveform, WurstParams, wurst_waveform

TWO_PI = 2 * np.pi


def res(kappa=200e3, kappa_c=150e3):
    return ResonatorParams(f0=7.09395e9, kappa=kappa, kappa_c=kappa_c)


class TestFilter:
    def test_zero_in_zero_out(self):
        g = TimeGrid(0.0, 1e-7, 2001)
        out = cavity_filter(Waveform(g, np.zeros(2001, dtype=complex)), res())
        assert np.all(out.samples == 0)

    def test_step_response_steady_state_and_time_constant(self):
        r = res()
        g = TimeGrid(0.0, 1e-7, 60001)
        step = Waveform(g, np.full(60001, 2.0, dtype=complex))
        out = cavity_filter(step, r)
        kappa_ang = TWO_PI * r.kappa
        expected = 2 * np.sqrt(TWO_PI * r.kappa_c) * 2.0 / kappa_ang
        assert out.samples[-1].real == pytest.approx(expected, rel=1e-6)
        # exponential approach with time constant 2/kappa_angular
        i = np.argmin(np.abs(g.times() - 2.0 / kappa_ang))
        t_i = g.times()[i]
        assert out.samples[i].real / expected == pytest.approx(
            1 - np.exp(-t_i * kappa_ang / 2.0), rel=1e-4)

    def test_linearity(self):
        r = res()
        g = TimeGrid(0.0, 1e-7, 4001)
        rng = np.random.default_rng(3)
        u = Waveform(g, rng.standard_normal(4001) + 1j * rng.standard_normal(4001))
        v = Waveform(g, rng.standard_normal(4001) + 1j * rng.standard_normal(4001))
        lhs = cavity_filter(Waveform(g, 2.0 * u.samples + 3j * v.samples), r)
        rhs = 2.0 * cavity_filter(u, r).samples + 3j * cavity_filter(v, r).samples
        np.testing.assert_allclose(lhs.samples, rhs, rtol=1e-12, atol=1e-12)

    def test_ringdown_rate_matches_kappa(self):
        # log-slope of the impulse ring-down equals kappa_angular/2 within 1%
        r = res()
        g = TimeGrid(0.0, 1e-7, 40001)
        drive = np.zeros(40001, dtype=complex)
        drive[:50] = 1.0
        out = cavity_filter(Waveform(g, drive), r)
        t = g.times()
        sel = (t > 20e-6) & (t < 60e-6)
        slope = np.polyfit(t[sel], np.log(np.abs(out.samples[sel])), 1)[0]
        assert -slope == pytest.approx(np.pi * r.kappa, rel=0.01)

    def test_wurst_peaks_at_resonance_crossing(self):
        # chirp through a 200 kHz cavity: field peaks while the instantaneous
        # frequency crosses zero (i.e. near the pulse center)
        r = res(kappa=200e3, kappa_c=150e3)
        p = WurstParams(bandwidth=2e6, duration=100e-6, t_center=50e-6)
        g = TimeGrid.spanning(0, 140e-6, 1e-8)
        wf = wurst_waveform(p, g)
        out = cavity_filter(wf, r)
        t_peak = g.times()[np.argmax(np.abs(out.samples))]
        assert abs(t_peak - p.t_center) < 5e-6

    def test_ring_persists_after_drive(self):
        r = res()
        p = WurstParams(bandwidth=2e6, duration=100e-6, t_center=50e-6)
        g = TimeGrid.spanning(0, 120e-6, 1e-8)
        out = cavity_filter(wurst_waveform(p, g), r)
        i_end = np.argmin(np.abs(g.times() - 100e-6))
        assert np.abs(out.samples[i_end + 100]) > 0

    def test_grid_too_coarse(self):
        g = TimeGrid(0.0, 1e-5, 101)
        with pytest.raises(Exception, match="coarse"):
            cavity_filter(Waveform(g, np.zeros(101, dtype=complex)), res())

    def test_intracavity_unit_dc_gain(self):
        r = res()
        g = TimeGrid(0.0, 1e-7, 60001)
        out = intracavity_drive(Waveform(g, np.ones(60001, dtype=complex)), r)
        assert out.samples[-1].real == pytest.approx(1.0, rel=1e-6)


class TestEffectiveDuration:
    def test_equal_bandwidth(self):
        assert effective_wurst_duration(200e3, 150e-6, res(kappa=200e3)) \
            == pytest.approx(150e-6)

    def test_paper_scale(self):
        # kappa 400 kHz, T 200 us, bandwidth 4 MHz -> 20 us
        assert effective_wurst_duration(4e6, 200e-6, res(kappa=400e3)) \
            == pytest.approx(20e-6)

    def test_below_cavity_linewidth_errors(self):
        with pytest.raises(CavityError, match="full duration"):
            effective_wurst_duration(100e3, 200e-6, res(kappa=200e3))

    def test_bandwidth_limit_value(self):
        # kappa^2 T evaluates to 32-37 MHz for kappa 0.40-0.43 MHz, T 200 us
        lo = wurst_bandwidth_limit(res(kappa=400e3), 200e-6)
        hi = wurst_bandwidth_limit(res(kappa=430e3), 200e-6)
        assert lo == pytest.approx(32e6, rel=1e-9)
        assert hi == pytest.approx(36.98e6, rel=1e-2)


class TestFano:
    def mk(self, q=1.4):
        return ResonatorParams(f0=7.09395e9, kappa=385.5e3, kappa_c=300e3,
                               fano_scale=5e4, fano_q=q, bg_slope=2e-11,
                               bg_offset=0.31)

    def test_antisymmetric_zero(self):
        r = ResonatorParams(f0=1e9, kappa=1e5, kappa_c=1e5, fano_scale=2.0,
                            fano_q=0.0)
        assert fano_transmission(np.array([1e9]), r)[0] == pytest.approx(0.0)

    def test_far_detuned_tends_to_zero(self):
        r = ResonatorParams(f0=1e9, kappa=1e5, kappa_c=1e5, fano_scale=2.0,
                            fano_q=1.0)
        far = fano_transmission(np.array([1e9 + 1e9]), r)[0]
        near = fano_transmission(np.array([1e9 + 5e4]), r)[0]
        assert abs(far) < 1e-3 * abs(near)

    def test_fit_recovers_synthetic(self):
        # Q = 18400 resonator at 7.09395 GHz: recover f0 and kappa to 0.1%
        true = self.mk()
        f = np.linspace(true.f0 - 8 * true.kappa, true.f0 + 8 * true.kappa, 401)
        y = fano_transmission(f, true)
        fit = fit_fano(f, y)
        assert isinstance(fit, FanoFitResult)
        assert not fit.degenerate
        assert fit.params.f0 == pytest.approx(true.f0, abs=1e-3 * true.kappa)
        assert fit.params.kappa == pytest.approx(true.kappa, rel=1e-3)

    def test_fit_with_noise_f0_within_tenth_kappa(self):
        true = self.mk(q=-0.8)
        rng = np.random.default_rng(11)
        f = np.linspace(true.f0 - 8 * true.kappa, true.f0 + 8 * true.kappa, 401)
        y0 = fano_transmission(f, true)
        worst = 0.0
        for _ in range(5):
            y = y0 + 0.01 * np.ptp(y0) * rng.standard_normal(f.size)
            fit = fit_fano(f, y)
            worst = max(worst, abs(fit.params.f0 - true.f0))
        assert worst < true.kappa / 10

    def test_flat_input_degenerate(self):
        f = np.linspace(0.9e9, 1.1e9, 101)
        y = np.full(101, 0.7)
        try:
            fitres = fit_fano(f, y)
            assert fitres.degenerate
        except FitError:
            pass

    def test_too_few_points(self):
        with pytest.raises(FitError, match="7"):
            fit_fano(np.arange(5.0), np.arange(5.0))

    def test_span_too_narrow(self):
        true = self.mk()
        f = np.linspace(true.f0 - true.kappa, true.f0 + true.kappa, 101)
        with pytest.raises(FitError, match="span"):
            fit_fano(f, fano_transmission(f, true))


class TestDispersive:
    def c(self):
        return SpinCavityCoupling(g_ens=120e3, gamma=2.4e6, b_res=0.046,
                                  dfdb=2.8e10)

    def test_on_resonance(self):
        r = res(kappa=385e3)
        c = self.c()
        f, k = dispersive_curves(np.array([c.b_res]), c, r)
        assert f[0] == pytest.approx(r.f0)
        assert k[0] == pytest.approx(r.kappa + 2 * c.g_ens**2 / c.gamma)

    def test_far_detuned_limits(self):
        r = res(kappa=385e3)
        c = self.c()
        f, k = dispersive_curves(np.array([c.b_res + 1.0]), c, r)
        assert f[0] == pytest.approx(r.f0, abs=1.0)
        assert k[0] == pytest.approx(r.kappa, rel=1e-6)

    def test_parity_about_resonant_field(self):
        r = res(kappa=385e3)
        c = self.c()
        db = np.linspace(-3e-3, 3e-3, 41)
        f_p, k_p = dispersive_curves(c.b_res + db, c, r)
        f_m, k_m = dispersive_curves(c.b_res - db, c, r)
        np.testing.assert_allclose(f_p - r.f0, -(f_m - r.f0), atol=1e-6)
        np.testing.assert_allclose(k_p, k_m, rtol=1e-12)

    def test_fitted_scale(self):
        # g_ens ~ 120 kHz, gamma ~ 2.4 MHz: peak broadening 2 g^2/gamma = 12 kHz
        c = self.c()
        assert 2 * c.g_ens**2 / c.gamma == pytest.approx(12e3)


class TestCooperativity:
    def test_zero_coupling(self):
        assert cooperativity(SpinCavityCoupling(g_ens=0.0, gamma=2.4e6),
                             res(kappa=385e3)) == 0.0

    def test_paper_values(self):
        c = cooperativity(SpinCavityCoupling(g_ens=120e3, gamma=2.4e6),
                          res(kappa=385e3))
        assert c == pytest.approx(0.0623, abs=0.0005)
        assert abs(c - 0.07) < 0.02   # within the quoted 0.07(2)

    def test_quadratic_in_coupling(self):
        r = res(kappa=385e3)
        c1 = cooperativity(SpinCavityCoupling(g_ens=120e3, gamma=2.4e6), r)
        c2 = cooperativity(SpinCavityCoupling(g_ens=240e3, gamma=2.4e6), r)
        assert c2 == pytest.approx(4 * c1)


class TestEfficiency:
    def test_impedance_matched_maximum(self):
        assert one_way_efficiency(1.0) == 1.0

    def test_zero(self):
        assert one_way_efficiency(0.0) == 0.0

    def test_paper_value(self):
        assert one_way_efficiency(0.047) == pytest.approx(0.171, abs=1e-3)

    def test_unique_maximum_on_grid(self):
        grid = np.linspace(0.0, 4.0, 4001)
        eta = one_way_efficiency(grid)
        assert grid[np.argmax(eta)] == pytest.approx(1.0, abs=1e-3)
        assert eta.max() == 1.0

    def test_negative_rejected(self):
        with pytest.raises(CavityError):
            one_way_efficiency(-0.1)


def test_resonator_validation():
    with pytest.raises(CavityError):
        ResonatorParams(f0=1e9, kappa=-1.0, kappa_c=1.0)
    with pytest.raises(CavityError):
        ResonatorParams(f0=1e9, kappa=1e5, kappa_c=2e5)


def test_dc_gain_definition():
    r = res()
    assert dc_gain(r) == pytest.approx(2 * np.sqrt(TWO_PI * r.kappa_c)
                                       / (TWO_PI * r.kappa))
