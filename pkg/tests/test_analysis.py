import numpy as np
import pytest

from chirpmem.analysis import (AnalysisError, FitError, HUNDREDTH_MAX_FACTOR,
                               ModeSweep, adiabaticity_q, apply_decay_envelope,
                               emission_decay_model, extract_echo,
                               fit_emission_decay, fit_silenced_decay,
                               min_nutation_for_q, mode_map, photon_number,
                               purcell_g0, rescale_retrieved,
                               silenced_decay_model)


def synthetic_echo(a=2.0, c=50e-6, sigma=3e-6, phase=0.8, floor=0.0, n=801,
                   span=100e-6, seed=None):
    t = np.linspace(0, span, n)
    mag = a * np.exp(-((t - c) ** 2) / (2 * sigma**2)) + floor
    if seed is not None:
        rng = np.random.default_rng(seed)
        mag = mag + 0.01 * a * rng.standard_normal(n)
    return t, mag * np.exp(1j * phase)


class TestExtractEcho:
    def test_noiseless_round_trip(self):
        t, z = synthetic_echo()
        rec = extract_echo(t, z, (20e-6, 80e-6))
        assert rec.found
        assert rec.amplitude == pytest.approx(2.0, rel=1e-3)
        assert rec.center == pytest.approx(50e-6, rel=1e-3)
        assert rec.width == pytest.approx(3e-6, rel=1e-3)
        assert rec.phase == pytest.approx(0.8, abs=1e-6)

    def test_pure_noise_flagged(self):
        rng = np.random.default_rng(0)
        t = np.linspace(0, 100e-6, 801)
        z = 0.01 * (rng.standard_normal(801) + 1j * rng.standard_normal(801))
        rec = extract_echo(t, z, (20e-6, 80e-6))
        assert not rec.found
        assert rec.amplitude == 0.0

    def test_phase_equivariance(self):
        t, z = synthetic_echo(seed=4)
        r0 = extract_echo(t, z, (20e-6, 80e-6))
        r1 = extract_echo(t, z * np.exp(1j * 1.234), (20e-6, 80e-6))
        assert np.angle(np.exp(1j * (r1.phase - r0.phase - 1.234))) \
            == pytest.approx(0.0, abs=1e-12)

    def test_window_outside_trace(self):
        t, z = synthetic_echo()
        with pytest.raises(AnalysisError, match="window"):
            extract_echo(t, z, (50e-6, 200e-6))


class TestDecayFits:
    def test_silenced_noiseless_round_trip(self):
        t = np.linspace(0.1e-3, 6e-3, 25)
        y = silenced_decay_model(t, 1.4, 2.0e-3, 0.05)
        fit = fit_silenced_decay(t, y)
        assert fit.t2 == pytest.approx(2.0e-3, rel=1e-3)
        assert fit.a0 == pytest.approx(1.4, rel=1e-3)
        assert fit.background == pytest.approx(0.05, rel=1e-2)

    def test_single_exponential_log_linear(self):
        # K = 0 log-linear data: slope exactly -1/T2
        t = np.linspace(0, 5e-3, 20)
        y = 2.0 * np.exp(-t / 1.5e-3)
        fit = fit_silenced_decay(t, y, model="single")
        assert fit.t2 == pytest.approx(1.5e-3, rel=1e-6)
        slope = np.polyfit(t, np.log(y), 1)[0]
        assert slope == pytest.approx(-1 / fit.t2, rel=1e-6)

    def test_stretched(self):
        t = np.linspace(0.05e-3, 5e-3, 30)
        y = 1.0 * np.exp(-((t / 1.2e-3) ** 1.7)) + 0.02
        fit = fit_silenced_decay(t, y, model="stretched")
        assert fit.t2 == pytest.approx(1.2e-3, rel=1e-2)
        assert fit.stretch == pytest.approx(1.7, rel=5e-2)

    def test_noise_bias(self):
        rng = np.random.default_rng(9)
        t = np.linspace(0.1e-3, 6e-3, 25)
        errs = []
        for _ in range(12):
            y = silenced_decay_model(t, 1.0, 2.0e-3, 0.03) \
                * (1 + 0.05 * rng.standard_normal(t.size))
            errs.append(fit_silenced_decay(t, y).t2 / 2.0e-3 - 1.0)
        assert abs(np.mean(errs)) < 0.05

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_silenced_decay([0, 1e-3, 2e-3], [1.0, 0.5, 0.3])

    def test_emission_eta_zero_reduces_to_silenced(self):
        t = np.linspace(0.2e-3, 5e-3, 12)
        n = np.arange(12)
        y_sil = silenced_decay_model(t, 1.0, 2.0e-3, 0.02)
        np.testing.assert_allclose(
            emission_decay_model(t, n, 1.0, 2.0e-3, 0.0, 0.02), y_sil)
        fit = fit_emission_decay(t, y_sil, n, t2=2.0e-3, a0=1.0, background=0.02)
        assert fit.eta_em == pytest.approx(0.0, abs=1e-3)

    def test_emission_eta_recovery(self):
        t = np.linspace(0.28e-3, 3.1e-3, 11)
        n = np.arange(11)
        y = emission_decay_model(t, n, 1.0, 2.0e-3, 0.17, 0.02)
        fit = fit_emission_decay(t, y, n, t2=2.0e-3, a0=1.0, background=0.02)
        # noiseless round trip recovers the injected value essentially exactly
        assert fit.eta_em == pytest.approx(0.17, abs=5e-4)

    def test_envelope_helper(self):
        a = apply_decay_envelope(1.0, 2.0e-3, 2.0e-3, 0.0)
        assert a == pytest.approx(np.exp(-1.0))
        b = apply_decay_envelope(1.0, 0.0, 2.0e-3, 0.19, n_prior_emissions=2)
        assert b == pytest.approx(0.81)


class TestCalibration:
    def test_adiabaticity_zero_nutation(self):
        assert adiabaticity_q(0.0, 2e10) == 0.0

    def test_adiabaticity_paper_values(self):
        # 125 kHz nutation at 20 MHz/ms
        assert adiabaticity_q(125e3, 2e10) == pytest.approx(4.909, abs=1e-3)

    def test_adiabaticity_monotonicity(self):
        qs = [adiabaticity_q(nu, 2e10) for nu in (5e4, 1e5, 2e5)]
        assert qs[0] < qs[1] < qs[2]
        rs = [adiabaticity_q(1e5, r) for r in (1e10, 2e10, 4e10)]
        assert rs[0] > rs[1] > rs[2]

    def test_boundary_solve(self):
        # the Q = 1 contour gives the lower amplitude bound
        for r_val in (5e9, 2e10, 8e10):
            nu = min_nutation_for_q(r_val, q=1.0)
            assert adiabaticity_q(nu, r_val) == pytest.approx(1.0, rel=1e-12)

    def test_purcell_coupling(self):
        # kappa (HWHM) 400 kHz, T1 = 14.7 s -> g0 ~ 80 Hz
        g0 = purcell_g0(14.7, 400e3)
        assert g0 == pytest.approx(82.5, abs=0.5)

    def test_photon_number(self):
        g0 = purcell_g0(14.7, 400e3)
        n = photon_number(125e3, g0)
        assert 4e5 < n < 8e5             # paper ~5.7e5 at ~50% uncertainty
        assert photon_number(2 * g0, g0) == pytest.approx(1.0)

    def test_rescale_identity(self):
        rec = extract_echo(*synthetic_echo(a=1.0, phase=0.3), (20e-6, 80e-6))
        z = rescale_retrieved(rec, eta_em=1.0, t_m=1e30, storage_time=1e-3)
        assert abs(z) == pytest.approx(rec.amplitude, rel=1e-9)
        assert np.angle(z) == pytest.approx(0.3, abs=1e-6)

    def test_rescale_efold(self):
        rec = extract_echo(*synthetic_echo(a=1.0), (20e-6, 80e-6))
        z = rescale_retrieved(rec, eta_em=1.0, t_m=2e-3, storage_time=2e-3)
        assert abs(z) == pytest.approx(rec.amplitude * np.e, rel=1e-9)

    def test_rescale_zero_denominator(self):
        rec = extract_echo(*synthetic_echo(), (20e-6, 80e-6))
        with pytest.raises(AnalysisError):
            rescale_retrieved(rec, eta_em=0.0, t_m=2e-3, storage_time=1e-3)


def gaussian_ridge_sweep(rates, amps, center_fn, sigma=1.0e9, peak_fn=None):
    echo = np.zeros((rates.size, amps.size))
    for j, a in enumerate(amps):
        c = center_fn(a)
        pk = peak_fn(a) if peak_fn else 1.0
        echo[:, j] = pk * np.exp(-((rates - c) ** 2) / (2 * sigma**2))
    return ModeSweep(rates, amps, echo)


class TestModeMap:
    def test_single_narrow_ridge_closed_form_count(self):
        rates = np.linspace(5e9, 45e9, 201)
        amps = np.linspace(0.9, 1.1, 5)
        sigma = 0.8e9
        sweep = gaussian_ridge_sweep(rates, amps, lambda a: 20e9 + 3e10 * (a - 1),
                                     sigma=sigma)
        mm = mode_map(sweep, reference_amplitude=1.0)
        sep = HUNDREDTH_MAX_FACTOR * sigma
        assert mm.count == int((45e9 - 5e9) / sep)
        assert mm.count_both_directions == 2 * mm.count

    def test_cells_disjoint_and_wide_enough(self):
        rates = np.linspace(5e9, 45e9, 201)
        amps = np.linspace(0.9, 1.1, 5)
        sweep = gaussian_ridge_sweep(rates, amps, lambda a: 20e9 + 3e10 * (a - 1))
        mm = mode_map(sweep, reference_amplitude=1.0)
        for (lo1, hi1), (lo2, hi2) in zip(mm.cells, mm.cells[1:]):
            assert hi1 <= lo2 + 1e-6
            assert hi1 - lo1 >= HUNDREDTH_MAX_FACTOR * 0.99e9

    def test_refinement_stability(self):
        counts = []
        for n_r in (101, 201, 401):
            rates = np.linspace(5e9, 45e9, n_r)
            amps = np.linspace(0.9, 1.1, 5)
            sweep = gaussian_ridge_sweep(rates, amps,
                                         lambda a: 20e9 + 3e10 * (a - 1))
            counts.append(mode_map(sweep, reference_amplitude=1.0).count)
        assert max(counts) - min(counts) <= 1

    def test_gradient_model(self):
        # centers following dA/dR = C/R (A = 1 + C ln(R/R0)) recover C
        rates = np.linspace(5e9, 45e9, 301)
        amps = np.linspace(0.9, 1.1, 9)
        c_true = 0.2

        def center(a):
            return 20e9 * np.exp((a - 1.0) / c_true)

        sweep = gaussian_ridge_sweep(rates, amps, center)
        mm = mode_map(sweep, reference_amplitude=1.0)
        assert mm.gradient_c == pytest.approx(c_true, rel=0.05)

    def test_sparse_sweep_rejected(self):
        rates = np.linspace(5e9, 45e9, 9)
        amps = np.linspace(0.9, 1.1, 3)
        sweep = gaussian_ridge_sweep(rates, amps, lambda a: 20e9 + 3e10 * (a - 1),
                                     sigma=0.3e9)
        with pytest.raises(AnalysisError, match="sparse"):
            mode_map(sweep, reference_amplitude=1.0)

    def test_shape_validation(self):
        with pytest.raises(AnalysisError):
            ModeSweep(np.arange(5.0), np.arange(3.0), np.zeros((4, 3)))
