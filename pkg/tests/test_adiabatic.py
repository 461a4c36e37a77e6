"""Adiabatic-limit phase theory against the independent numeric propagator."""

import numpy as np
import pytest

from chirpmem.ensemble import adiabatic_phase, adiabatic_phase_batch, two_pulse_phase
from chirpmem.waveforms import TimeGrid, WurstParams, render_timeline, wurst_waveform

from helpers import coherence_response, wrap

TWO_PI = 2 * np.pi


def test_deterministic():
    p = WurstParams(bandwidth=2e6, duration=100e-6, t_center=50e-6)
    a = adiabatic_phase(p, 1e5, 200e3)
    b = adiabatic_phase(p, 1e5, 200e3)
    assert a.theta_delta == b.theta_delta


def test_consistency_identity():
    # theta_delta = phi_w - 2*pi*delta*t_center
    p = WurstParams(bandwidth=2e6, duration=100e-6, t_center=75e-6)
    for d in (0.0, 3e5, -2e5):
        a = adiabatic_phase(p, d, 200e3)
        assert a.theta_delta == pytest.approx(a.phi_w - TWO_PI * d * p.t_center,
                                              abs=1e-9)


def test_quadratic_term_even_in_delta():
    p = WurstParams(bandwidth=2e6, duration=100e-6, t_center=50e-6)
    a = adiabatic_phase(p, 2e5, 200e3)
    b = adiabatic_phase(p, -2e5, 200e3)
    assert a.quad_term == pytest.approx(b.quad_term, rel=1e-12)
    assert a.quad_term == pytest.approx(-np.pi * (2e5) ** 2 / p.chirp_rate)


def test_adiabaticity_flag():
    p = WurstParams(bandwidth=2e6, duration=100e-6, t_center=50e-6)
    weak = adiabatic_phase(p, 0.0, 50e3)    # Q ~ 0.8
    strong = adiabatic_phase(p, 0.0, 300e3)
    assert not weak.adiabatic
    assert strong.adiabatic
    out_of_band = adiabatic_phase(p, 2e6, 300e3)
    assert not out_of_band.in_band


def test_single_pulse_phase_vs_numeric():
    # acquired coherence phase matches 2*theta_delta within 0.05 rad in-band
    p = WurstParams(bandwidth=2e6, duration=100e-6, t_center=50e-6)
    om = 200e3
    dt = 1 / (20 * p.bandwidth) / 4
    grid = TimeGrid.spanning(0.0, p.duration, dt)
    wf = wurst_waveform(p, grid).scaled(om)
    for frac in (-0.6, -0.25, 0.0, 0.3, 0.55):
        d = frac * p.bandwidth / 2
        c_out, eps = coherence_response(wf, d)
        meas = np.angle(c_out / np.conj(complex(eps))) \
            - TWO_PI * d * (grid.t_start + grid.t_end)
        pred = 2 * adiabatic_phase(p, d, om).theta_delta
        assert abs(wrap(meas - pred)) < 0.05


def test_single_pulse_negative_chirp_vs_numeric():
    p = WurstParams(bandwidth=2e6, duration=100e-6, t_center=50e-6, chirp_sign=-1)
    om = 200e3
    grid = TimeGrid.spanning(0.0, p.duration, 1 / (20 * p.bandwidth) / 4)
    wf = wurst_waveform(p, grid).scaled(om)
    for d in (-3e5, 0.0, 4e5):
        c_out, eps = coherence_response(wf, d)
        meas = np.angle(c_out / np.conj(complex(eps))) \
            - TWO_PI * d * (grid.t_start + grid.t_end)
        pred = 2 * adiabatic_phase(p, d, om).theta_delta
        assert abs(wrap(meas - pred)) < 0.05


def test_two_pulse_identical_reduces_to_linear():
    # arg(a b*) = 2*pi*delta*(t0 - t1) exactly for identical parameters
    p0 = WurstParams(bandwidth=2e6, duration=100e-6, t_center=60e-6)
    p1 = p0.at(560e-6)
    for d in (1e4, -7e4, 2.3e5):
        v = two_pulse_phase(p0, p1, d, 200e3)
        assert v == pytest.approx(TWO_PI * d * (60e-6 - 560e-6), rel=1e-9)


def test_two_pulse_linear_slope_in_delta():
    # phase linear in delta with slope -2*pi*(t1 - t0); tau = 500 us spacing
    p0 = WurstParams(bandwidth=2e6, duration=100e-6, t_center=60e-6)
    p1 = p0.at(560e-6)
    deltas = np.linspace(-5e4, 5e4, 11)
    vals = [two_pulse_phase(p0, p1, d, 200e3) for d in deltas]
    slope = np.polyfit(deltas, vals, 1)[0]
    assert slope == pytest.approx(-TWO_PI * 500e-6, rel=1e-9)


def test_two_pulse_quadratic_residual_different_rates():
    # different chirp rates leave delta^2 (1/2R0 - 1/2R1) (angular convention)
    p0 = WurstParams(bandwidth=2.0e6, duration=100e-6, t_center=60e-6)
    p1 = WurstParams(bandwidth=1.2e6, duration=100e-6, t_center=560e-6)
    om = 250e3
    d = 2e5
    a0 = adiabatic_phase(p0, d, om)
    a1 = adiabatic_phase(p1, d, om)
    quad_diff = a1.quad_term - a0.quad_term
    expected = (TWO_PI * d) ** 2 * (1.0 / (2 * TWO_PI * p0.chirp_rate)
                                    - 1.0 / (2 * TWO_PI * p1.chirp_rate))
    assert quad_diff == pytest.approx(expected, rel=1e-12)
    # delta-dependent part of the full difference = quadratic residual plus the
    # dynamical-phase difference (relative to band center)
    full = two_pulse_phase(p0, p1, d, om) - two_pulse_phase(p0, p1, 0.0, om)
    linear = -TWO_PI * d * (560e-6 - 60e-6)
    b0 = adiabatic_phase(p0, 0.0, om)
    b1 = adiabatic_phase(p1, 0.0, om)
    dyn_diff = (a1.dyn_term - b1.dyn_term) - (a0.dyn_term - b0.dyn_term)
    assert full == pytest.approx(linear + quad_diff + dyn_diff, abs=1e-9)


def test_two_pulse_mixed_vs_numeric():
    # different bandwidths and amplitudes, numeric oracle agreement
    om = 300e3
    p0 = WurstParams(bandwidth=2e6, duration=100e-6, t_center=60e-6, a_peak=1.0)
    p1 = WurstParams(bandwidth=1.5e6, duration=100e-6, t_center=260e-6, a_peak=0.8)
    dt = 1 / (20 * 2e6) / 4
    grid = TimeGrid(0.0, dt, int(round(320e-6 / dt)) + 1)
    wf = render_timeline(
        [wurst_waveform(p0, TimeGrid.spanning(10e-6, 110e-6, dt)),
         wurst_waveform(p1, TimeGrid.spanning(210e-6, 310e-6, dt))],
        grid).scaled(om)
    for d in (-4e5, -1e5, 0.0, 2e5, 5e5):
        c_out, eps = coherence_response(wf, d)
        meas = np.angle(c_out / complex(eps)) - TWO_PI * d * grid.span
        pred = 2 * two_pulse_phase(p0, p1, d, om)
        assert abs(wrap(meas - pred)) < 0.05


def test_batch_matches_scalar():
    p = WurstParams(bandwidth=2e6, duration=100e-6, t_center=50e-6)
    deltas = np.array([-3e5, 0.0, 1e5, 4e5])
    out = adiabatic_phase_batch(p, deltas, 200e3, n_nodes=513)
    for k, d in enumerate(deltas):
        a = adiabatic_phase(p, d, 200e3)
        assert out["theta_delta"][k] == pytest.approx(a.theta_delta, abs=1e-12)


def test_q_min_scaling():
    p = WurstParams(bandwidth=2e6, duration=100e-6, t_center=50e-6, a_peak=0.5)
    a = adiabatic_phase(p, 0.0, 200e3)
    # realized peak Rabi is omega0 * a_peak
    assert a.q_min == pytest.approx(TWO_PI * (0.5 * 200e3) ** 2 / p.chirp_rate)
