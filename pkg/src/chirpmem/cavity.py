"""Resonator model: input-output filtering of drives, Fano lineshape generation
and fitting, dispersive-shift curves, and cooperativity-derived quantities.

Linewidth convention: every configured kappa (and gamma) is a FWHM in plain Hz.
The field-amplitude decay rate used by the filter is kappa_angular/2 = pi*kappa;
each conversion site is unit-tested.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import lfilter

from .waveforms import TimeGrid, Waveform, WaveformError

TWO_PI = 2.0 * np.pi


class CavityError(ValueError):
    pass


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResonatorParams:
    """Loaded resonator: center f0, loaded linewidth kappa (FWHM, Hz), coupling
    linewidth kappa_c, plus the Breit-Wigner-Fano transmission parameters."""

    f0: float
    kappa: float
    kappa_c: float
    fano_scale: float = 1.0      # K
    fano_q: float = 0.0          # asymmetry
    bg_slope: float = 0.0        # m, per Hz
    bg_offset: float = 0.0       # c

    def __post_init__(self):
        if self.kappa <= 0:
            raise CavityError(f"kappa must be positive, got {self.kappa}")
        if not (0 < self.kappa_c <= self.kappa):
            raise CavityError(
                f"need 0 < kappa_c <= kappa, got kappa_c={self.kappa_c}, kappa={self.kappa}")

    @property
    def kappa_half_angular(self) -> float:
        """Field decay rate (rad/s) implied by the FWHM convention."""
        return np.pi * self.kappa


@dataclass(frozen=True)
class SpinCavityCoupling:
    """Ensemble coupling g_ens and spin linewidth gamma (FWHM, Hz) plus the
    field-to-frequency mapping of the spin line."""

    g_ens: float
    gamma: float
    b_res: float = 0.0           # T, field where spins cross the resonator
    dfdb: float = 0.0            # Hz / T

    def __post_init__(self):
        if self.g_ens < 0:
            raise CavityError(f"g_ens must be >= 0, got {self.g_ens}")
        if self.gamma <= 0:
            raise CavityError(f"gamma must be positive, got {self.gamma}")


def dc_gain(r: ResonatorParams) -> float:
    """Steady-state intracavity amplitude per unit resonant drive amplitude."""
    return 2.0 * np.sqrt(TWO_PI * r.kappa_c) / (TWO_PI * r.kappa)


def cavity_filter(wf: Waveform, r: ResonatorParams, z0: complex = 0j) -> Waveform:
    """Intracavity field for a drive waveform, by the input-output equations

        dX/dt = sqrt(kappa_c_ang) * I - (kappa_ang/2) * X   (same for Y with Q),

    integrated with the shared fixed-step RK4 over the full grid, so ring-down
    persists after the drive ends.  z0 is the field at the first grid point.
    """
    lam = r.kappa_half_angular
    if wf.grid.dt > 1.0 / (20.0 * r.kappa) * (1 + 1e-9):
        raise WaveformError(
            f"grid too coarse for kappa={r.kappa:.6g} Hz: dt={wf.grid.dt:.3e} s "
            f"exceeds {1.0 / (20.0 * r.kappa):.3e} s")
    s = np.sqrt(TWO_PI * r.kappa_c) * wf.samples
    dt = wf.grid.dt
    u = lam * dt
    # RK4 for a linear scalar ODE with piecewise-linear drive collapses to a
    # constant-coefficient recurrence z[k] = A z[k-1] + b0 s[k-1] + bm s_mid + b1 s[k].
    a = 1.0 - u + u**2 / 2.0 - u**3 / 6.0 + u**4 / 24.0
    b0 = dt / 6.0 * (1.0 - u + u**2 / 2.0 - u**3 / 4.0)
    bm = dt / 6.0 * (4.0 - 2.0 * u + u**2 / 2.0)
    b1 = dt / 6.0
    s_mid = 0.5 * (s[:-1] + s[1:])
    c = b0 * s[:-1] + bm * s_mid + b1 * s[1:]
    out = np.empty(wf.grid.n_samples, dtype=complex)
    out[0] = z0
    # lfilter evaluates y[k] = a*y[k-1] + c[k] sequentially.
    out[1:] = lfilter([1.0], [1.0, -a], c, zi=np.array([a * z0]))[0]
    return Waveform(wf.grid, out)


def intracavity_drive(wf: Waveform, r: ResonatorParams, z0: complex = 0j) -> Waveform:
    """cavity_filter rescaled so a slow unit-amplitude drive gives unit field."""
    g = dc_gain(r)
    return cavity_filter(wf, r, z0=z0 * g).scaled(1.0 / g)


def effective_wurst_duration(bandwidth: float, duration: float, r: ResonatorParams) -> float:
    """Time a chirp of the given bandwidth spends inside the cavity linewidth:
    kappa * T / bandwidth.  Only meaningful for bandwidth >= kappa."""
    if bandwidth < r.kappa:
        raise CavityError(
            f"bandwidth {bandwidth:.6g} Hz below cavity linewidth {r.kappa:.6g} Hz; "
            f"the full duration applies")
    return r.kappa * duration / bandwidth


def wurst_bandwidth_limit(r: ResonatorParams, duration: float) -> float:
    """Homodyne frequency-resolution bound on the sweep width: kappa^2 * T."""
    return r.kappa**2 * duration


def fano_transmission(freqs: np.ndarray, r: ResonatorParams) -> np.ndarray:
    """Breit-Wigner-Fano |S21| lineshape plus a linear background."""
    f = np.asarray(freqs, dtype=float)
    df = f - r.f0
    return (r.fano_scale * (r.fano_q * r.kappa / 2.0 + df) / (r.kappa**2 / 4.0 + df**2)
            + r.bg_slope * f + r.bg_offset)


@dataclass(frozen=True)
class FanoFitResult:
    params: ResonatorParams
    residual_norm: float
    degenerate: bool
    n_evaluations: int


def _fano_model(x, f, f_mid):
    k_, q, f0, kap, m, c = x
    df = f - f0
    return k_ * (q * kap / 2.0 + df) / (kap**2 / 4.0 + df**2) + m * (f - f_mid) + c


def fit_fano(freqs: np.ndarray, magnitudes: np.ndarray,
             kappa_c_fraction: float = 1.0, max_evaluations: int = 5000) -> FanoFitResult:
    """Damped least-squares fit of the Fano lineshape.

    Initial guesses come from the extremum location and the peak-to-peak width;
    a few asymmetry start points guard against the q sign ambiguity.  kappa_c is
    not identifiable from |S21| alone and is reported as kappa_c_fraction*kappa.
    """
    f = np.asarray(freqs, dtype=float)
    y = np.asarray(magnitudes, dtype=float)
    if f.size < 7:
        raise FitError(f"need at least 7 points, got {f.size}")
    f_mid = float(np.mean(f))
    span = float(f.max() - f.min())

    # Background from the outer 20% of points.
    n_edge = max(2, f.size // 10)
    edges = np.r_[np.arange(n_edge), np.arange(f.size - n_edge, f.size)]
    pb = np.polyfit(f[edges] - f_mid, y[edges], 1)
    dev = y - np.polyval(pb, f - f_mid)
    i0 = int(np.argmax(np.abs(dev)))
    peak = float(dev[i0])
    f0_guess = float(f[i0])
    above = np.abs(dev) > 0.5 * abs(peak)
    kappa_guess = max(float(f[above].max() - f[above].min()), span / f.size)
    if span < 5.0 * kappa_guess:
        raise FitError(
            f"frequency span {span:.6g} Hz covers less than 5 estimated linewidths "
            f"({kappa_guess:.6g} Hz)")

    flat_resid = float(np.linalg.norm(y - np.mean(y)))
    scale = max(abs(peak), 1e-300)
    best = None
    n_ev = 0
    for q0 in (1.0, -1.0, 3.0, -3.0):
        k0 = peak * kappa_guess / (2.0 * q0)
        x0 = np.array([k0, q0, f0_guess, kappa_guess, pb[0], pb[1]])
        lo = [-np.inf, -np.inf, f.min() - span, kappa_guess * 1e-4, -np.inf, -np.inf]
        hi = [np.inf, np.inf, f.max() + span, span * 10.0, np.inf, np.inf]
        res = least_squares(
            lambda x: _fano_model(x, f, f_mid) - y, x0, bounds=(lo, hi),
            x_scale=[scale * kappa_guess, 1.0, kappa_guess, kappa_guess, scale / span, scale],
            max_nfev=max_evaluations)
        n_ev += res.nfev
        if best is None or res.cost < best.cost:
            best = res
    if best is None or not best.success:
        raise FitError("fano fit did not converge")

    k_, q, f0, kap, m, c_mid = best.x
    resid = float(np.linalg.norm(best.fun))
    # Degenerate when the resonance term explains nothing beyond a flat/linear model.
    line_amp = abs(k_) * (abs(q) + 1.0) / kap
    degenerate = line_amp < 1e-6 * max(abs(np.mean(y)), 1e-300) or resid > 0.999 * flat_resid
    params = ResonatorParams(
        f0=float(f0), kappa=float(kap), kappa_c=float(kappa_c_fraction * kap),
        fano_scale=float(k_), fano_q=float(q),
        bg_slope=float(m), bg_offset=float(c_mid - m * f_mid))
    return FanoFitResult(params, resid, bool(degenerate), n_ev)


def dispersive_curves(b_field: np.ndarray, c: SpinCavityCoupling,
                      r: ResonatorParams) -> tuple[np.ndarray, np.ndarray]:
    """Resonator frequency and linewidth vs magnetic field as the spin line is
    tuned through:  f = f0 - g^2 D/(D^2+gamma^2/4),  k = k0 + g^2 (gamma/2)/(D^2+gamma^2/4)
    with D = (B - B_res) * df/dB.  One frequency convention throughout."""
    b = np.asarray(b_field, dtype=float)
    delta = (b - c.b_res) * c.dfdb
    denom = delta**2 + c.gamma**2 / 4.0
    f = r.f0 - c.g_ens**2 * delta / denom
    kap = r.kappa + c.g_ens**2 * (c.gamma / 2.0) / denom
    return f, kap


def cooperativity(c: SpinCavityCoupling, r: ResonatorParams) -> float:
    """C = 4 g_ens^2 / (kappa * gamma), both linewidths FWHM in Hz."""
    return 4.0 * c.g_ens**2 / (r.kappa * c.gamma)


def one_way_efficiency(c_value) -> np.ndarray | float:
    """eta_em = 4C/(1+C)^2; unit maximum at C = 1."""
    c = np.asarray(c_value, dtype=float)
    if np.any(c < 0):
        raise CavityError("cooperativity must be >= 0")
    eta = 4.0 * c / (1.0 + c) ** 2
    return float(eta) if np.isscalar(c_value) or c.ndim == 0 else eta
