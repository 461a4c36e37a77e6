"""Chirped (WURST) and Gaussian pulse synthesis as sampled complex baseband envelopes.

Waveforms live in the frame rotating at the cavity/ensemble center frequency.
Samples are complex with I = real part and Q = imaginary part, in units of Rabi
frequency (Hz) times the dimensionless drive scale.  All frequencies here are
plain Hz; the 2*pi lives inside the phase integral and the propagation kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * np.pi


class WaveformError(ValueError):
    """Invalid pulse parameters or an unusable sampling grid."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid: times t_start + k*dt for k in [0, n_samples)."""

    t_start: float
    dt: float
    n_samples: int

    def __post_init__(self):
        if self.dt <= 0:
            raise WaveformError(f"dt must be positive, got {self.dt}")
        if self.n_samples < 2:
            raise WaveformError(f"need at least 2 samples, got {self.n_samples}")

    @property
    def t_end(self) -> float:
        return self.t_start + (self.n_samples - 1) * self.dt

    @property
    def span(self) -> float:
        return (self.n_samples - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_samples)

    @classmethod
    def spanning(cls, t_lo: float, t_hi: float, dt: float) -> "TimeGrid":
        """Smallest grid starting at t_lo with step dt that covers [t_lo, t_hi]."""
        n = int(np.ceil((t_hi - t_lo) / dt - 1e-9)) + 1
        return cls(t_lo, dt, max(n, 2))


@dataclass(frozen=True)
class WurstParams:
    """Chirped pulse: linear frequency sweep over `bandwidth` with a flat-top
    1 - |sin|^order truncation envelope."""

    bandwidth: float            # Hz, full sweep width
    duration: float             # s
    t_center: float = 0.0       # s
    order: int = 20
    a_peak: float = 1.0         # dimensionless drive scale (peak Rabi / omega_ref)
    phi0: float = 0.0           # rad
    chirp_sign: int = 1         # +1 sweeps low->high, -1 the reverse

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise WaveformError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.duration <= 0:
            raise WaveformError(f"duration must be positive, got {self.duration}")
        if self.order < 2 or self.order % 2 != 0:
            raise WaveformError(f"order must be even and >= 2, got {self.order}")
        if self.a_peak < 0:
            raise WaveformError(f"a_peak must be >= 0, got {self.a_peak}")
        if self.chirp_sign not in (1, -1):
            raise WaveformError(f"chirp_sign must be +-1, got {self.chirp_sign}")

    @property
    def chirp_rate(self) -> float:
        """Signed sweep rate in Hz/s."""
        return self.chirp_sign * self.bandwidth / self.duration

    @property
    def window(self) -> tuple[float, float]:
        return (self.t_center - self.duration / 2, self.t_center + self.duration / 2)

    def at(self, t_center: float) -> "WurstParams":
        return replace(self, t_center=t_center)

    def envelope(self, t) -> np.ndarray:
        """Truncation envelope, 1 at center, 0 at the window edges, 0 outside."""
        x = np.asarray(t, dtype=float) - self.t_center
        inside = np.abs(x) <= self.duration / 2 * (1 + 1e-12)
        env = 1.0 - np.abs(np.sin(np.pi * x / self.duration)) ** self.order
        return np.where(inside, env, 0.0)

    def instantaneous_frequency(self, t) -> np.ndarray:
        """Hz, sweeping chirp_sign*(-bandwidth/2 -> +bandwidth/2) across the window."""
        x = np.asarray(t, dtype=float) - self.t_center
        return self.chirp_rate * x

    def phase(self, t) -> np.ndarray:
        """2*pi * integral of the instantaneous frequency, plus phi0."""
        x = np.asarray(t, dtype=float) - self.t_center
        return np.pi * self.chirp_rate * x**2 + self.phi0


@dataclass(frozen=True)
class GaussianParams:
    """Real Gaussian envelope of given FWHM, truncated at +-duration/2."""

    amplitude: float            # dimensionless drive scale
    fwhm: float                 # s
    duration: float             # s
    t_center: float = 0.0
    phase: float = 0.0          # rad

    def __post_init__(self):
        if self.fwhm <= 0:
            raise WaveformError(f"fwhm must be positive, got {self.fwhm}")
        if self.duration < self.fwhm:
            raise WaveformError(
                f"duration ({self.duration}) must be >= fwhm ({self.fwhm})")

    @property
    def window(self) -> tuple[float, float]:
        return (self.t_center - self.duration / 2, self.t_center + self.duration / 2)

    def at(self, t_center: float) -> "GaussianParams":
        return replace(self, t_center=t_center)

    def envelope(self, t) -> np.ndarray:
        x = np.asarray(t, dtype=float) - self.t_center
        inside = np.abs(x) <= self.duration / 2 * (1 + 1e-12)
        return np.where(inside, np.exp(-4.0 * np.log(2.0) * (x / self.fwhm) ** 2), 0.0)


@dataclass(frozen=True)
class Waveform:
    """Sampled complex baseband envelope on a uniform grid."""

    grid: TimeGrid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.grid.n_samples,):
            raise WaveformError(
                f"samples shape {s.shape} does not match grid n={self.grid.n_samples}")
        if not np.all(np.isfinite(s.view(float))):
            raise WaveformError("waveform contains non-finite samples")
        object.__setattr__(self, "samples", s)

    def times(self) -> np.ndarray:
        return self.grid.times()

    @property
    def i(self) -> np.ndarray:
        return self.samples.real

    @property
    def q(self) -> np.ndarray:
        return self.samples.imag

    def energy(self) -> float:
        """Sum |samples|^2 * dt."""
        return float(np.sum(np.abs(self.samples) ** 2) * self.grid.dt)

    def scaled(self, factor: complex) -> "Waveform":
        return Waveform(self.grid, self.samples * factor)


def _check_window_in_grid(window: tuple[float, float], grid: TimeGrid, what: str):
    tol = grid.dt * 1e-6
    if window[0] < grid.t_start - tol or window[1] > grid.t_end + tol:
        raise WaveformError(
            f"{what} window [{window[0]:.6g}, {window[1]:.6g}] s not contained in "
            f"grid [{grid.t_start:.6g}, {grid.t_end:.6g}] s")


def wurst_waveform(p: WurstParams, grid: TimeGrid) -> Waveform:
    """Sample a WURST chirp on `grid`; zero outside the pulse window.

    The grid must contain the window and resolve the sweep (dt <= 1/(20*bandwidth)).
    """
    _check_window_in_grid(p.window, grid, "WURST")
    dt_max = 1.0 / (20.0 * p.bandwidth)
    if grid.dt > dt_max * (1 + 1e-9):
        raise WaveformError(
            f"grid too coarse for bandwidth {p.bandwidth:.6g} Hz: "
            f"dt={grid.dt:.3e} s exceeds {dt_max:.3e} s")
    t = grid.times()
    env = p.a_peak * p.envelope(t)
    return Waveform(grid, env * np.exp(1j * p.phase(t)))


def gaussian_waveform(p: GaussianParams, grid: TimeGrid) -> Waveform:
    """Sample a truncated Gaussian excitation on `grid`."""
    _check_window_in_grid(p.window, grid, "Gaussian")
    env = p.amplitude * p.envelope(grid.times())
    return Waveform(grid, env * np.exp(1j * p.phase))


def render_timeline(events: list[Waveform], grid: TimeGrid | None = None) -> Waveform:
    """Embed non-overlapping event waveforms into one waveform on the union grid.

    All events must share dt and sit on a common sample lattice.  Overlapping
    pulse windows are rejected, naming both offenders.
    """
    if not events:
        if grid is None:
            raise WaveformError("empty timeline needs an explicit grid")
        return Waveform(grid, np.zeros(grid.n_samples, dtype=complex))

    dt = events[0].grid.dt
    for k, ev in enumerate(events):
        if abs(ev.grid.dt - dt) > 1e-9 * dt:
            raise WaveformError(f"event {k} dt {ev.grid.dt} differs from {dt}")

    order = sorted(range(len(events)), key=lambda k: events[k].grid.t_start)
    for a, b in zip(order, order[1:]):
        if events[b].grid.t_start < events[a].grid.t_end - dt * 1e-6:
            raise WaveformError(
                f"events {a} and {b} overlap: "
                f"[{events[a].grid.t_start:.6g}, {events[a].grid.t_end:.6g}] s vs "
                f"[{events[b].grid.t_start:.6g}, {events[b].grid.t_end:.6g}] s")

    if grid is None:
        t_lo = events[order[0]].grid.t_start
        t_hi = max(ev.grid.t_end for ev in events)
        n = int(round((t_hi - t_lo) / dt)) + 1
        grid = TimeGrid(t_lo, dt, n)

    out = np.zeros(grid.n_samples, dtype=complex)
    for k, ev in enumerate(events):
        off = (ev.grid.t_start - grid.t_start) / dt
        k0 = int(round(off))
        if abs(off - k0) > 1e-6:
            raise WaveformError(
                f"event {k} start {ev.grid.t_start:.9g} s is not on the timeline lattice")
        if k0 < 0 or k0 + ev.grid.n_samples > grid.n_samples:
            raise WaveformError(f"event {k} does not fit in the timeline grid")
        out[k0:k0 + ev.grid.n_samples] += ev.samples
    return Waveform(grid, out)


def default_dt(bandwidth: float = 0.0, delta_max: float = 0.0,
               omega_max: float = 0.0, theta_max: float = 0.02) -> float:
    """Integration step resolving the fastest rotation any kernel sees.

    Bounds: 1/(20*bandwidth), 1/(20*delta_max), 1/(20*omega_max), and
    theta_max / (2*pi*sqrt(delta_max^2 + omega_max^2)) which keeps the RK4
    Bloch-norm drift within budget on long runs.
    """
    cands = []
    for f in (bandwidth, delta_max, omega_max):
        if f > 0:
            cands.append(1.0 / (20.0 * f))
    rot = np.hypot(delta_max, omega_max)
    if rot > 0:
        cands.append(theta_max / (TWO_PI * rot))
    if not cands:
        raise WaveformError("default_dt needs at least one positive rate")
    return min(cands)
