"""End-to-end simulation of compiled pulse schedules.

The engine walks the schedule event by event on a global recording lattice:
each pulse/excitation window is synthesized on a local fine grid (an integer
refinement of the recording step), optionally filtered through the resonator
(with the intracavity field carried analytically across gaps), and integrated
with the shared RK4 kernel; the gaps between windows are advanced by exact
z-rotations while the collective polarization is still recorded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import EchoRecord, extract_echo
from .cavity import ResonatorParams, dc_gain, intracavity_drive
from .ensemble import (EnsembleState, IntegratorStepError, SpinEnsemble,
                       _advance_free, _record_free, _run_window)
from .waveforms import (GaussianParams, TimeGrid, Waveform, WurstParams,
                        default_dt, gaussian_waveform, wurst_waveform)

TWO_PI = 2.0 * np.pi


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimOptions:
    omega_ref: float = 250e3      # peak Rabi (Hz) at unit drive scale, g = g_ref
    g_ref: float = 0.0            # 0 -> ensemble geometric mean
    dt_record: float = 1e-7       # global recording step
    dt_max: float = 0.0           # 0 -> automatic per-event bound
    theta_max: float = 0.02       # RK4 per-step rotation budget (rad)
    cavity_filtered: bool = True  # drive the spins with the intracavity field
    ringdown_decades: float = 8.0  # pad pulse windows until the field decays 10^-x
    window_pad: float = 2e-6      # extra pad around event windows, s
    chunk_size: int = 2048
    threads: int = 1
    norm_tol: float = 1e-6
    snapshot_times: tuple[float, ...] = ()   # capture full states at these times


@dataclass
class SimResult:
    times: np.ndarray                      # recording lattice
    polarization: np.ndarray               # sum w g (sx + i sy)
    output: np.ndarray | None              # cavity-filtered emission trace
    final_state: EnsembleState
    norm_drift: float
    pulse_windows: list[tuple[float, float]]
    excitation_windows: list[tuple[float, float]]
    snapshots: dict[float, np.ndarray] = field(default_factory=dict)
    n_rk4_steps: int = 0
    coherence_weights: np.ndarray | None = None    # w_i * g0_i, for floor estimates

    def polarization_peak(self, window: tuple[float, float]) -> float:
        sel = (self.times >= window[0]) & (self.times <= window[1])
        if not np.any(sel):
            raise SimulationError(f"no samples in window {window}")
        return float(np.max(np.abs(self.polarization[sel])))


def _event_waveform(ev, grid: TimeGrid) -> Waveform:
    if isinstance(ev.params, WurstParams):
        return wurst_waveform(ev.params, grid)
    return gaussian_waveform(ev.params, grid)


def _event_dt(ev, ens: SpinEnsemble, opts: SimOptions) -> float:
    delta_max = float(np.max(np.abs(ens.delta)))
    scale_max = float(np.max(ens.g0)) / (opts.g_ref or ens.g_ref)
    omega_max = opts.omega_ref * scale_max * getattr(
        ev.params, "a_peak", getattr(ev.params, "amplitude", 1.0))
    bw = ev.params.bandwidth if isinstance(ev.params, WurstParams) \
        else 1.0 / ev.params.fwhm
    dt = default_dt(bandwidth=bw, delta_max=delta_max, omega_max=omega_max,
                    theta_max=opts.theta_max)
    if opts.dt_max > 0:
        dt = min(dt, opts.dt_max)
    return dt


def run_schedule(schedule, ens: SpinEnsemble, resonator: ResonatorParams | None,
                 opts: SimOptions = SimOptions(),
                 state: EnsembleState | None = None) -> SimResult:
    """Simulate a compiled schedule and return the recorded traces.

    The recording lattice starts at t=0 and extends one tau past the last
    event or predicted echo.  Emission filtering (SimResult.output) requires a
    resonator; cavity filtering of the drive is controlled by opts.
    """
    events = sorted(schedule.events, key=lambda e: e.t)
    if not events:
        raise SimulationError("schedule has no events")
    g_ref = opts.g_ref if opts.g_ref > 0 else ens.g_ref
    dt_rec = opts.dt_record
    lo, hi = schedule.span
    if lo - opts.window_pad < 0:
        raise SimulationError(
            f"first event window starts at {lo:.3e} s; schedules must leave "
            f"room at t >= 0 for the {opts.window_pad:.1e} s pad")
    t_end = hi + 2.0 * schedule.tau
    n_rec = int(np.ceil(t_end / dt_rec)) + 1
    rec = np.zeros(n_rec, dtype=complex)
    times = dt_rec * np.arange(n_rec)

    if state is None:
        state = EnsembleState.ground(ens.n_spins)
    bloch = state.bloch.copy()
    norms0 = np.sqrt(np.sum(bloch**2, axis=1))

    if resonator is not None and opts.cavity_filtered:
        ring_pad = opts.ringdown_decades * np.log(10.0) / \
            resonator.kappa_half_angular
    else:
        ring_pad = 0.0

    snapshot_times = sorted(opts.snapshot_times)
    snapshots: dict[float, np.ndarray] = {}
    pulse_windows = []
    exc_windows = []
    cavity_z = 0j
    cavity_t = 0.0
    cursor = 0          # first un-recorded lattice index
    t_cursor = 0.0      # current state time
    n_steps = 0

    def free_to(t_target: float, idx_hi: int):
        """Record lattice points in [cursor, idx_hi) from free evolution, honor
        snapshot times, then advance the state to t_target."""
        nonlocal cursor, t_cursor
        if idx_hi > cursor:
            t_rel = times[cursor:idx_hi] - t_cursor
            _record_free(bloch, ens, t_rel, rec[cursor:idx_hi],
                         opts.chunk_size, opts.threads)
            cursor = idx_hi
        while snapshot_times and t_cursor <= snapshot_times[0] <= t_target:
            t_s = snapshot_times.pop(0)
            _advance_free(bloch, ens, t_s - t_cursor)
            t_cursor = t_s
            snapshots[t_s] = bloch.copy()
        if t_target > t_cursor:
            _advance_free(bloch, ens, t_target - t_cursor)
            t_cursor = t_target

    # Coalesce events whose padded windows share lattice cells (e.g. excitation
    # trains) into single integration groups.
    groups: list[list] = []
    for ev in events:
        w_lo, w_hi = ev.window
        a = int(np.floor((w_lo - opts.window_pad) / dt_rec))
        b = min(int(np.ceil((w_hi + opts.window_pad + ring_pad) / dt_rec)), n_rec - 1)
        (pulse_windows if ev.kind == "pi" else exc_windows).append((w_lo, w_hi))
        if groups and a <= groups[-1][1]:
            groups[-1][1] = max(groups[-1][1], b)
            groups[-1][2].append(ev)
        else:
            groups.append([a, b, [ev]])

    for a, b, group in groups:
        if a * dt_rec < t_cursor - 1e-15:
            raise SimulationError(
                f"event {group[0].event_id} window (with pads) overlaps the "
                f"previous group; increase tau or reduce pads")
        free_to(a * dt_rec, a)

        m = max(1, int(np.ceil(dt_rec / min(_event_dt(ev, ens, opts)
                                            for ev in group) - 1e-9)))
        dt = dt_rec / m
        n_local = (b - a) * m + 1
        grid = TimeGrid(a * dt_rec, dt, n_local)
        samples = np.zeros(n_local, dtype=complex)
        for ev in group:
            samples += _event_waveform(ev, grid).samples
        wf = Waveform(grid, samples * opts.omega_ref)
        if resonator is not None and opts.cavity_filtered:
            decay = np.exp(-resonator.kappa_half_angular * (grid.t_start - cavity_t))
            wf = intracavity_drive(wf, resonator, z0=cavity_z * decay)
            cavity_z = wf.samples[-1]
            cavity_t = grid.t_end
        _run_window(bloch, ens, g_ref, wf.samples, dt, m, 0,
                    rec[a:b], opts.chunk_size, opts.threads)
        n_steps += n_local - 1
        cursor = b
        t_cursor = grid.t_end

    free_to(times[-1], n_rec)
    if snapshot_times:
        raise SimulationError(
            f"snapshot times {snapshot_times} fall inside event windows or past "
            f"the end of the run")

    drift = float(np.max(np.abs(np.sqrt(np.sum(bloch**2, axis=1)) - norms0)))
    if drift > opts.norm_tol:
        raise IntegratorStepError(
            f"Bloch norm drift {drift:.3e} exceeds tolerance {opts.norm_tol:.1e}")

    output = None
    if resonator is not None:
        if dt_rec > 1.0 / (20.0 * resonator.kappa):
            raise SimulationError(
                f"dt_record={dt_rec:.3e} s too coarse to filter the emission "
                f"through kappa={resonator.kappa:.6g} Hz")
        out_wf = intracavity_drive(Waveform(TimeGrid(0.0, dt_rec, n_rec), rec),
                                   resonator)
        output = out_wf.samples

    return SimResult(times=times, polarization=rec, output=output,
                     final_state=EnsembleState(bloch), norm_drift=drift,
                     pulse_windows=pulse_windows, excitation_windows=exc_windows,
                     snapshots=snapshots, n_rk4_steps=n_steps,
                     coherence_weights=ens.coherence_weights())


# ---------------------------------------------------------------------------
# Echo measurement on simulated traces


def measure_echoes(result: SimResult, schedule, use_output: bool = False,
                   window_half: float | None = None,
                   noise_factor: float = 4.0) -> list[tuple[object, EchoRecord]]:
    """Extract one EchoRecord per predicted echo (windows centered on the
    predictions).  Returns [(PredictedEcho, EchoRecord)]."""
    trace = result.output if use_output else result.polarization
    if trace is None:
        raise SimulationError("no output trace; run with a resonator")
    out = []
    for pe in schedule.predicted_echoes:
        half = window_half
        if half is None:
            half = 0.4 * min(
                [pe.t - w[1] for w in result.pulse_windows if w[1] < pe.t] +
                [w[0] - pe.t for w in result.pulse_windows if w[0] > pe.t] +
                [schedule.tau])
            half = max(half, 4 * (result.times[1] - result.times[0]))
        rec = extract_echo(result.times, trace, (pe.t - half, pe.t + half),
                           noise_factor=noise_factor)
        out.append((pe, rec))
    return out


@dataclass(frozen=True)
class SpuriousScan:
    peak: float              # largest |P| outside all expected windows
    floor_median: float      # median |P| over the scan region
    floor_dephased: float    # statistical floor of a phase-randomized ensemble

    @property
    def ratio(self) -> float:
        return self.peak / self.floor_dephased


def scan_spurious(result: SimResult, schedule, exclude_half: float | None = None,
                  guard: float = 8e-6, program_span_only: bool = True) -> SpuriousScan:
    """Largest |polarization| outside pulse/excitation windows and predicted
    echo windows.

    floor_dephased is the RMS |P| a uniform-phase-randomized ensemble with the
    final per-spin coherence amplitudes would show (the 1/sqrt(n) statistical
    floor); the stratified sampler's median floor sits below it by design.
    With program_span_only the scan stops at the last pulse edge: past it the
    re-stored excitations have no further scheduled reads and their silenced
    refocusings are not part of the program's timetable."""
    t = result.times
    mask = np.ones(t.shape[0], dtype=bool)
    if program_span_only:
        mask &= t <= max(w[1] for w in result.pulse_windows)
    for w in result.pulse_windows + result.excitation_windows:
        mask &= ~((t >= w[0] - guard) & (t <= w[1] + guard))
    half = exclude_half if exclude_half is not None else 0.45 * schedule.tau
    for pe in schedule.predicted_echoes:
        mask &= ~((t >= pe.t - half) & (t <= pe.t + half))
    if not np.any(mask):
        raise SimulationError("no samples outside excluded windows")
    mag = np.abs(result.polarization[mask])
    amp = result.final_state.bloch[:, 0] + 1j * result.final_state.bloch[:, 1]
    if result.coherence_weights is not None:
        floor_stat = float(np.sqrt(np.sum(np.abs(result.coherence_weights * amp) ** 2)))
    else:
        floor_stat = float(np.median(mag))
    return SpuriousScan(peak=float(np.max(mag)), floor_median=float(np.median(mag)),
                        floor_dephased=floor_stat)


def schedule_timeline(schedule, omega_ref: float = 1.0,
                      dt: float | None = None,
                      max_samples: int = 40_000_000) -> Waveform:
    """Render a compiled schedule's full drive timeline as one waveform
    (zero between events), at a grid resolving the widest pulse."""
    events = sorted(schedule.events, key=lambda e: e.t)
    if dt is None:
        bw = max([ev.params.bandwidth for ev in events
                  if isinstance(ev.params, WurstParams)] or [0.0])
        fw = max([1.0 / ev.params.fwhm for ev in events
                  if isinstance(ev.params, GaussianParams)] or [0.0])
        dt = default_dt(bandwidth=max(bw, fw))
    lo = min(ev.window[0] for ev in events)
    hi = max(ev.window[1] for ev in events)
    n = int(np.ceil((hi - lo) / dt)) + 1
    if n > max_samples:
        raise SimulationError(
            f"timeline would need {n} samples at dt={dt:.3e} s; pass a coarser "
            f"dt or raise max_samples")
    grid = TimeGrid(lo, dt, n)
    samples = np.zeros(n, dtype=complex)
    for ev in events:
        samples += _event_waveform(ev, grid).samples
    return Waveform(grid, samples * omega_ref)


def ab_sweep(reference: WurstParams, chirp_rates: np.ndarray,
             amplitudes: np.ndarray, ens: SpinEnsemble, omega_ref: float,
             resonator: ResonatorParams | None = None,
             n_nodes: int = 129):
    """Adiabatic-model AB-echo amplitudes over a (chirp rate, amplitude) grid
    of B pulses against the fixed reference A (analysis.ModeSweep input)."""
    from dataclasses import replace

    from .analysis import ModeSweep, ab_echo_ratio

    echo = np.zeros((len(chirp_rates), len(amplitudes)))
    for i, r_val in enumerate(chirp_rates):
        for j, a_val in enumerate(amplitudes):
            pb = replace(reference,
                         bandwidth=abs(r_val) * reference.duration,
                         chirp_sign=1 if r_val > 0 else -1,
                         a_peak=a_val)
            echo[i, j] = ab_echo_ratio(reference, pb, ens, omega_ref,
                                       resonator=resonator, n_nodes=n_nodes)
    return ModeSweep(chirp_rates=np.asarray(chirp_rates, dtype=float),
                     amplitudes=np.asarray(amplitudes, dtype=float),
                     echo=echo,
                     reference={"bandwidth_hz": reference.bandwidth,
                                "duration_s": reference.duration,
                                "amplitude": reference.a_peak,
                                "chirp_rate_hz_per_s": reference.chirp_rate})
