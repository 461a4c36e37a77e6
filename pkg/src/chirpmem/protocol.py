"""Compilation of symbolic memory programs into collision-checked pulse
schedules with predicted echo timetables.

Timing model: pi pulses sit on a uniform comb with center-to-center spacing
2*tau; payload slots (excitations, echoes) sit at the comb midpoints, tau from
each neighboring pulse.  A block is two consecutive comb slots driven by the
same mode, so its pulse pair spans 2*tau + T_W and repeats every 4*tau.  Echo
times follow the mirror rule: each pi pulse maps the refocus label r to
2*t_pulse - r, and an echo is emitted when the accumulated chirp-phase tags of
a stored excitation cancel (identical pulses in even interleavings).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .waveforms import GaussianParams, WurstParams

WRITE, READ, IDLE = "WRITE", "READ", "IDLE"


class ProgramError(ValueError):
    """Invalid program, registry, or schedule."""


@dataclass(frozen=True)
class ModeDef:
    """A registered memory mode: the chirp template addressed by one storage index."""

    name: str
    bandwidth: float            # Hz
    duration: float             # s
    amplitude: float = 1.0      # drive scale
    order: int = 20
    phase: float = 0.0          # rad
    chirp_sign: int = 1

    @property
    def chirp_rate(self) -> float:
        return self.chirp_sign * self.bandwidth / self.duration

    def to_wurst(self, t_center: float) -> WurstParams:
        return WurstParams(bandwidth=self.bandwidth, duration=self.duration,
                           t_center=t_center, order=self.order,
                           a_peak=self.amplitude, phi0=self.phase,
                           chirp_sign=self.chirp_sign)


class ModeRegistry:
    """Named modes with registration-time checks.

    omega_ref (Hz, peak Rabi at unit amplitude) enables the adiabaticity bound
    Q_min = 2*pi*(omega_ref*amplitude)^2/|R| >= q_min.  max_bandwidth (e.g. the
    homodyne limit kappa^2*T) and min_bandwidth are instrument bounds.
    equivalence, when given, is called as equivalence(a, b) -> bool and rejects
    modes that address the same phase pattern as an existing one.
    """

    def __init__(self, omega_ref: float = 0.0, q_min: float = 1.0,
                 min_bandwidth: float = 0.0, max_bandwidth: float = 0.0,
                 equivalence=None):
        self.omega_ref = omega_ref
        self.q_min = q_min
        self.min_bandwidth = min_bandwidth
        self.max_bandwidth = max_bandwidth
        self.equivalence = equivalence
        self._modes: dict[str, ModeDef] = {}

    def __contains__(self, name: str) -> bool:
        return name in self._modes

    def __getitem__(self, name: str) -> ModeDef:
        if name not in self._modes:
            raise ProgramError(f"unknown mode {name!r}")
        return self._modes[name]

    def names(self) -> list[str]:
        return list(self._modes)

    def mode_violations(self, mode: ModeDef) -> list[str]:
        out = []
        if self.omega_ref > 0:
            q = 2.0 * 3.141592653589793 * (self.omega_ref * mode.amplitude) ** 2 \
                / abs(mode.chirp_rate)
            if q < self.q_min:
                out.append(f"mode {mode.name!r} adiabaticity Q_min={q:.2f} "
                           f"below bound {self.q_min:.2f}")
        if self.min_bandwidth > 0 and mode.bandwidth < self.min_bandwidth:
            out.append(f"mode {mode.name!r} bandwidth {mode.bandwidth:.3g} Hz below "
                       f"minimum {self.min_bandwidth:.3g} Hz")
        if self.max_bandwidth > 0 and mode.bandwidth > self.max_bandwidth:
            out.append(f"mode {mode.name!r} bandwidth {mode.bandwidth:.3g} Hz above "
                       f"maximum {self.max_bandwidth:.3g} Hz")
        if self.equivalence is not None:
            for other in self._modes.values():
                if other.name != mode.name and self.equivalence(mode, other):
                    out.append(f"mode {mode.name!r} is equivalent to registered "
                               f"mode {other.name!r}")
        return out

    def register(self, mode: ModeDef) -> "ModeRegistry":
        if mode.name in self._modes:
            raise ProgramError(f"mode {mode.name!r} already registered")
        bad = self.mode_violations(mode)
        if bad:
            raise ProgramError("; ".join(bad))
        self._modes[mode.name] = mode
        return self

    def items(self):
        return self._modes.items()


@dataclass(frozen=True)
class Block:
    mode: str
    op: str                               # WRITE | READ | IDLE
    excitation: GaussianParams | None = None

    def __post_init__(self):
        if self.op not in (WRITE, READ, IDLE):
            raise ProgramError(f"unknown block op {self.op!r}")
        if self.op == WRITE and self.excitation is None:
            raise ProgramError("WRITE block needs an excitation")


@dataclass(frozen=True)
class MemoryProgram:
    """Ordered blocks on the 2*tau comb; tau is the payload-to-pulse spacing."""

    tau: float
    blocks: tuple[Block, ...]
    half_start: str | None = None        # lone lead-in pulse mode
    half_end: str | None = None          # lone lead-out pulse mode

    def __post_init__(self):
        if self.tau <= 0:
            raise ProgramError(f"tau must be positive, got {self.tau}")
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def clock_period(self) -> float:
        """Block repeat period on the comb (two comb slots)."""
        return 4.0 * self.tau

    def block_duration(self, t_wurst: float) -> float:
        """Span of one block's pulse pair, leading edge to trailing edge."""
        return 2.0 * self.tau + t_wurst


@dataclass(frozen=True)
class ScheduledEvent:
    t: float                               # center time, s
    kind: str                              # "pi" | "excitation"
    mode: str | None
    params: WurstParams | GaussianParams
    event_id: str

    @property
    def window(self) -> tuple[float, float]:
        return self.params.window


@dataclass(frozen=True)
class PredictedEcho:
    t: float
    mode: str                              # mode of the pulse pair that released it
    source: str                            # excitation event id
    emission_index: int                    # 1 for the first release of a stored excitation
    ghost: bool = False                    # stale excitation re-released by a later READ
    # Predicted echo phase minus excitation drive phase: +pi/2 when the ensemble
    # is in the ground state at the excitation (even number of prior inversions),
    # -pi/2 when inverted; identical pulse pairs preserve phase exactly.
    phase_offset: float = 0.0


@dataclass(frozen=True)
class PulseSchedule:
    tau: float
    events: tuple[ScheduledEvent, ...]
    predicted_echoes: tuple[PredictedEcho, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(sorted(
            self.events, key=lambda e: (e.t, e.event_id))))
        object.__setattr__(self, "predicted_echoes",
                           tuple(sorted(self.predicted_echoes, key=lambda e: e.t)))
        evs = [e for e in self.events]
        for a, b in zip(evs, evs[1:]):
            if b.window[0] < a.window[1] - 1e-12:
                raise ProgramError(
                    f"events {a.event_id} and {b.event_id} overlap: "
                    f"{a.window} vs {b.window}")

    @property
    def span(self) -> tuple[float, float]:
        lo = min(e.window[0] for e in self.events)
        hi = max([e.window[1] for e in self.events]
                 + [p.t for p in self.predicted_echoes])
        return lo, hi

    def pulses(self) -> list[ScheduledEvent]:
        return [e for e in self.events if e.kind == "pi"]

    def excitations(self) -> list[ScheduledEvent]:
        return [e for e in self.events if e.kind == "excitation"]

    def to_json_dict(self) -> dict:
        def params_dict(p):
            if isinstance(p, WurstParams):
                return {"type": "wurst", "bandwidth_hz": p.bandwidth,
                        "duration_s": p.duration, "order": p.order,
                        "amplitude": p.a_peak, "phase_rad": p.phi0,
                        "chirp_sign": p.chirp_sign}
            return {"type": "gaussian", "amplitude": p.amplitude,
                    "fwhm_s": p.fwhm, "duration_s": p.duration,
                    "phase_rad": p.phase}

        return {
            "tau_s": self.tau,
            "events": [{"id": e.event_id, "t_s": e.t, "kind": e.kind,
                        "mode": e.mode, "params": params_dict(e.params)}
                       for e in self.events],
            "predicted_echoes": [{"t_s": p.t, "mode": p.mode, "source": p.source,
                                  "emission_index": p.emission_index,
                                  "ghost": p.ghost,
                                  "phase_offset_rad": p.phase_offset}
                                 for p in self.predicted_echoes],
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=1)

    def to_program(self) -> MemoryProgram:
        """Reconstruct the block program this schedule realizes (compile_program
        output only)."""
        if "blocks" not in self.meta:
            raise ProgramError("schedule does not carry block provenance")
        blocks = []
        exc_by_id = {e.event_id: e for e in self.excitations()}
        for entry in self.meta["blocks"]:
            exc = None
            if entry.get("excitation") is not None:
                p = exc_by_id[entry["excitation"]].params
                exc = replace(p, t_center=0.0)
            blocks.append(Block(mode=entry["mode"], op=entry["op"], excitation=exc))
        return MemoryProgram(tau=self.tau, blocks=tuple(blocks),
                             half_start=self.meta.get("half_start"),
                             half_end=self.meta.get("half_end"))


def _predict_echoes(pulses: list[ScheduledEvent], excitations: list[ScheduledEvent],
                    horizon: float) -> list[PredictedEcho]:
    """Mirror-rule echo prediction.

    Each stored excitation carries a refocus label r (initially its emission
    time) and a signed multiset of pulse-mode tags.  A pi pulse at t maps
    r -> 2t - r, negates all tags, then adds its own mode; the excitation
    refocuses as an echo whenever its tags cancel and r falls inside the
    following free interval.
    """
    echoes: list[PredictedEcho] = []
    pulses = sorted(pulses, key=lambda e: e.t)
    for exc in excitations:
        r = exc.t
        tags: dict[str, int] = {}
        n_emitted = 0
        n_prior = sum(1 for p in pulses if p.t < exc.t)
        offset = np.pi / 2.0 if n_prior % 2 == 0 else -np.pi / 2.0
        seen_pulses = [p for p in pulses if p.t > exc.t]
        for j, p in enumerate(seen_pulses):
            r = 2.0 * p.t - r
            tags = {m: -c for m, c in tags.items() if c != 0}
            tags[p.mode] = tags.get(p.mode, 0) + 1
            if any(c != 0 for c in tags.values()):
                continue
            t_next = seen_pulses[j + 1].t if j + 1 < len(seen_pulses) else horizon
            if p.t < r < t_next:
                n_emitted += 1
                echoes.append(PredictedEcho(
                    t=r, mode=p.mode, source=exc.event_id,
                    emission_index=n_emitted, phase_offset=offset))
    return echoes


def compile_program(prog: MemoryProgram, reg: ModeRegistry,
                    t_origin: float | None = None) -> PulseSchedule:
    """Lay the program out on the pulse comb and predict its echo timetable.

    Each block emits its mode's pi pulse at the block's two comb slots with the
    payload centered between them; lone half-block pulses (when declared) sit
    one comb slot before/after the program body.  Raises on unknown modes,
    read-before-write, idling a loaded mode, or any window collision.
    """
    report = validate_program(prog, reg)
    if report.violations:
        raise ProgramError("; ".join(report.violations))

    tau = prog.tau
    spacing = 2.0 * tau
    t_max_w = max(reg[b.mode].duration for b in prog.blocks)
    t0 = t_origin if t_origin is not None else t_max_w / 2.0 + tau / 4.0
    if prog.half_start is not None:
        t0 += spacing

    events: list[ScheduledEvent] = []
    block_meta = []
    n_p = 0
    n_x = 0

    def add_pulse(mode: str, t: float):
        nonlocal n_p
        events.append(ScheduledEvent(
            t=t, kind="pi", mode=mode, params=reg[mode].to_wurst(t),
            event_id=f"p{n_p}"))
        n_p += 1

    if prog.half_start is not None:
        add_pulse(prog.half_start, t0 - spacing)
    for k, blk in enumerate(prog.blocks):
        t_a = t0 + 2 * k * spacing
        t_b = t_a + spacing
        add_pulse(blk.mode, t_a)
        add_pulse(blk.mode, t_b)
        meta_entry = {"mode": blk.mode, "op": blk.op, "excitation": None}
        if blk.op == WRITE:
            exc = replace(blk.excitation, t_center=0.5 * (t_a + t_b))
            eid = f"x{n_x}"
            n_x += 1
            events.append(ScheduledEvent(t=exc.t_center, kind="excitation",
                                         mode=blk.mode, params=exc, event_id=eid))
            meta_entry["excitation"] = eid
        block_meta.append(meta_entry)
    t_body_end = t0 + (2 * len(prog.blocks) - 1) * spacing
    if prog.half_end is not None:
        add_pulse(prog.half_end, t_body_end + spacing)

    pulses = [e for e in events if e.kind == "pi"]
    excs = [e for e in events if e.kind == "excitation"]
    horizon = max(e.t for e in events) + 2.0 * spacing
    echoes = _predict_echoes(pulses, excs, horizon)

    # Mark stale re-releases: in a valid block program each excitation emits
    # once (its READ); any later emission is a ghost released by a rewrite of
    # its mode (it lands in the NEW excitation's write gap).
    marked = [replace(e, ghost=e.emission_index > 1) for e in echoes]

    # Every READ block must release exactly one primary echo centered in its gap.
    for k, blk in enumerate(prog.blocks):
        if blk.op != READ:
            continue
        mid = t0 + 2 * k * spacing + 0.5 * spacing
        prim = [e for e in marked if not e.ghost and abs(e.t - mid) < tau]
        if len(prim) != 1:
            raise ProgramError(
                f"READ block {k} ({blk.mode}) expects exactly one primary echo "
                f"in its gap, predicted {len(prim)}")

    meta = {"blocks": block_meta, "half_start": prog.half_start,
            "half_end": prog.half_end, "clock_period_s": prog.clock_period,
            "comb_spacing_s": spacing}
    return PulseSchedule(tau=tau, events=tuple(events),
                         predicted_echoes=tuple(marked), meta=meta)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_program(prog: MemoryProgram, reg: ModeRegistry) -> ValidationReport:
    """Report-only structural validation; empty violations iff compile_program
    will succeed."""
    rep = ValidationReport()
    written: dict[str, bool] = {}
    for name in ([prog.half_start] if prog.half_start else []) + \
            ([prog.half_end] if prog.half_end else []):
        if name not in reg:
            rep.violations.append(f"half-block mode {name!r} not registered")
    for k, blk in enumerate(prog.blocks):
        if blk.mode not in reg:
            rep.violations.append(f"block {k}: unknown mode {blk.mode!r}")
            continue
        mode = reg[blk.mode]
        gap = 2.0 * prog.tau - mode.duration
        if gap <= 0:
            rep.violations.append(
                f"block {k}: pulses of mode {blk.mode!r} overlap "
                f"(duration {mode.duration:.3g} s >= comb spacing {2*prog.tau:.3g} s)")
        if blk.op == WRITE:
            if written.get(blk.mode):
                rep.violations.append(
                    f"block {k}: mode {blk.mode!r} written twice without a read")
            if blk.excitation is not None and blk.excitation.duration > gap:
                rep.violations.append(
                    f"block {k}: excitation ({blk.excitation.duration:.3g} s) "
                    f"does not fit the {gap:.3g} s gap")
            if written.get(blk.mode) is not None and not written.get(blk.mode):
                rep.warnings.append(
                    f"block {k}: mode {blk.mode!r} rewritten after a read; the "
                    f"stale excitation will re-release as a ghost echo")
            written[blk.mode] = True
        elif blk.op == READ:
            if not written.get(blk.mode):
                rep.violations.append(
                    f"block {k}: mode {blk.mode!r} read before write")
            written[blk.mode] = False
        else:
            if written.get(blk.mode):
                rep.violations.append(
                    f"block {k}: IDLE on loaded mode {blk.mode!r} would recall "
                    f"its stored excitation")
    # Adjacent-mode pulse windows must clear each other across block boundaries.
    for k in range(len(prog.blocks) - 1):
        a, b = prog.blocks[k], prog.blocks[k + 1]
        if a.mode in reg and b.mode in reg:
            need = (reg[a.mode].duration + reg[b.mode].duration) / 2.0
            if 2.0 * prog.tau <= need:
                rep.violations.append(
                    f"blocks {k},{k+1}: comb spacing {2*prog.tau:.3g} s too small "
                    f"for pulse durations")
    if reg.equivalence is not None:
        names = reg.names()
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                if reg.equivalence(reg[names[i]], reg[names[j]]):
                    rep.violations.append(
                        f"registry: modes {names[i]!r} and {names[j]!r} are "
                        f"equivalent")
    return rep


def build_dd_sequence(kind: str, n: int, tau: float, reg: ModeRegistry,
                      mode_a: str = "A", mode_b: str = "B",
                      excitation: GaussianParams | None = None) -> PulseSchedule:
    """Dynamical-decoupling trains: 'AAAA' = A[AA]_n A (echo after every second
    pulse), 'ABBA' = A[BB]_n A (single echo after the final A)."""
    if n < 0:
        raise ProgramError(f"n must be >= 0, got {n}")
    kind = kind.upper()
    if kind not in ("AAAA", "ABBA"):
        raise ProgramError(f"unknown DD kind {kind!r}")
    inner = mode_a if kind == "AAAA" else mode_b
    mode_names = [mode_a] + [inner] * (2 * n) + [mode_a]
    t_max_w = max(reg[m].duration for m in set(mode_names))
    if excitation is None:
        excitation = GaussianParams(amplitude=1.0, fwhm=2e-6, duration=4e-6)
    t_exc = t_max_w / 2.0 + excitation.duration
    events = [ScheduledEvent(t=t_exc, kind="excitation", mode=None,
                             params=replace(excitation, t_center=t_exc),
                             event_id="x0")]
    for k, m in enumerate(mode_names):
        t = t_exc + tau * (2 * k + 1)
        events.append(ScheduledEvent(t=t, kind="pi", mode=m,
                                     params=reg[m].to_wurst(t), event_id=f"p{k}"))
    horizon = events[-1].t + 4.0 * tau
    echoes = _predict_echoes([e for e in events if e.kind == "pi"],
                             [events[0]], horizon)
    meta = {"kind": kind, "n": n, "modes": [mode_a, inner],
            "refocusing_period_s": 4.0 * tau}
    return PulseSchedule(tau=tau, events=tuple(events),
                         predicted_echoes=tuple(echoes), meta=meta)


def build_fifo(excitations: list[GaussianParams], mode: str, tau: float,
               reg: ModeRegistry, spacing: float | None = None) -> PulseSchedule:
    """First-in first-out register: the excitation train precedes one identical
    pulse pair; echoes return after the second pulse in input order."""
    if not excitations:
        raise ProgramError("need at least one excitation")
    m = reg[mode]
    if spacing is None:
        spacing = 2.0 * max(x.duration for x in excitations)
    train_span = spacing * (len(excitations) - 1)
    if train_span + max(x.duration for x in excitations) > tau:
        raise ProgramError(
            f"excitation train ({train_span:.3g} s plus pulse widths) overflows "
            f"the tau={tau:.3g} s dephasing window")
    t_first = max(x.duration for x in excitations) / 2.0 + spacing / 4.0
    events: list[ScheduledEvent] = []
    for k, x in enumerate(excitations):
        t = t_first + k * spacing
        events.append(ScheduledEvent(t=t, kind="excitation", mode=mode,
                                     params=replace(x, t_center=t),
                                     event_id=f"x{k}"))
    t_last = events[-1].t
    t_p1 = t_last + max(tau - train_span / 2.0, excitations[-1].duration / 2.0
                        + m.duration / 2.0 + tau / 8.0)
    for k, t in enumerate((t_p1, t_p1 + 2.0 * tau)):
        events.append(ScheduledEvent(t=t, kind="pi", mode=mode,
                                     params=m.to_wurst(t), event_id=f"p{k}"))
    horizon = events[-1].t + 2.0 * (t_p1 + 2.0 * tau)
    echoes = _predict_echoes([e for e in events if e.kind == "pi"],
                             [e for e in events if e.kind == "excitation"], horizon)
    order = [e.source for e in sorted(echoes, key=lambda e: e.t)]
    meta = {"kind": "FIFO", "mode": mode, "n_excitations": len(excitations),
            "retrieval_order": order}
    return PulseSchedule(tau=tau, events=tuple(events),
                         predicted_echoes=tuple(echoes), meta=meta)


def build_inversion_study(n_inv: int, tau: float, reg: ModeRegistry,
                          modes: tuple[str, str] = ("A", "B"),
                          excitation: GaussianParams | None = None) -> PulseSchedule:
    """n_inv preparatory pi pulses on alternating modes (so no pre-echo pairing
    forms), then an excitation + identical pulse pair echo block.

    meta carries the prepared state: ground for even n_inv, inverted for odd
    (initial_sz_sign = (-1)^n_inv relative to ground)."""
    if n_inv < 0:
        raise ProgramError(f"n_inv must be >= 0, got {n_inv}")
    mode_a, mode_b = modes
    t_max_w = max(reg[mode_a].duration,
                  reg[mode_b].duration if n_inv > 1 else 0.0)
    t0 = t_max_w / 2.0 + tau / 4.0
    events: list[ScheduledEvent] = []
    for k in range(n_inv):
        mname = mode_a if k % 2 == 0 else mode_b
        t = t0 + 2.0 * tau * k
        events.append(ScheduledEvent(t=t, kind="pi", mode=mname,
                                     params=reg[mname].to_wurst(t),
                                     event_id=f"prep{k}"))
    if excitation is None:
        excitation = GaussianParams(amplitude=1.0, fwhm=2e-6, duration=4e-6)
    t_p1 = t0 + 2.0 * tau * n_inv
    t_exc = t_p1 - tau
    if n_inv == 0:
        t_exc = max(t_exc, excitation.duration / 2.0)
    events.append(ScheduledEvent(t=t_exc, kind="excitation", mode=None,
                                 params=replace(excitation, t_center=t_exc),
                                 event_id="x0"))
    for k, t in enumerate((t_p1, t_p1 + 2.0 * tau)):
        events.append(ScheduledEvent(t=t, kind="pi", mode=mode_a,
                                     params=reg[mode_a].to_wurst(t),
                                     event_id=f"p{k}"))
    horizon = events[-1].t + 4.0 * tau
    echoes = _predict_echoes([e for e in events if e.kind == "pi" and e.t > t_exc],
                             [e for e in events if e.kind == "excitation"], horizon)
    meta = {"kind": "inversion_study", "n_inv": n_inv,
            "prepared_state": "ground" if n_inv % 2 == 0 else "inverted",
            "initial_sz_sign": 1 if n_inv % 2 == 0 else -1}
    return PulseSchedule(tau=tau, events=tuple(events),
                         predicted_echoes=tuple(echoes), meta=meta)


# ---------------------------------------------------------------------------
# Line-oriented program files


def parse_program(text: str) -> tuple[MemoryProgram, str | None]:
    """Parse the textual block format.

    Header lines `key = value` (tau required, registry optional, half_start /
    half_end optional) precede one block per line:
        <mode> WRITE amp=<v> phase=<rad> [fwhm=<s>] [duration=<s>]
        <mode> READ
        <mode> IDLE
    Returns (program, registry_reference).
    """
    from .units import parse_angle, parse_scalar, parse_time

    tau = None
    registry_ref = None
    half_start = None
    half_end = None
    blocks: list[Block] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line and line.split()[0].lower() in (
                "tau", "registry", "half_start", "half_end"):
            key, _, val = line.partition("=")
            key = key.strip().lower()
            val = val.strip()
            if key == "tau":
                tau = parse_time(val, allow_bare=True)
            elif key == "registry":
                registry_ref = val
            elif key == "half_start":
                half_start = val
            else:
                half_end = val
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ProgramError(f"line {ln}: cannot parse {raw!r}")
        mode, op = parts[0], parts[1].upper()
        kv = {}
        for tok in parts[2:]:
            if "=" not in tok:
                raise ProgramError(f"line {ln}: expected key=value, got {tok!r}")
            k, _, v = tok.partition("=")
            kv[k.lower()] = v
        if op == WRITE:
            exc = GaussianParams(
                amplitude=parse_scalar(kv.get("amp", "1.0")),
                fwhm=parse_time(kv.get("fwhm", "2e-6"), allow_bare=True),
                duration=parse_time(kv.get("duration", kv.get("dur", "4e-6")),
                                    allow_bare=True),
                phase=parse_angle(kv.get("phase", "0.0")))
            blocks.append(Block(mode=mode, op=WRITE, excitation=exc))
        elif op in (READ, IDLE):
            blocks.append(Block(mode=mode, op=op))
        else:
            raise ProgramError(f"line {ln}: unknown op {parts[1]!r}")
    if tau is None:
        raise ProgramError("program header is missing tau")
    return (MemoryProgram(tau=tau, blocks=tuple(blocks), half_start=half_start,
                          half_end=half_end), registry_ref)


def format_program(prog: MemoryProgram, registry_ref: str | None = None) -> str:
    lines = [f"tau = {prog.tau!r}"]
    if registry_ref:
        lines.append(f"registry = {registry_ref}")
    if prog.half_start:
        lines.append(f"half_start = {prog.half_start}")
    if prog.half_end:
        lines.append(f"half_end = {prog.half_end}")
    for blk in prog.blocks:
        if blk.op == WRITE:
            x = blk.excitation
            lines.append(f"{blk.mode} WRITE amp={x.amplitude!r} phase={x.phase!r} "
                         f"fwhm={x.fwhm!r} duration={x.duration!r}")
        else:
            lines.append(f"{blk.mode} {blk.op}")
    return "\n".join(lines) + "\n"
