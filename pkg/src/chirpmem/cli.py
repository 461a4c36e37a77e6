"""Command-line entry point: parse config, dispatch experiments, write outputs.

Subcommands: synth (waveform CSV), simulate (program -> traces + echoes),
sweep (AB-echo maps), fit (decay / lineshape / mode-map fits on CSV input),
reproduce (canned per-figure bundles), bench (kernel backend comparison).
Runs are deterministic for a fixed config and seed; outputs are append-only
per run directory with a manifest.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import (ConfigError, ensemble_from_config, load_config, merge_config,
                     program_from_config, registry_from_config,
                     resonator_from_config, sim_options_from_config)
from .ensemble import KERNEL_BACKEND, sample_ensemble
from .protocol import ProgramError, compile_program, validate_program
from .reproduce import REPRODUCERS
from .simulate import SimulationError, measure_echoes, run_schedule, scan_spurious
from .units import UnitError, parse_chirp_rate, parse_frequency, parse_time
from .waveforms import (TimeGrid, WaveformError, WurstParams, default_dt,
                        gaussian_waveform, wurst_waveform)


def _common(parser):
    parser.add_argument("--config", type=Path, default=None,
                        help="YAML config file (merged over built-in defaults)")
    parser.add_argument("--out", type=Path, default=Path("out"),
                        help="output directory (append-only per run)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the ensemble sampling seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for per-spin propagation")
    parser.add_argument("--decimation", type=float, default=None, metavar="DT",
                        help="recording step in seconds (overrides config)")
    parser.add_argument("-v", "--verbose", action="store_true")


def _load(args) -> dict:
    return load_config(args.config) if args.config else {}


def cmd_synth(args) -> int:
    cfg = _load(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    reg = registry_from_config(cfg)
    files = []
    for name in reg.names():
        mode = reg[name]
        p = mode.to_wurst(mode.duration / 2.0)
        dt = default_dt(bandwidth=p.bandwidth)
        grid = TimeGrid(0.0, dt, int(np.ceil(p.duration / dt)) + 1)
        path = out / f"waveform_{name}.csv"
        io.write_waveform_csv(path, wurst_waveform(p, grid))
        files.append(path.name)
    io.write_manifest(out, cfg, files, extra={"command": "synth"})
    print(f"wrote {len(files)} waveform(s) to {out}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    parsed = program_from_config(cfg, base_dir=args.config.parent
                                 if args.config else None)
    if parsed is None:
        raise ConfigError("program: missing (inline text or file path required)")
    prog, _ = parsed
    if not prog.blocks:
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        t = np.arange(16) * 1e-7
        io.write_trace_csv(out / "polarization.csv", t,
                           np.zeros(16, dtype=complex), units="coherence")
        io.write_json(out / "echoes.json", [])
        io.write_manifest(out, cfg, ["polarization.csv", "echoes.json"],
                          extra={"command": "simulate", "empty_program": True})
        print("empty program: zero trace, no echoes")
        return 0
    reg = registry_from_config(cfg)
    report = validate_program(prog, reg)
    if not report.ok:
        for v in report.violations:
            print(f"violation: {v}", file=sys.stderr)
        return 2
    sched = compile_program(prog, reg)
    r = resonator_from_config(cfg)
    ens = sample_ensemble(ensemble_from_config(cfg, seed=args.seed))
    opts = sim_options_from_config(cfg, threads=args.threads,
                                   dt_record=args.decimation)
    res = run_schedule(sched, ens, r, opts)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    io.write_trace_csv(out / "polarization.csv", res.times, res.polarization,
                       units="coherence")
    files = ["polarization.csv", "schedule.json", "echoes.json"]
    if res.output is not None:
        io.write_trace_csv(out / "output.csv", res.times, res.output, units="field")
        files.append("output.csv")
    io.write_json(out / "schedule.json", sched.to_json_dict())
    from .simulate import schedule_timeline
    try:
        io.write_waveform_csv(out / "drive_timeline.csv",
                              schedule_timeline(sched, omega_ref=opts.omega_ref,
                                                max_samples=4_000_000))
        files.append("drive_timeline.csv")
    except SimulationError as exc:
        if args.verbose:
            print(f"skipping drive timeline: {exc}", file=sys.stderr)
    if sched.predicted_echoes:
        pairs = measure_echoes(res, sched)
        scan = scan_spurious(res, sched)
        rows = [{"source": pe.source, "mode": pe.mode, "t_s": pe.t,
                 "found": er.found, "amplitude": er.amplitude,
                 "phase_rad": er.phase, "center_s": er.center,
                 "width_s": er.width, "ghost": pe.ghost}
                for pe, er in pairs]
        io.write_json(out / "echoes.json", rows)
        io.write_json(out / "spurious.json",
                      {"peak": scan.peak, "floor_median": scan.floor_median,
                       "floor_dephased": scan.floor_dephased})
        files.append("spurious.json")
    else:
        io.write_json(out / "echoes.json", [])
    io.write_manifest(out, cfg, files, extra={"command": "simulate",
                                              "norm_drift": res.norm_drift})
    print(f"simulated {len(sched.events)} events, "
          f"{len(sched.predicted_echoes)} predicted echo(es); drift "
          f"{res.norm_drift:.2e}; outputs in {out}")
    return 0


def cmd_sweep(args) -> int:
    from .simulate import ab_sweep

    cfg = _load(args)
    node = cfg.get("sweep")
    if not node:
        raise ConfigError("sweep: missing section (reference, rate/amplitude axes)")
    r = resonator_from_config(cfg)
    ens = sample_ensemble(ensemble_from_config(cfg, seed=args.seed))
    om = parse_frequency(cfg.get("sim", {}).get("omega_ref", "250 kHz"),
                         allow_bare=True)
    ref_node = node.get("reference") or {}
    ref = WurstParams(
        bandwidth=parse_frequency(ref_node["bandwidth"], allow_bare=True),
        duration=parse_time(ref_node["duration"], allow_bare=True),
        a_peak=float(ref_node.get("amplitude", 1.0)))
    rates = np.linspace(parse_chirp_rate(node["rate_min"], allow_bare=True),
                        parse_chirp_rate(node["rate_max"], allow_bare=True),
                        int(node.get("n_rates", 61)))
    amps = np.linspace(float(node.get("amp_min", 1.0)),
                       float(node.get("amp_max", 1.0)),
                       int(node.get("n_amps", 1)))
    sweep = ab_sweep(ref, rates, amps, ens, omega_ref=om, resonator=r)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    rr, aa = np.meshgrid(rates, amps, indexing="ij")
    io.write_csv(out / "sweep.csv", {"chirp_rate": rr.ravel(),
                                     "amplitude": aa.ravel(),
                                     "echo": sweep.echo.ravel()})
    io.write_manifest(out, cfg, ["sweep.csv"], extra={"command": "sweep"})
    print(f"swept {rates.size} x {amps.size} pulses; outputs in {out}")
    return 0


def cmd_fit(args) -> int:
    from .analysis import fit_emission_decay, fit_silenced_decay, mode_map
    from .analysis import ModeSweep
    from .cavity import fit_fano

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    cols, _ = io.read_csv(args.input)
    if args.kind == "fano":
        res = fit_fano(cols["f"], cols[args.column or "S21"])
        p = res.params
        result = {"f0_hz": p.f0, "kappa_hz": p.kappa, "fano_scale": p.fano_scale,
                  "fano_q": p.fano_q, "bg_slope": p.bg_slope,
                  "bg_offset": p.bg_offset, "residual_norm": res.residual_norm,
                  "degenerate": res.degenerate}
    elif args.kind == "decay":
        fit = fit_silenced_decay(cols["t"], cols[args.column or "amplitude"],
                                 model=args.model)
        result = {"model": fit.model, "t2_s": fit.t2, "a0": fit.a0,
                  "background": fit.background, "stretch": fit.stretch,
                  "residual_norm": fit.residual_norm}
    elif args.kind == "emission":
        if args.t2 is None:
            raise ConfigError("emission fit needs --t2 from a silenced-decay fit")
        fit = fit_emission_decay(cols["t"], cols[args.column or "amplitude"],
                                 cols["n_echoes"], t2=args.t2)
        result = {"model": fit.model, "eta_em": fit.eta_em, "t2_s": fit.t2,
                  "a0": fit.a0, "residual_norm": fit.residual_norm}
    else:  # mode-map
        rates = np.unique(cols["chirp_rate"])
        amps = np.unique(cols["amplitude"])
        echo = cols["echo"].reshape(rates.size, amps.size)
        mm = mode_map(ModeSweep(rates, amps, echo),
                      reference_amplitude=args.reference_amplitude)
        result = {"count": mm.count,
                  "count_both_directions": mm.count_both_directions,
                  "gradient_c": mm.gradient_c,
                  "cells": [[lo, hi] for lo, hi in mm.cells]}
    io.write_json(out / f"fit_{args.kind}.json", result)
    print(f"wrote {out / f'fit_{args.kind}.json'}")
    return 0


def cmd_reproduce(args) -> int:
    overrides = _load(args)
    fn = REPRODUCERS[args.figure]
    summary = fn(args.out, config=overrides, threads=args.threads,
                 seed=args.seed, dt_record=args.decimation)
    for key in sorted(summary):
        print(f"{key}: {summary[key]}")
    return 0


def cmd_bench(args) -> int:
    from .benchmark import run_benchmark

    rows = run_benchmark(n_spins=args.n_spins, n_steps=args.n_steps,
                         threads=args.threads)
    for row in rows:
        print(f"{row['backend']:>8} threads={row['threads']}: "
              f"{row['seconds']:.3f} s  ({row['spin_steps_per_s']:.3g} spin-steps/s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="chirpmem",
        description="Chirped-pulse random-access spin-memory simulator "
                    f"(kernel backend: {KERNEL_BACKEND})")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize registered mode waveforms to CSV")
    _common(p)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("simulate", help="compile and simulate a memory program")
    _common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="AB-echo equivalence sweep")
    _common(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("fit", help="fit decay/lineshape/mode-map data from CSV")
    _common(p)
    p.add_argument("kind", choices=["fano", "decay", "emission", "mode-map"])
    p.add_argument("input", type=Path, help="input CSV")
    p.add_argument("--column", default=None, help="y-column name")
    p.add_argument("--model", default="silenced",
                   choices=["silenced", "single", "stretched"])
    p.add_argument("--t2", type=float, default=None, help="T2 in seconds")
    p.add_argument("--reference-amplitude", type=float, default=1.0)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("reproduce", help="run a canned figure reproduction")
    _common(p)
    p.add_argument("figure", choices=sorted(REPRODUCERS))
    p.set_defaults(fn=cmd_reproduce)

    p = sub.add_parser("bench", help="compare kernel backends")
    p.add_argument("--n-spins", type=int, default=4096)
    p.add_argument("--n-steps", type=int, default=20000)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, UnitError, ProgramError, WaveformError,
            SimulationError, io.IOError_) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
