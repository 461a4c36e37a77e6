"""Timing comparison of the propagation kernel backends on a standard workload."""

from __future__ import annotations

import time

import numpy as np

from . import ensemble as ens_mod
from .ensemble import (EnsembleSpec, EnsembleState, PropagationOptions,
                       propagate, sample_ensemble)
from .waveforms import TimeGrid, Waveform, WurstParams, wurst_waveform


def _workload(n_spins: int, n_steps: int):
    spec = EnsembleSpec(n_spins=n_spins, distribution="gaussian", gamma=100e3,
                        delta_max=300e3, coupling="log-uniform",
                        g_min=40.0, g_max=80.0)
    ens = sample_ensemble(spec)
    bw = 2e6
    dt = 1.0 / (20.0 * bw)
    duration = n_steps * dt
    p = WurstParams(bandwidth=bw, duration=duration, t_center=duration / 2)
    grid = TimeGrid(0.0, dt, n_steps + 1)
    wf = wurst_waveform(p, grid).scaled(200e3)
    return ens, wf


def run_benchmark(n_spins: int = 4096, n_steps: int = 20000,
                  threads: int = 1) -> list[dict]:
    """Time the RK4 window for each available backend; returns result rows."""
    from .ensemble import _kernel_py
    backends = [("python", _kernel_py)]
    try:
        from .ensemble import _kernel as compiled
        if compiled.BACKEND == "cython":
            backends.insert(0, ("cython", compiled))
    except ImportError:
        pass

    ens, wf = _workload(n_spins, n_steps)
    rows = []
    saved = ens_mod._kernel
    try:
        for name, mod in backends:
            ens_mod._kernel = mod
            state = EnsembleState.ground(ens.n_spins)
            opts = PropagationOptions(record_stride=100, threads=threads,
                                      norm_tol=1e-4)
            t0 = time.perf_counter()
            propagate(state, wf, ens, opts)
            dt = time.perf_counter() - t0
            rows.append({"backend": name, "threads": threads, "seconds": dt,
                         "n_spins": n_spins, "n_steps": n_steps,
                         "spin_steps_per_s": n_spins * n_steps / dt})
    finally:
        ens_mod._kernel = saved
    return rows
