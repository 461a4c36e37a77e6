"""Desk-scale simulator and analysis toolkit for a chirped-pulse (WURST)
random-access spin-ensemble memory: pulse synthesis, cavity input-output
filtering, Bloch-ensemble propagation, protocol compilation, echo analysis."""

__version__ = "0.1.0"

from .cavity import (ResonatorParams, SpinCavityCoupling, cavity_filter,
                     cooperativity, dispersive_curves, effective_wurst_duration,
                     fano_transmission, fit_fano, one_way_efficiency)
from .ensemble import (AdiabaticPhase, EnsembleSpec, EnsembleState, KERNEL_BACKEND,
                       SpinEnsemble, adiabatic_phase, emitted_signal, propagate,
                       sample_ensemble, two_pulse_phase)
from .protocol import (Block, MemoryProgram, ModeDef, ModeRegistry, PulseSchedule,
                       build_dd_sequence, build_fifo, build_inversion_study,
                       compile_program, validate_program)
from .waveforms import (GaussianParams, TimeGrid, Waveform, WurstParams,
                        gaussian_waveform, render_timeline, wurst_waveform)

__all__ = [
    "AdiabaticPhase", "Block", "EnsembleSpec", "EnsembleState", "GaussianParams",
    "KERNEL_BACKEND", "MemoryProgram", "ModeDef", "ModeRegistry", "PulseSchedule",
    "ResonatorParams", "SpinCavityCoupling", "SpinEnsemble", "TimeGrid", "Waveform",
    "WurstParams", "adiabatic_phase", "build_dd_sequence", "build_fifo",
    "build_inversion_study", "cavity_filter", "compile_program", "cooperativity",
    "dispersive_curves", "effective_wurst_duration", "emitted_signal",
    "fano_transmission", "fit_fano", "gaussian_waveform", "one_way_efficiency",
    "propagate", "render_timeline", "sample_ensemble", "two_pulse_phase",
    "validate_program", "wurst_waveform",
]
