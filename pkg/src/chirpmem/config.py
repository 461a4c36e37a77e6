"""Experiment configuration: a single YAML tree with explicit unit suffixes on
every dimensioned value, validated with path-qualified errors."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .cavity import ResonatorParams
from .ensemble import EnsembleSpec
from .protocol import MemoryProgram, ModeDef, ModeRegistry, parse_program
from .simulate import SimOptions
from .units import (UnitError, parse_angle, parse_chirp_rate, parse_frequency,
                    parse_scalar, parse_time)


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending path and field."""


def _get(tree: dict, path: str, default=None, required: bool = False):
    node = tree
    parts = path.split(".")
    for p in parts:
        if not isinstance(node, dict) or p not in node:
            if required:
                raise ConfigError(f"{path}: missing required field")
            return default
        node = node[p]
    return node


def _parse(tree: dict, path: str, parser, default=None, required: bool = False):
    raw = _get(tree, path, default=None, required=required)
    if raw is None:
        return default
    try:
        return parser(raw)
    except UnitError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_config(path) -> dict:
    try:
        tree = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if tree is None:
        return {}
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return tree


def merge_config(base: dict, override: dict) -> dict:
    """Recursive dict merge; override wins, lists/scalars replace."""
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge_config(out[k], v)
        else:
            out[k] = v
    return out


def resonator_from_config(tree: dict, prefix: str = "resonator") -> ResonatorParams | None:
    node = _get(tree, prefix)
    if node is None:
        return None
    try:
        return ResonatorParams(
            f0=_parse(node, "f0", parse_frequency, required=True),
            kappa=_parse(node, "kappa", parse_frequency, required=True),
            kappa_c=_parse(node, "kappa_c", parse_frequency, required=True),
            fano_scale=_parse(node, "fano_scale", parse_scalar, 1.0),
            fano_q=_parse(node, "fano_q", parse_scalar, 0.0),
            bg_slope=_parse(node, "bg_slope", parse_scalar, 0.0),
            bg_offset=_parse(node, "bg_offset", parse_scalar, 0.0))
    except (ConfigError, ValueError) as exc:
        raise ConfigError(f"{prefix}: {exc}") from exc


def ensemble_from_config(tree: dict, prefix: str = "ensemble",
                         seed: int | None = None) -> EnsembleSpec:
    node = _get(tree, prefix, required=True)
    try:
        return EnsembleSpec(
            n_spins=int(_parse(node, "n_spins", parse_scalar, required=True)),
            distribution=_get(node, "distribution", "gaussian"),
            gamma=_parse(node, "gamma", parse_frequency, required=True),
            delta_max=_parse(node, "delta_max", parse_frequency, required=True),
            coupling=_get(node, "coupling", "log-tapered"),
            g_min=_parse(node, "g_min", parse_frequency, 40.0),
            g_max=_parse(node, "g_max", parse_frequency, 80.0),
            seed=int(seed if seed is not None
                     else _parse(node, "seed", parse_scalar, 0)),
            sampling=_get(node, "sampling", "stratified"))
    except (ConfigError, ValueError) as exc:
        raise ConfigError(f"{prefix}: {exc}") from exc


def mode_from_config(name: str, node: dict, prefix: str) -> ModeDef:
    try:
        if "chirp_rate" in node:
            rate = _parse(node, "chirp_rate", parse_chirp_rate, required=True)
            duration = _parse(node, "duration", parse_time, required=True)
            bandwidth = abs(rate) * duration
            sign = 1 if rate > 0 else -1
        else:
            bandwidth = _parse(node, "bandwidth", parse_frequency, required=True)
            duration = _parse(node, "duration", parse_time, required=True)
            sign = int(_parse(node, "chirp_sign", parse_scalar, 1))
        return ModeDef(name=name, bandwidth=bandwidth, duration=duration,
                       amplitude=_parse(node, "amplitude", parse_scalar, 1.0),
                       order=int(_parse(node, "order", parse_scalar, 20)),
                       phase=_parse(node, "phase", parse_angle, 0.0),
                       chirp_sign=sign)
    except (ConfigError, ValueError) as exc:
        raise ConfigError(f"{prefix}.{name}: {exc}") from exc


def registry_from_config(tree: dict, prefix: str = "modes") -> ModeRegistry:
    modes = _get(tree, prefix, required=True)
    opts = _get(tree, "registry", {}) or {}
    sim = _get(tree, "sim", {}) or {}
    reg = ModeRegistry(
        omega_ref=_parse(sim, "omega_ref", parse_frequency, 0.0),
        q_min=_parse(opts, "q_min", parse_scalar, 0.0) or 0.0,
        min_bandwidth=_parse(opts, "min_bandwidth", parse_frequency, 0.0),
        max_bandwidth=_parse(opts, "max_bandwidth", parse_frequency, 0.0))
    if reg.q_min <= 0:
        reg.q_min = 0.0
        reg.omega_ref = 0.0
    for name in sorted(modes):
        reg.register(mode_from_config(name, modes[name] or {}, prefix))
    return reg


def sim_options_from_config(tree: dict, prefix: str = "sim",
                            threads: int | None = None,
                            dt_record: float | None = None) -> SimOptions:
    node = _get(tree, prefix, {}) or {}
    try:
        return SimOptions(
            omega_ref=_parse(node, "omega_ref", parse_frequency, 250e3),
            g_ref=_parse(node, "g_ref", parse_frequency, 0.0),
            dt_record=(dt_record if dt_record is not None
                       else _parse(node, "dt_record", parse_time, 1e-7)),
            dt_max=_parse(node, "dt_max", parse_time, 0.0),
            theta_max=_parse(node, "theta_max", parse_scalar, 0.02),
            cavity_filtered=bool(_get(node, "cavity_filtered", True)),
            chunk_size=int(_parse(node, "chunk_size", parse_scalar, 2048)),
            threads=int(threads if threads is not None
                        else _parse(node, "threads", parse_scalar, 1)),
            norm_tol=_parse(node, "norm_tol", parse_scalar, 1e-6))
    except (ConfigError, ValueError) as exc:
        raise ConfigError(f"{prefix}: {exc}") from exc


def program_from_config(tree: dict, base_dir: Path | None = None
                        ) -> tuple[MemoryProgram, str | None] | None:
    """The `program` key holds inline program text or a file path."""
    raw = _get(tree, "program")
    if raw is None:
        return None
    if isinstance(raw, str) and "\n" not in raw and "=" not in raw:
        p = Path(raw)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        if not p.exists():
            raise ConfigError(f"program: file {p} does not exist")
        raw = p.read_text()
    try:
        return parse_program(raw)
    except Exception as exc:
        raise ConfigError(f"program: {exc}") from exc
