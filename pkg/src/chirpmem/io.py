"""Deterministic CSV/JSON writers, the binary trace dump, and run manifests.

All writers produce byte-identical output for identical inputs: fixed float
formatting, sorted JSON keys, no timestamps.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.12g"

BINARY_MAGIC = b"CMTR"
BINARY_VERSION = 1


class IOError_(RuntimeError):
    pass


def _fmt(x: float) -> str:
    return FLOAT_FMT % float(x)


def write_csv(path, columns: dict[str, np.ndarray], header_comment: str = ""):
    """Column-oriented CSV with an optional leading '# ...' comment line."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    n = arrays[0].shape[0]
    for name, a in zip(names, arrays):
        if a.shape != (n,):
            raise IOError_(f"column {name!r} has shape {a.shape}, expected ({n},)")
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append(",".join(names))
    for i in range(n):
        lines.append(",".join(_fmt(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path) -> tuple[dict[str, np.ndarray], str]:
    """Inverse of write_csv; returns (columns, comment)."""
    comment = ""
    rows = []
    names = None
    for raw in Path(path).read_text().splitlines():
        if not raw.strip():
            continue
        if raw.startswith("#"):
            comment = raw[1:].strip()
            continue
        if names is None:
            names = [c.strip() for c in raw.split(",")]
            continue
        rows.append([float(v) for v in raw.split(",")])
    if names is None:
        raise IOError_(f"{path}: empty CSV")
    data = np.asarray(rows, dtype=float).reshape(len(rows), len(names))
    return {n: data[:, k] for k, n in enumerate(names)}, comment


def write_waveform_csv(path, wf):
    """Columns t, I, Q with the grid step and units in the header row."""
    write_csv(path, {"t": wf.times(), "I": wf.i, "Q": wf.q},
              header_comment=f"dt_s={_fmt(wf.grid.dt)} units=Hz")


def write_trace_csv(path, times, trace, units: str = "arb"):
    """Columns t, Re, Im for a complex time trace."""
    trace = np.asarray(trace)
    dt = float(times[1] - times[0]) if len(times) > 1 else 0.0
    write_csv(path, {"t": np.asarray(times), "Re": trace.real, "Im": trace.imag},
              header_comment=f"dt_s={_fmt(dt)} units={units}")


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1,
                                     allow_nan=False) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def dump_trace_binary(path, times, trace, n_spins: int = 0):
    """Compact little-endian dump.

    Layout: magic 'CMTR' (4 bytes), u32 version, u64 n_spins, u64 n_steps,
    then float64 payload: times[n_steps], Re[n_steps], Im[n_steps].
    """
    times = np.asarray(times, dtype="<f8")
    trace = np.asarray(trace, dtype=complex)
    n = times.shape[0]
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(np.uint32(BINARY_VERSION).tobytes())
        fh.write(np.uint64(n_spins).tobytes())
        fh.write(np.uint64(n).tobytes())
        fh.write(times.tobytes())
        fh.write(trace.real.astype("<f8").tobytes())
        fh.write(trace.imag.astype("<f8").tobytes())


def load_trace_binary(path):
    raw = Path(path).read_bytes()
    if raw[:4] != BINARY_MAGIC:
        raise IOError_(f"{path}: bad magic {raw[:4]!r}")
    version = int(np.frombuffer(raw, "<u4", count=1, offset=4)[0])
    if version != BINARY_VERSION:
        raise IOError_(f"{path}: unsupported version {version}")
    n_spins = int(np.frombuffer(raw, "<u8", count=1, offset=8)[0])
    n = int(np.frombuffer(raw, "<u8", count=1, offset=16)[0])
    off = 24
    t = np.frombuffer(raw, "<f8", count=n, offset=off).copy()
    re = np.frombuffer(raw, "<f8", count=n, offset=off + 8 * n).copy()
    im = np.frombuffer(raw, "<f8", count=n, offset=off + 16 * n).copy()
    return t, re + 1j * im, n_spins


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(out_dir, config: dict, files: list[str], extra: dict | None = None):
    """Run manifest: config hash, package/library versions, sorted file list.
    Refuses to overwrite an existing manifest (run directories are append-only).
    """
    import scipy

    import chirpmem

    out = Path(out_dir)
    path = out / "manifest.json"
    if path.exists():
        raise IOError_(f"{path} already exists; run directories are append-only")
    manifest = {
        "config_hash": config_hash(config),
        "versions": {"chirpmem": chirpmem.__version__,
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "files": sorted(files),
    }
    if extra:
        manifest.update(extra)
    write_json(path, manifest)
    return manifest
