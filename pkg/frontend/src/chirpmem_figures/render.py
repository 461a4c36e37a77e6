"""Render chirpmem `reproduce` bundles into figure facsimiles.

Consumes only the documented CSV/JSON formats (manifest, trace CSVs with
t/Re/Im columns, echo/argand/map JSON files); no physics is recomputed.
Rendering is read-only and deterministic: repeated renders of the same bundle
are byte-identical (fixed Agg/SVG settings, stripped metadata).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "chirpmem-figures"

FIGURES = ("fig1", "fig2", "fig2e", "fig3", "fig4", "fifo")


class BundleError(RuntimeError):
    """Missing or malformed bundle content; the message names the culprit."""


def read_csv(path: Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    if not path.exists():
        raise BundleError(f"{path.name}: file missing from bundle")
    names = None
    rows = []
    for raw in path.read_text().splitlines():
        if not raw.strip() or raw.startswith("#"):
            continue
        if names is None:
            names = [c.strip() for c in raw.split(",")]
            continue
        rows.append([float(v) for v in raw.split(",")])
    if names is None or not rows:
        raise BundleError(f"{path.name}: empty CSV")
    for col in required:
        if col not in names:
            raise BundleError(f"{path.name}: missing column {col!r} "
                              f"(found {names})")
    data = np.asarray(rows)
    return {n: data[:, k] for k, n in enumerate(names)}


def read_json(path: Path):
    if not path.exists():
        raise BundleError(f"{path.name}: file missing from bundle")
    return json.loads(path.read_text())


def _trace_panel(ax, cols, title, annotations=()):
    t = cols["t"] * 1e3
    ax.plot(t, cols["Re"], lw=0.7, label="I")
    ax.plot(t, cols["Im"], lw=0.7, label="Q")
    for (x, label, color) in annotations:
        ax.axvline(x * 1e3, color=color, ls="--", lw=0.8, alpha=0.8)
        ax.annotate(label, (x * 1e3, ax.get_ylim()[1] * 0.92 or 1.0),
                    xytext=(2, -2), textcoords="offset points",
                    fontsize=7, color=color)
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("quadratures")
    ax.set_title(title, fontsize=9)
    ax.legend(loc="upper right", fontsize=7)


def render_fig1(bundle: Path, fig):
    pol = read_csv(bundle / "fig1_polarization.csv", ("t", "Re", "Im"))
    summary = read_json(bundle / "summary.json")
    texture = read_csv(bundle / "fig1_phase_texture.csv",
                       ("delta", "g0", "phase"))
    axs = fig.subplots(2, 1)
    t_echo = summary["predicted_echo_s"]
    ann = [(t_echo, "echo", "tab:green")]
    _trace_panel(axs[0], pol,
                 f"silenced first echo  (refocus/echo = "
                 f"{summary['silenced_over_echo']:.3f})", ann)
    sc = axs[1].scatter(texture["delta"] / 1e3, texture["g0"],
                        c=texture["phase"], s=2, cmap="twilight",
                        vmin=-np.pi, vmax=np.pi, rasterized=True)
    axs[1].set_xlabel("detuning (kHz)")
    axs[1].set_ylabel("coupling (Hz)")
    axs[1].set_title("imprinted phase at the silenced instant", fontsize=9)
    fig.colorbar(sc, ax=axs[1], label="phase (rad)")


def render_fig2(bundle: Path, fig):
    chi = read_csv(bundle / "fig2b_chi.csv", ("gamma", "chi"))
    trace = read_csv(bundle / "fig2a_trace.csv", ("t", "Re", "Im"))
    abba = read_csv(bundle / "fig2c_trace.csv", ("t", "Re", "Im"))
    echoes = read_json(bundle / "fig2c_echoes.json")
    axs = fig.subplots(3, 1)
    _trace_panel(axs[0], trace, "pair recovery trace")
    axs[1].semilogx(chi["gamma"] / 1e3, chi["chi"], "o-", ms=4)
    axs[1].set_xlabel("spin linewidth (kHz)")
    axs[1].set_ylabel("echo/excitation")
    axs[1].axhline(1.0, color="gray", lw=0.6, ls=":")
    axs[1].set_title("recovery ratio vs linewidth", fontsize=9)
    ann = [(e["t_s"], e["source"], "tab:green") for e in echoes]
    _trace_panel(axs[2], abba, "ABBA random access", ann)


def render_fig2e(bundle: Path, fig):
    sil = read_csv(bundle / "fig2e_silenced.csv", ("t", "amplitude"))
    rep = read_csv(bundle / "fig2e_repeated.csv", ("t", "amplitude"))
    curves = read_csv(bundle / "fig2e_fit_curves.csv",
                      ("t", "silenced_fit", "repeated_fit"))
    fits = read_json(bundle / "fig2e_fits.json")
    ax = fig.subplots()
    ax.plot(sil["t"] * 1e3, sil["amplitude"], "s", ms=4,
            label="single final echo")
    ax.plot(rep["t"] * 1e3, rep["amplitude"], "o", ms=4,
            label="repeated emission")
    ax.plot(curves["t"] * 1e3, curves["silenced_fit"], "-", lw=1)
    ax.plot(curves["t"] * 1e3, curves["repeated_fit"], "--", lw=1)
    ax.set_xlabel("total storage time (ms)")
    ax.set_ylabel("echo amplitude")
    ax.set_title(
        f"decoupling decay: T = {fits['silenced']['t2_s']*1e3:.2f} ms, "
        f"per-emission loss = {fits['repeated_emission']['eta_em']:.2f}",
        fontsize=9)
    ax.legend(fontsize=7)


def render_fig3(bundle: Path, fig):
    out = read_csv(bundle / "fig3_output.csv", ("t", "Re", "Im"))
    argand = read_json(bundle / "fig3_argand.json")
    axs = fig.subplots(2, 1)
    ann = [(a["echo_t_s"], a["source"], "tab:green") for a in argand]
    _trace_panel(axs[0], out, "random-access program output", ann)
    ax = axs[1]
    for a in argand:
        zin = np.exp(1j * (a["input_phase_rad"] + a["predicted_offset_rad"]))
        ax.plot([0, zin.real], [0, zin.imag], "-", color="gray", lw=0.6)
        r = np.hypot(a["rescaled_re"], a["rescaled_im"]) or 1.0
        ax.plot(a["rescaled_re"] / r, a["rescaled_im"] / r, "o", ms=6,
                label=a["source"])
    ax.set_aspect("equal")
    ax.set_xlabel("I")
    ax.set_ylabel("Q")
    ax.set_title("rescaled echo phasors vs expected phases (unit circle)",
                 fontsize=9)
    ax.legend(fontsize=7, loc="upper left")


def render_fig4(bundle: Path, fig):
    sweep = read_csv(bundle / "fig4_sweep.csv",
                     ("chirp_rate", "amplitude", "echo"))
    mm = read_json(bundle / "fig4_map.json")
    rates = np.unique(sweep["chirp_rate"])
    amps = np.unique(sweep["amplitude"])
    echo = sweep["echo"].reshape(rates.size, amps.size)
    ax = fig.subplots()
    pcm = ax.pcolormesh(rates / 1e9, amps, echo.T, shading="auto",
                        cmap="magma", rasterized=True)
    fig.colorbar(pcm, ax=ax, label="AB echo (identical-pair units)")
    for lo, hi in mm["cells"]:
        ax.axvline(lo / 1e9, color="w", lw=0.5, alpha=0.7)
    ax.axhline(mm["reference_amplitude"], color="cyan", lw=0.7, ls=":")
    ax.set_xlabel("chirp rate (MHz/ms)")
    ax.set_ylabel("relative amplitude")
    ax.set_title(f"equivalence map: {mm['count']} distinct modes per "
                 f"direction ({mm['count_both_directions']} total)", fontsize=9)


def render_fifo(bundle: Path, fig):
    out = read_csv(bundle / "fifo_output.csv", ("t", "Re", "Im"))
    echoes = read_json(bundle / "fifo_echoes.json")
    ax = fig.subplots()
    ann = [(e["t_s"], e["source"], "tab:green") for e in echoes]
    _trace_panel(ax, out, "first-in first-out register", ann)


RENDERERS = {
    "fig1": (render_fig1, (6.0, 7.0)),
    "fig2": (render_fig2, (6.0, 9.0)),
    "fig2e": (render_fig2e, (6.0, 4.0)),
    "fig3": (render_fig3, (6.0, 8.0)),
    "fig4": (render_fig4, (6.0, 4.5)),
    "fifo": (render_fifo, (6.0, 3.5)),
}


def render(bundle_dir, figure_id: str, out_path) -> Path:
    """Render one bundle to PNG/SVG; raises BundleError on incomplete input."""
    bundle = Path(bundle_dir)
    if figure_id not in RENDERERS:
        raise BundleError(f"unknown figure id {figure_id!r} "
                          f"(choose from {', '.join(RENDERERS)})")
    if not (bundle / "manifest.json").exists():
        raise BundleError(f"{bundle}: no manifest.json (not a reproduce bundle)")
    fn, size = RENDERERS[figure_id]
    fig = plt.figure(figsize=size, dpi=110)
    try:
        fn(bundle, fig)
        fig.set_layout_engine("tight")
        out = Path(out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        metadata = {"Date": None} if out.suffix == ".svg" else \
            {"Software": None, "CreationDate": None}
        fig.savefig(out, metadata=metadata)
    finally:
        plt.close(fig)
    return Path(out_path)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="chirpmem-figures",
        description="Render chirpmem reproduce bundles to figure images")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one bundle")
    p.add_argument("--bundle", type=Path, required=True,
                   help="reproduce output directory")
    p.add_argument("--fig", required=True, choices=sorted(RENDERERS),
                   help="figure id")
    p.add_argument("--out", type=Path, required=True,
                   help="output image path (.png or .svg)")
    args = ap.parse_args(argv)
    try:
        out = render(args.bundle, args.fig, args.out)
    except (BundleError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
