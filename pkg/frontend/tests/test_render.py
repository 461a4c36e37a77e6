"""Renderer tests against small synthetic bundles (no physics packages needed)."""

import json
from pathlib import Path

import numpy as np
import pytest

from chirpmem_figures.render import BundleError, main, render


def write_csv(path: Path, columns: dict, comment: str = ""):
    names = list(columns)
    lines = ([f"# {comment}"] if comment else []) + [",".join(names)]
    n = len(next(iter(columns.values())))
    for i in range(n):
        lines.append(",".join(repr(float(columns[k][i])) for k in names))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, obj):
    path.write_text(json.dumps(obj, sort_keys=True, indent=1))


def make_trace(path, t_end=1e-3, n=400, freq=3e3):
    t = np.linspace(0, t_end, n)
    z = np.exp(1j * 2 * np.pi * freq * t) * np.exp(-t / (t_end / 2))
    write_csv(path, {"t": t, "Re": z.real, "Im": z.imag}, "dt_s=2.5e-06 units=x")


@pytest.fixture
def fifo_bundle(tmp_path):
    b = tmp_path / "fifo"
    b.mkdir()
    make_trace(b / "fifo_output.csv")
    write_json(b / "fifo_echoes.json",
               [{"source": f"x{k}", "t_s": 0.2e-3 + k * 0.1e-3, "found": True,
                 "center_s": 0.2e-3 + k * 0.1e-3, "amplitude": 1.0,
                 "phase_rad": 0.0, "phase_error_rad": 0.001} for k in range(3)])
    write_json(b / "manifest.json", {"figure": "fifo", "files": []})
    return b


@pytest.fixture
def fig4_bundle(tmp_path):
    b = tmp_path / "fig4"
    b.mkdir()
    rates = np.linspace(5e9, 40e9, 30)
    amps = np.linspace(0.8, 1.2, 5)
    rr, aa = np.meshgrid(rates, amps, indexing="ij")
    echo = np.exp(-((rr - 2e10) ** 2) / (2 * (2e9) ** 2))
    write_csv(b / "fig4_sweep.csv", {"chirp_rate": rr.ravel(),
                                     "amplitude": aa.ravel(),
                                     "echo": echo.ravel()})
    write_json(b / "fig4_map.json",
               {"count": 5, "count_both_directions": 10,
                "reference_amplitude": 1.0, "separation_factor": 3.03,
                "gradient_c": 0.15, "width_coeffs": [1e9, 0, 0],
                "cells": [[5e9 + k * 7e9, 5e9 + (k + 1) * 7e9] for k in range(5)],
                "ridges": []})
    write_json(b / "manifest.json", {"figure": "fig4", "files": []})
    return b


class TestRender:
    def test_fifo_renders(self, fifo_bundle, tmp_path):
        out = render(fifo_bundle, "fifo", tmp_path / "fifo.png")
        assert out.exists() and out.stat().st_size > 5000

    def test_fig4_renders_with_count_in_title(self, fig4_bundle, tmp_path):
        out = render(fig4_bundle, "fig4", tmp_path / "fig4.svg")
        assert out.exists()
        assert "5 distinct modes" in out.read_text()

    def test_rerender_pixel_identical(self, fifo_bundle, tmp_path):
        a = render(fifo_bundle, "fifo", tmp_path / "a.png")
        b = render(fifo_bundle, "fifo", tmp_path / "b.png")
        assert a.read_bytes() == b.read_bytes()

    def test_bundle_inputs_not_modified(self, fifo_bundle, tmp_path):
        before = {p.name: p.read_bytes() for p in fifo_bundle.iterdir()}
        render(fifo_bundle, "fifo", tmp_path / "x.png")
        after = {p.name: p.read_bytes() for p in fifo_bundle.iterdir()}
        assert before == after

    def test_empty_trace_errors_without_image(self, fifo_bundle, tmp_path):
        (fifo_bundle / "fifo_output.csv").write_text("t,Re,Im\n")
        out = tmp_path / "x.png"
        with pytest.raises(BundleError, match="empty"):
            render(fifo_bundle, "fifo", out)
        assert not out.exists()

    def test_schema_mismatch_names_column(self, fifo_bundle, tmp_path):
        cols = (fifo_bundle / "fifo_output.csv").read_text().replace("Im", "Qq")
        (fifo_bundle / "fifo_output.csv").write_text(cols)
        with pytest.raises(BundleError, match="'Im'"):
            render(fifo_bundle, "fifo", tmp_path / "x.png")

    def test_missing_file_named(self, fig4_bundle, tmp_path):
        (fig4_bundle / "fig4_map.json").unlink()
        with pytest.raises(BundleError, match="fig4_map.json"):
            render(fig4_bundle, "fig4", tmp_path / "x.png")

    def test_not_a_bundle(self, tmp_path):
        with pytest.raises(BundleError, match="manifest"):
            render(tmp_path, "fifo", tmp_path / "x.png")

    def test_unknown_figure_id(self, fifo_bundle, tmp_path):
        with pytest.raises(BundleError, match="unknown figure"):
            render(fifo_bundle, "fig9", tmp_path / "x.png")


class TestCLI:
    def test_render_command(self, fifo_bundle, tmp_path):
        rc = main(["render", "--bundle", str(fifo_bundle), "--fig", "fifo",
                   "--out", str(tmp_path / "out.png")])
        assert rc == 0
        assert (tmp_path / "out.png").exists()

    def test_error_exit_nonzero(self, tmp_path, capsys):
        rc = main(["render", "--bundle", str(tmp_path), "--fig", "fifo",
                   "--out", str(tmp_path / "out.png")])
        assert rc == 1
        assert "manifest" in capsys.readouterr().err
