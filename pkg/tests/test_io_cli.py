import json
from pathlib import Path

import numpy as np
import pytest

from chirpmem import io
from chirpmem.cli import main
from chirpmem.waveforms import TimeGrid, Waveform


class TestIO:
    def test_csv_round_trip(self, tmp_path):
        cols = {"t": np.linspace(0, 1e-3, 50),
                "Re": np.sin(np.arange(50.0)), "Im": np.cos(np.arange(50.0))}
        path = tmp_path / "x.csv"
        io.write_csv(path, cols, header_comment="units=test")
        back, comment = io.read_csv(path)
        assert comment == "units=test"
        for k in cols:
            np.testing.assert_allclose(back[k], cols[k], rtol=1e-11)

    def test_waveform_csv_header(self, tmp_path):
        g = TimeGrid(0.0, 1e-8, 64)
        wf = Waveform(g, np.exp(1j * np.arange(64.0)))
        io.write_waveform_csv(tmp_path / "w.csv", wf)
        text = (tmp_path / "w.csv").read_text().splitlines()
        assert text[0].startswith("# dt_s=1e-08")
        assert "units=Hz" in text[0]
        assert text[1] == "t,I,Q"

    def test_binary_round_trip(self, tmp_path):
        t = np.arange(100) * 1e-7
        z = np.exp(1j * 0.1 * np.arange(100))
        io.dump_trace_binary(tmp_path / "x.bin", t, z, n_spins=321)
        t2, z2, n = io.load_trace_binary(tmp_path / "x.bin")
        assert n == 321
        np.testing.assert_array_equal(t, t2)
        np.testing.assert_array_equal(z, z2)

    def test_binary_magic_check(self, tmp_path):
        (tmp_path / "bad.bin").write_bytes(b"NOPE" + b"\0" * 32)
        with pytest.raises(io.IOError_, match="magic"):
            io.load_trace_binary(tmp_path / "bad.bin")

    def test_manifest_append_only(self, tmp_path):
        io.write_manifest(tmp_path, {"a": 1}, ["x.csv"])
        with pytest.raises(io.IOError_, match="append-only"):
            io.write_manifest(tmp_path, {"a": 1}, ["x.csv"])

    def test_manifest_contents(self, tmp_path):
        m = io.write_manifest(tmp_path, {"a": 1}, ["b.csv", "a.csv"])
        assert m["files"] == ["a.csv", "b.csv"]
        assert len(m["config_hash"]) == 64
        assert "numpy" in m["versions"]

    def test_deterministic_json(self, tmp_path):
        io.write_json(tmp_path / "a.json", {"z": 1.5, "a": [1, 2]})
        io.write_json(tmp_path / "b.json", {"a": [1, 2], "z": 1.5})
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


CONFIG = """
resonator: {f0: 7.09395 GHz, kappa: 400 kHz, kappa_c: 300 kHz}
ensemble:
  n_spins: 400
  distribution: gaussian
  gamma: 100 kHz
  delta_max: 200 kHz
  coupling: log-tapered
  g_min: 34.6 Hz
  g_max: 104 Hz
  seed: 3
modes:
  A: {bandwidth: 1.5 MHz, duration: 60 us}
  B: {bandwidth: 0.8 MHz, duration: 60 us, chirp_sign: -1}
sim: {omega_ref: 250 kHz, dt_record: 0.1 us, cavity_filtered: false}
program: |
  tau = 150 us
  A WRITE amp=0.05 phase=0.3
  B WRITE amp=0.05 phase=1.2
  B READ
  A READ
"""


class TestCLI:
    def test_simulate_command(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(CONFIG)
        out = tmp_path / "run"
        rc = main(["simulate", "--config", str(cfg), "--out", str(out),
                   "--threads", "2"])
        assert rc == 0
        echoes = json.loads((out / "echoes.json").read_text())
        assert len(echoes) == 2
        assert all(e["found"] for e in echoes)
        sched = json.loads((out / "schedule.json").read_text())
        assert len(sched["events"]) == 10
        assert (out / "polarization.csv").exists()
        assert (out / "manifest.json").exists()
        # schedule timeline exported in the waveform CSV format
        cols, comment = io.read_csv(out / "drive_timeline.csv")
        assert set(cols) == {"t", "I", "Q"} and "dt_s=" in comment

    def test_simulate_empty_program(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(CONFIG.split("program:")[0] + 'program: "tau = 150 us"\n')
        out = tmp_path / "empty"
        rc = main(["simulate", "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        assert json.loads((out / "echoes.json").read_text()) == []
        cols, _ = io.read_csv(out / "polarization.csv")
        assert np.all(cols["Re"] == 0) and np.all(cols["Im"] == 0)

    def test_simulate_rejects_bad_program(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(CONFIG.replace("A WRITE amp=0.05 phase=0.3", "A READ"))
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "read before write" in capsys.readouterr().err

    def test_config_error_names_field(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(CONFIG.replace("gamma: 100 kHz", "gamma: 100"))
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert rc == 2
        err = capsys.readouterr().err
        assert "gamma" in err and "suffix" in err

    def test_synth_command(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(CONFIG)
        out = tmp_path / "synth"
        assert main(["synth", "--config", str(cfg), "--out", str(out)]) == 0
        cols, comment = io.read_csv(out / "waveform_A.csv")
        assert set(cols) == {"t", "I", "Q"}
        assert "dt_s=" in comment

    def test_fit_decay_command(self, tmp_path):
        from chirpmem.analysis import silenced_decay_model
        t = np.linspace(0.1e-3, 6e-3, 30)
        io.write_csv(tmp_path / "d.csv",
                     {"t": t, "amplitude": silenced_decay_model(t, 1.0, 2e-3, 0.02)})
        out = tmp_path / "fit"
        rc = main(["fit", "decay", str(tmp_path / "d.csv"), "--out", str(out)])
        assert rc == 0
        fit = json.loads((out / "fit_decay.json").read_text())
        assert fit["t2_s"] == pytest.approx(2e-3, rel=1e-2)

    def test_fit_fano_command(self, tmp_path):
        from chirpmem.cavity import ResonatorParams, fano_transmission
        true = ResonatorParams(f0=7.09395e9, kappa=385e3, kappa_c=300e3,
                               fano_scale=5e4, fano_q=1.2, bg_offset=0.3)
        f = np.linspace(true.f0 - 3e6, true.f0 + 3e6, 301)
        io.write_csv(tmp_path / "s21.csv", {"f": f,
                                            "S21": fano_transmission(f, true)})
        out = tmp_path / "fit"
        rc = main(["fit", "fano", str(tmp_path / "s21.csv"), "--out", str(out)])
        assert rc == 0
        fit = json.loads((out / "fit_fano.json").read_text())
        assert fit["f0_hz"] == pytest.approx(true.f0, abs=40.0)
        assert fit["kappa_hz"] == pytest.approx(385e3, rel=1e-3)

    def test_unknown_subcommand_exits_nonzero(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_program_file_reference(self, tmp_path):
        prog = tmp_path / "prog.txt"
        prog.write_text("tau = 150 us\nA WRITE amp=0.05 phase=0.0\nA READ\n")
        cfg_text = CONFIG.split("program:")[0] + f"program: {prog.name}\n"
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text(cfg_text)
        out = tmp_path / "run2"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        echoes = json.loads((out / "echoes.json").read_text())
        assert len(echoes) == 1
