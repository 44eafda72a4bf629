"""Command-line interface: subcommands, exit codes, manifests."""

import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from qbeats.cli import derive_seed, main


SMALL_CONFIG = {
    "experiment": {"od_list": [0.9, 2.1, 4.2], "counts_budget": 1e4},
    "n_seeds": 2,
    "base_seed": 2,
}


def run(argv):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return main(argv)


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_derive_seed_deterministic():
    assert derive_seed(0, 3, 1) == derive_seed(0, 3, 1)
    assert derive_seed(0, 3, 1) != derive_seed(0, 3, 2)
    assert derive_seed(0, 3, 1) != derive_seed(1, 3, 1)


def test_simulate_writes_trace_and_poles(tmp_path, capsys):
    assert run(["simulate", "--out", str(tmp_path), "--t-max", "50",
                "--dt", "0.5"]) == 0
    lines = (tmp_path / "intensity.csv").read_text().splitlines()
    assert lines[0] == "t_ns,intensity_exact,intensity_two_term"
    assert len(lines) == 101
    poles = json.loads((tmp_path / "poles.json").read_text())
    assert poles["mode"] == "exact"
    assert (tmp_path / "run_manifest.json").exists()


def test_simulate_empty_trace(tmp_path):
    assert run(["simulate", "--out", str(tmp_path), "--t-max", "0"]) == 0
    lines = (tmp_path / "intensity.csv").read_text().splitlines()
    assert lines == ["t_ns,intensity_exact,intensity_two_term"]


def test_synth_files_and_determinism(tmp_path):
    cfg = write_config(tmp_path, {"experiment": {"od_list": [0.9, 2.1, 4.2]},
                                  "n_seeds": 1, "base_seed": 7})
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(["synth", "--params", cfg, "--out", str(out1)]) == 0
    assert run(["synth", "--params", cfg, "--out", str(out2)]) == 0
    names = sorted(p.name for p in out1.glob("hist_*.csv"))
    assert names == ["hist_od0.9.csv", "hist_od2.1.csv", "hist_od4.2.csv"]
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_synth_empty_od_list(tmp_path):
    cfg = write_config(tmp_path, {"experiment": {"od_list": []}})
    out = tmp_path / "empty"
    assert run(["synth", "--params", cfg, "--out", str(out)]) == 0
    assert list(out.glob("hist_*.csv")) == []
    assert (out / "run_manifest.json").exists()


def test_fit_and_fft_commands(tmp_path):
    cfg = write_config(tmp_path, {"experiment": {"od_list": [4.2]},
                                  "base_seed": 1, "n_seeds": 1})
    out = tmp_path / "h"
    assert run(["synth", "--params", cfg, "--out", str(out)]) == 0
    hist = str(out / "hist_od4.2.csv")
    fit_dir = tmp_path / "fit"
    assert run(["fit", hist, "--out", str(fit_dir)]) == 0
    fit = json.loads((fit_dir / "fit.json").read_text())
    assert fit["gamma22N_rad_per_ns"] / 0.038327430373795476 == pytest.approx(
        5.6, abs=0.3)
    assert (fit_dir / "spectrum.csv").exists()
    fft_dir = tmp_path / "fft"
    assert run(["fft", hist, "--out", str(fft_dir)]) == 0
    assert (fft_dir / "spectrum.csv").exists()
    assert not (fft_dir / "fit.json").exists()


def test_fit_window_outside_data_exit_1(tmp_path):
    cfg = write_config(tmp_path, {"experiment": {"od_list": [4.2]}})
    out = tmp_path / "h"
    run(["synth", "--params", cfg, "--out", str(out)])
    assert run(["fit", str(out / "hist_od4.2.csv"), "--window", "500", "600",
                "--out", str(tmp_path / "w")]) == 1


def test_fit_malformed_csv_exit_1(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t_ns,counts\n0.25,oops\n")
    assert run(["fit", str(bad), "--out", str(tmp_path / "o")]) == 1


def test_reproduce_with_check_and_manifest_rerun(tmp_path):
    cfg = write_config(tmp_path, SMALL_CONFIG)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert run(["reproduce", "--params", cfg, "--out", str(out1),
                "--check"]) == 0
    for name in ("summary.csv", "enhancement_line.json", "phase_curve.json",
                 "run_manifest.json"):
        assert (out1 / name).exists()
    # re-running from the emitted manifest reproduces every output
    assert run(["reproduce", "--params", str(out1 / "run_manifest.json"),
                "--out", str(out2)]) == 0
    for path in sorted(out1.iterdir()):
        if path.name == "run_manifest.json":
            continue
        assert path.read_bytes() == (out2 / path.name).read_bytes()


def test_reproduce_noiseless_check(tmp_path):
    cfg = write_config(tmp_path, {"experiment": {"od_list": [0.9, 2.1, 4.2]}})
    assert run(["reproduce", "--params", cfg, "--out", str(tmp_path / "nl"),
                "--noiseless", "--check"]) == 0
    line = json.loads((tmp_path / "nl" / "enhancement_line.json").read_text())
    assert line["slope"] == pytest.approx(1.0, abs=1e-3)
    assert line["intercept"] == pytest.approx(1.4, abs=1e-3)


def test_reproduce_sabotaged_config_exit_3(tmp_path):
    cfg = write_config(tmp_path, {
        "experiment": {"od_list": [0.9, 2.1, 4.2], "intercept": 5.0},
        "n_seeds": 1,
    })
    assert run(["reproduce", "--params", cfg, "--out", str(tmp_path / "s"),
                "--check"]) == 3


def test_sweep_no_meta_fits(tmp_path):
    cfg = write_config(tmp_path, {"experiment": {"od_list": [2.1]},
                                  "n_seeds": 1})
    out = tmp_path / "sw"
    assert run(["sweep", "--params", cfg, "--out", str(out)]) == 0
    assert (out / "summary.csv").exists()
    assert not (out / "enhancement_line.json").exists()


def test_unknown_config_key_exit_1(tmp_path):
    cfg = write_config(tmp_path, {"experimnet": {}})
    assert run(["synth", "--params", cfg, "--out", str(tmp_path / "x")]) == 1


def test_missing_params_file_exit_1(tmp_path):
    assert run(["synth", "--params", str(tmp_path / "nope.json"),
                "--out", str(tmp_path / "x")]) == 1
