"""Command-line front end and end-to-end reproduction pipeline.

Subcommands:
  simulate    analytic beat traces (exact and two-term models) plus poles
  synth       synthetic shot-noise photon histograms, one CSV per OD
  fit         decay fit of one histogram -> fit JSON + residual spectrum CSV
  fft         residual spectrum CSV only
  sweep       histogram + fit sweep over the OD list (no meta-fits)
  reproduce   full sweep plus enhancement-line and phase-curve meta-fits

Exit codes: 0 success, 1 validation/input error, 2 numeric failure,
3 acceptance-check failure (``reproduce --check``).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import sys as _sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FitError, IntegrationError, SteadyStateError, ValidationError
from .params import (SystemParams, collective_rates, paper_system,
                     params_from_dict, with_enhancement)
from .dynamics import (beat_amplitude, intensity_exact, intensity_model,
                       poles, write_poles_json)
from .synth import (ExperimentConfig, synth_histogram, read_histogram_csv,
                    write_histogram_csv)
from .analysis import (beat_summary, fit_decay, fit_enhancement_line,
                       fit_phase_curve, subtract_and_fft, write_fit_json,
                       write_metafit_json, write_spectrum_csv,
                       write_summary_csv)

__all__ = ["main", "load_run_config", "derive_seed", "CheckFailure"]


class CheckFailure(RuntimeError):
    """An acceptance tolerance failed in ``--check`` mode."""


# ---------------------------------------------------------------------------
# configuration

_EXPERIMENT_KEYS = {
    "od_list", "slope", "intercept", "counts_budget", "duration_ns",
    "flash_scale", "bin_width_ns", "pre_window_ns", "rise_ns",
}
_CONFIG_KEYS = {
    "system", "experiment", "n_seeds", "base_seed",
    "fit_window_ns", "fft_window_ns", "zero_pad_factor",
}

# check bands for `reproduce --check`: recovered enhancement law and the
# fraction of beat-amplitude points on the theory line
_CHECK_SLOPE = (1.0, 0.15)
_CHECK_INTERCEPT = (1.4, 0.5)
_CHECK_IB_FRACTION = 0.90
_CHECK_SLOPE_NOISELESS = (1.0, 1e-3)
_CHECK_IB_REL_NOISELESS = 5e-3


class RunConfig:
    """Resolved settings for synth/sweep/reproduce runs."""

    def __init__(self, system: SystemParams, experiment: ExperimentConfig,
                 n_seeds: int = 5, base_seed: int = 0,
                 fit_window=(0.0, 40.0), fft_window=(0.0, 120.0),
                 zero_pad_factor: int = 8):
        self.system = system
        self.experiment = experiment
        self.n_seeds = int(n_seeds)
        self.base_seed = int(base_seed)
        self.fit_window = tuple(float(v) for v in fit_window)
        self.fft_window = tuple(float(v) for v in fft_window)
        self.zero_pad_factor = int(zero_pad_factor)
        if self.n_seeds < 1:
            raise ValidationError(f"n_seeds must be >= 1, got {n_seeds}")

    def to_dict(self) -> dict:
        exp = self.experiment
        return {
            "system": {
                "gamma22_MHz": self.system.gamma22 / (2e-3 * math.pi),
                "branching": self.system.branching,
                "omega23_MHz": self.system.omega23 / (2e-3 * math.pi),
                "n_atoms": self.system.n_atoms,
                "f_geom": self.system.f_geom,
            },
            "experiment": {
                "od_list": list(exp.od_list),
                "slope": exp.slope,
                "intercept": exp.intercept,
                "counts_budget": exp.counts_budget,
                "duration_ns": exp.duration,
                "flash_scale": exp.flash_scale,
                "bin_width_ns": exp.bin_width,
                "pre_window_ns": exp.pre_window,
                "rise_ns": exp.rise,
            },
            "n_seeds": self.n_seeds,
            "base_seed": self.base_seed,
            "fit_window_ns": list(self.fit_window),
            "fft_window_ns": list(self.fft_window),
            "zero_pad_factor": self.zero_pad_factor,
        }


def _experiment_from_dict(data: dict) -> ExperimentConfig:
    unknown = set(data) - _EXPERIMENT_KEYS
    if unknown:
        raise ValidationError(f"unknown experiment keys: {sorted(unknown)}")
    kw = {}
    rename = {"duration_ns": "duration", "bin_width_ns": "bin_width",
              "pre_window_ns": "pre_window", "rise_ns": "rise"}
    for key, value in data.items():
        name = rename.get(key, key)
        kw[name] = tuple(value) if name == "od_list" else value
    return ExperimentConfig(**kw)


def run_config_from_dict(data: dict) -> RunConfig:
    if "config" in data:            # a RunManifest: unwrap its config snapshot
        data = data["config"]
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    system, _ = params_from_dict(data.get("system", {}))
    experiment = _experiment_from_dict(data.get("experiment", {}))
    kw = {}
    for key in ("n_seeds", "base_seed", "zero_pad_factor"):
        if key in data:
            kw[key] = data[key]
    if "fit_window_ns" in data:
        kw["fit_window"] = data["fit_window_ns"]
    if "fft_window_ns" in data:
        kw["fft_window"] = data["fft_window_ns"]
    return RunConfig(system, experiment, **kw)


def load_run_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    return run_config_from_dict(data)


def _load_system(path) -> SystemParams:
    if path is None:
        return paper_system()
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if "system" in data or "config" in data:
        return run_config_from_dict(data).system
    system, _ = params_from_dict(data)
    return system


def derive_seed(base_seed: int, od_index: int, rep: int) -> int:
    """Deterministic per-(OD, repetition) stream seed."""
    ss = np.random.SeedSequence(entropy=int(base_seed),
                                spawn_key=(int(od_index), int(rep)))
    return int(ss.generate_state(1)[0])


# ---------------------------------------------------------------------------
# manifest

def _write_manifest(out_dir: Path, command: str, cfg_dict: dict,
                    inputs: list, outputs: list, seeds: list,
                    started: float) -> Path:
    manifest = {
        "command": command,
        "config": cfg_dict,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seeds": seeds,
        "version": __version__,
        "duration_s": time.monotonic() - started,
    }
    path = out_dir / "run_manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return path


def _outdir(args) -> Path:
    out = Path(args.out if args.out else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _od_tag(od: float) -> str:
    return f"{od:g}"


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args) -> int:
    started = time.monotonic()
    system = _load_system(args.params)
    if args.t_max < 0:
        raise ValidationError(f"--t-max must be >= 0, got {args.t_max}")
    if args.dt <= 0:
        raise ValidationError(f"--dt must be > 0, got {args.dt}")
    out = _outdir(args)
    rates = collective_rates(system)
    t = np.arange(0.0, args.t_max, args.dt)
    exact = intensity_exact(t, rates, system.omega23)
    model = intensity_model(t, rates, system.omega23, "two-term")
    trace_path = out / "intensity.csv"
    with open(trace_path, "w") as fh:
        fh.write("t_ns,intensity_exact,intensity_two_term\n")
        for ti, ei, mi in zip(t, exact, model):
            fh.write(f"{ti:.17g},{ei:.17g},{mi:.17g}\n")
    poles_path = out / "poles.json"
    write_poles_json(poles(rates, system.omega23, mode="exact"), poles_path)
    cfg = {"system": args.params, "t_max_ns": args.t_max, "dt_ns": args.dt}
    _write_manifest(out, "simulate", cfg, [args.params] if args.params else [],
                    [trace_path, poles_path], [], started)
    print(f"simulate: {t.size} samples, "
          f"gamma22N = {rates.gamma22_N:.4g} rad/ns -> {trace_path}")
    return 0


def _synth_all(cfg: RunConfig, noiseless: bool):
    """(od, rep, seed, histogram) for every OD x repetition, ordered."""
    jobs = [(i, od, j, derive_seed(cfg.base_seed, i, j))
            for i, od in enumerate(cfg.experiment.od_list)
            for j in range(cfg.n_seeds)]

    def work(job):
        i, od, j, seed = job
        return (od, j, seed,
                synth_histogram(cfg.experiment, cfg.system, od, seed,
                                noiseless=noiseless))

    with concurrent.futures.ThreadPoolExecutor() as pool:
        results = list(pool.map(work, jobs))
    return results


def cmd_synth(args) -> int:
    started = time.monotonic()
    cfg = load_run_config(args.params) if args.params else RunConfig(
        paper_system(), ExperimentConfig(), n_seeds=1)
    if args.seed is not None:
        cfg.base_seed = args.seed
    if args.params is None:
        cfg.n_seeds = 1
    out = _outdir(args)
    results = _synth_all(cfg, args.noiseless)
    outputs, seeds = [], []
    for od, rep, seed, hist in results:
        suffix = f"_rep{rep}" if cfg.n_seeds > 1 else ""
        path = out / f"hist_od{_od_tag(od)}{suffix}.csv"
        write_histogram_csv(hist, path)
        outputs.append(path)
        seeds.append(seed)
    _write_manifest(out, "synth", cfg.to_dict(),
                    [args.params] if args.params else [], outputs, seeds,
                    started)
    print(f"synth: wrote {len(outputs)} histograms to {out}")
    return 0


def _fit_one(args, write_fit: bool) -> int:
    started = time.monotonic()
    system = _load_system(args.params)
    hist = read_histogram_csv(args.histogram)
    window = tuple(args.window) if args.window else (0.0, 40.0)
    fit = fit_decay(hist, system, window=window, variant=args.variant)
    fft_window = tuple(args.fft_window) if args.fft_window else None
    spectrum = subtract_and_fft(hist, fit, zero_pad_factor=args.zero_pad,
                                window=fft_window)
    out = _outdir(args)
    outputs = []
    if write_fit:
        fit_path = out / "fit.json"
        write_fit_json(fit, fit_path)
        outputs.append(fit_path)
    spec_path = out / "spectrum.csv"
    write_spectrum_csv(spectrum, spec_path)
    outputs.append(spec_path)
    cfg = {"histogram": args.histogram, "window_ns": list(window),
           "variant": args.variant, "zero_pad_factor": args.zero_pad}
    command = "fit" if write_fit else "fft"
    _write_manifest(out, command, cfg, [args.histogram], outputs, [hist.seed],
                    started)
    enh = fit.gamma22N / system.gamma22
    print(f"{command}: od={hist.od:g} enhancement={enh:.4g} ib={fit.ib:.4g} "
          f"phi={fit.phi:.4g} peak={spectrum.peak_frequency():.4g} MHz")
    return 0


def cmd_fit(args) -> int:
    return _fit_one(args, write_fit=True)


def cmd_fft(args) -> int:
    return _fit_one(args, write_fit=False)


def _run_sweep(args, meta_fits: bool) -> int:
    started = time.monotonic()
    cfg = load_run_config(args.params) if args.params else RunConfig(
        paper_system(), ExperimentConfig())
    if args.seed is not None:
        cfg.base_seed = args.seed
    noiseless = args.noiseless
    if noiseless:
        cfg.n_seeds = 1
    out = _outdir(args)
    results = _synth_all(cfg, noiseless)
    # the matched (three-term) model keeps the noiseless loop exact; the
    # two-term model is the default analysis applied to noisy data
    variant = "three-term" if noiseless else "two-term"

    def work(item):
        od, rep, seed, hist = item
        fit = fit_decay(hist, cfg.system, window=cfg.fit_window,
                        variant=variant)
        return od, rep, seed, hist, fit

    with concurrent.futures.ThreadPoolExecutor() as pool:
        fitted = list(pool.map(work, results))

    outputs, seeds, fits = [], [], []
    for od, rep, seed, hist, fit in fitted:
        suffix = f"_rep{rep}" if cfg.n_seeds > 1 else ""
        tag = f"od{_od_tag(od)}{suffix}"
        hist_path = out / f"hist_{tag}.csv"
        write_histogram_csv(hist, hist_path)
        fit_path = out / f"fit_{tag}.json"
        write_fit_json(fit, fit_path)
        outputs += [hist_path, fit_path]
        seeds.append(seed)
        fits.append(fit)

    rows = beat_summary(fits, cfg.system)
    summary_path = out / "summary.csv"
    write_summary_csv(rows, summary_path)
    outputs.append(summary_path)

    command = "reproduce" if meta_fits else "sweep"
    line = phase = None
    if meta_fits:
        enh_points = [(f.od, f.gamma22N / cfg.system.gamma22,
                       max(f.sigma[2] / cfg.system.gamma22, 1e-12))
                      for f in fits]
        line = fit_enhancement_line(enh_points)
        line_path = out / "enhancement_line.json"
        write_metafit_json(line, line_path)
        phase_points = [(f.gamma22N / cfg.system.gamma22, f.phi,
                         max(f.sigma[3], 1e-12)) for f in fits]
        phase = fit_phase_curve(phase_points)
        phase_path = out / "phase_curve.json"
        write_metafit_json(phase, phase_path)
        outputs += [line_path, phase_path]

    _write_manifest(out, command, cfg.to_dict(),
                    [args.params] if args.params else [], outputs, seeds,
                    started)

    if meta_fits:
        print(f"{command}: slope={line.params[0]:.4g} "
              f"intercept={line.params[1]:.4g} eta={phase.params[0]:.4g} "
              f"phi0={phase.params[1]:.4g} ({len(fits)} fits) -> {out}")
    else:
        print(f"{command}: {len(fits)} fits -> {out}")

    if meta_fits and args.check:
        _run_checks(cfg, fits, line, noiseless)
        print("check: all tolerances satisfied")
    return 0


def _run_checks(cfg: RunConfig, fits, line, noiseless: bool) -> None:
    slope, intercept = line.params
    if noiseless:
        target, tol = _CHECK_SLOPE_NOISELESS
        if abs(slope - target) > tol:
            raise CheckFailure(
                f"noiseless slope {slope:.6g} outside {target} +- {tol}")
        for fit in fits:
            rates = collective_rates(
                with_enhancement(cfg.system, fit.gamma22N / cfg.system.gamma22))
            theory = beat_amplitude(rates, cfg.system.omega23)
            if abs(fit.ib - theory) > _CHECK_IB_REL_NOISELESS * theory:
                raise CheckFailure(
                    f"noiseless ib {fit.ib:.6g} deviates from theory "
                    f"{theory:.6g} by more than 0.5% (od={fit.od:g})")
        return
    target, tol = _CHECK_SLOPE
    if abs(slope - target) > tol:
        raise CheckFailure(f"slope {slope:.4g} outside {target} +- {tol}")
    target, tol = _CHECK_INTERCEPT
    if abs(intercept - target) > tol:
        raise CheckFailure(f"intercept {intercept:.4g} outside {target} +- {tol}")
    n_ok = 0
    for fit in fits:
        enh = fit.gamma22N / cfg.system.gamma22
        rates = collective_rates(with_enhancement(cfg.system, max(enh, 1.0)))
        theory = beat_amplitude(rates, cfg.system.omega23)
        theory_sigma = (fit.sigma[2] / cfg.system.gamma22) \
            * cfg.system.branching * cfg.system.gamma22 / cfg.system.omega23
        combined = math.hypot(fit.sigma[1], theory_sigma)
        if abs(fit.ib - theory) <= 2.0 * combined:
            n_ok += 1
    fraction = n_ok / len(fits)
    if fraction < _CHECK_IB_FRACTION:
        raise CheckFailure(
            f"only {n_ok}/{len(fits)} beat amplitudes on the theory line "
            f"within 2 combined sigma (need >= {_CHECK_IB_FRACTION:.0%})")


def cmd_sweep(args) -> int:
    return _run_sweep(args, meta_fits=False)


def cmd_reproduce(args) -> int:
    return _run_sweep(args, meta_fits=True)


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--params", metavar="JSON", default=None,
                   help="parameter/config JSON file (or a previous manifest)")
    p.add_argument("--seed", type=int, default=None, metavar="U64",
                   help="base seed override")
    p.add_argument("--out", default=None, metavar="DIR",
                   help="output directory (default: current directory)")
    p.add_argument("--check", action="store_true",
                   help="verify acceptance tolerances; exit 3 on failure")
    p.add_argument("--noiseless", action="store_true",
                   help="disable shot noise (expectation values only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbeats",
        description="collective quantum-beat simulation and analysis")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="analytic intensity traces and poles")
    p.add_argument("--t-max", type=float, default=200.0, metavar="NS")
    p.add_argument("--dt", type=float, default=0.1, metavar="NS")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synth", help="synthetic photon histograms")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    for name, func in (("fit", cmd_fit), ("fft", cmd_fft)):
        p = sub.add_parser(name, help=f"{name} one histogram CSV")
        p.add_argument("histogram", help="histogram CSV file")
        p.add_argument("--window", type=float, nargs=2, default=None,
                       metavar=("START", "END"), help="fit window [ns]")
        p.add_argument("--fft-window", type=float, nargs=2, default=None,
                       metavar=("START", "END"),
                       help="residual window for the FFT [ns]")
        p.add_argument("--variant", choices=("two-term", "three-term"),
                       default="two-term")
        p.add_argument("--zero-pad", type=int, default=8)
        _add_common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="OD sweep: histograms + fits only")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce", help="full pipeline with meta-fits")
    _add_common(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError, IsADirectoryError,
            PermissionError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    except (IntegrationError, SteadyStateError, FitError) as exc:
        print(f"numeric failure: {exc}", file=_sys.stderr)
        return 2
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=_sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
