"""Shot-noise-limited synthetic photon histograms.

Emulates one recorded pulse cycle: a steady transmitted level while the
drive is on, a short linear rise to the flash peak at turn-off, then the
collective decay/beat signal. Each bin is an independent Poisson draw from
its expected count, with a deterministic seeded generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .params import SystemParams, collective_rates, with_enhancement
from .dynamics import intensity_model

__all__ = [
    "Histogram", "ExperimentConfig", "od_to_enhancement", "steady_transmission",
    "synth_histogram", "write_histogram_csv", "read_histogram_csv",
]

_MAX_COUNT = 2**31


@dataclass(frozen=True)
class Histogram:
    bin_width: float           # ns
    t_start: float             # ns, left edge of the first bin
    counts: np.ndarray         # per-bin counts (integers, or floats in noiseless mode)
    steady_counts: float       # normalization reference (incident-pulse steady level)
    od: float
    seed: int
    n_pulses: int = 1

    def __post_init__(self):
        if self.bin_width <= 0:
            raise ValidationError(f"bin_width must be > 0, got {self.bin_width}")
        if self.steady_counts <= 0:
            raise ValidationError(
                f"steady_counts must be > 0, got {self.steady_counts}")
        if np.any(np.asarray(self.counts) < 0):
            raise ValidationError("counts must be non-negative")

    @property
    def times(self) -> np.ndarray:
        """Bin centers [ns]."""
        n = len(self.counts)
        return self.t_start + self.bin_width * (np.arange(n) + 0.5)


@dataclass(frozen=True)
class ExperimentConfig:
    od_list: tuple = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5)
    slope: float = 1.0
    intercept: float = 1.4
    counts_budget: float = 1e4
    duration: float = 120.0    # ns of recorded decay
    flash_scale: float = 1.0   # flash peak / OD proportionality
    bin_width: float = 0.5     # ns
    pre_window: float = 20.0   # ns of steady pulse recorded before turn-off
    rise: float = 0.5          # ns of linear pre-peak transient

    def __post_init__(self):
        for od in self.od_list:
            if not 0.0 < od < 10.0:
                raise ValidationError(f"od entries must be in (0, 10), got {od}")
        if self.duration < 100.0:
            raise ValidationError(f"duration must be >= 100 ns, got {self.duration}")
        if self.counts_budget <= 0 or self.flash_scale <= 0 or self.bin_width <= 0:
            raise ValidationError("counts_budget, flash_scale, bin_width must be > 0")


def od_to_enhancement(od: float, slope: float, intercept: float) -> float:
    """Collective enhancement gamma22_N/gamma22 from the linear OD law."""
    if od <= 0:
        raise ValidationError(f"od must be > 0, got {od}")
    enh = slope * od + intercept
    if enh < 1.0:
        raise ValidationError(
            f"enhancement {enh} < 1 at od={od}: sub-single-atom rate is unphysical")
    return enh


def steady_transmission(od: float) -> float:
    """Steady-state transmission T_s = exp(-OD)."""
    if od < 0:
        raise ValidationError(f"od must be >= 0, got {od}")
    return float(np.exp(-od))


def expected_counts(cfg: ExperimentConfig, sys: SystemParams, od: float) -> tuple:
    """(bin centers, expected counts per bin) for one OD."""
    enh = od_to_enhancement(od, cfg.slope, cfg.intercept)
    rates = collective_rates(with_enhancement(sys, enh))
    n_pre = int(round(cfg.pre_window / cfg.bin_width))
    n_decay = int(round(cfg.duration / cfg.bin_width))
    t = -cfg.pre_window + cfg.bin_width * (np.arange(n_pre + n_decay) + 0.5)

    steady_level = cfg.counts_budget * steady_transmission(od)
    peak = cfg.counts_budget * cfg.flash_scale * od
    mean = np.empty_like(t)
    pulse = t < -cfg.rise
    ramp = (~pulse) & (t < 0.0)
    decay = t >= 0.0
    mean[pulse] = steady_level
    # simple linear transient up to the flash peak; excluded from all fits
    mean[ramp] = steady_level + (peak - steady_level) * (t[ramp] + cfg.rise) / cfg.rise
    mean[decay] = peak * intensity_model(t[decay], rates, sys.omega23, "three-term")
    return t, mean


def synth_histogram(cfg: ExperimentConfig, sys: SystemParams, od: float,
                    seed: int, noiseless: bool = False) -> Histogram:
    """Draw one synthetic histogram. Deterministic in (cfg, sys, od, seed)."""
    t, mean = expected_counts(cfg, sys, od)
    if np.max(mean) > _MAX_COUNT:
        raise ValidationError(
            f"expected counts overflow: max mean {np.max(mean):.3g} > 2^31")
    if noiseless:
        counts = mean
    else:
        rng = np.random.default_rng(seed)
        counts = rng.poisson(mean).astype(np.int64)
    return Histogram(
        bin_width=cfg.bin_width,
        t_start=float(t[0] - 0.5 * cfg.bin_width),
        counts=counts,
        steady_counts=cfg.counts_budget,
        od=od,
        seed=seed,
    )


def write_histogram_csv(hist: Histogram, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# bin_width_ns={hist.bin_width:.17g}\n")
        fh.write(f"# od={hist.od:.17g}\n")
        fh.write(f"# steady_counts={hist.steady_counts:.17g}\n")
        fh.write(f"# seed={hist.seed}\n")
        fh.write("t_ns,counts\n")
        for t, c in zip(hist.times, hist.counts):
            fh.write(f"{t:.17g},{c:.17g}\n")


def read_histogram_csv(path, bin_width: float | None = None,
                       od: float | None = None,
                       steady_counts: float | None = None,
                       seed: int | None = None) -> Histogram:
    """Read a histogram CSV; the comment block is optional if the metadata
    is supplied as arguments."""
    meta = {}
    times, counts = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                continue
            if line.startswith("t_ns"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 't,counts', "
                                      f"got {line!r}")
            try:
                times.append(float(parts[0]))
                counts.append(float(parts[1]))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    if not times:
        raise ValidationError(f"{path}: no data rows")

    def resolve(name, arg, cast):
        if arg is not None:
            return arg
        if name in meta:
            return cast(meta[name])
        raise ValidationError(
            f"{path}: metadata {name!r} missing from file and not supplied")

    bin_width = float(resolve("bin_width_ns", bin_width, float))
    counts_arr = np.asarray(counts)
    if np.allclose(counts_arr, np.round(counts_arr)):
        counts_arr = counts_arr.astype(np.int64)
    return Histogram(
        bin_width=bin_width,
        t_start=times[0] - 0.5 * bin_width,
        counts=counts_arr,
        steady_counts=float(resolve("steady_counts", steady_counts, float)),
        od=float(resolve("od", od, float)),
        seed=int(resolve("seed", seed, lambda s: int(float(s)))),
    )
