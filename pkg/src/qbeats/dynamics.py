"""Post-turn-off single-excitation dynamics: poles, amplitudes, intensity.

The shared excitation starts in the upper excited level; amplitudes are
returned scaled to c2(0) = 1 (the 1/sqrt(N) and N^2 prefactors cancel in
the normalized intensity).
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .params import CollectiveRates, rad_per_ns_to_mhz

__all__ = [
    "PoleSet", "IntensityTrace", "compute_delta", "poles",
    "amplitudes_exact", "amplitudes_approx", "integrate_amplitudes",
    "intensity_exact", "intensity_model", "beat_amplitude", "beat_phase",
    "poleset_to_json", "write_intensity_csv",
]


@dataclass(frozen=True)
class PoleSet:
    delta: complex            # [rad/ns]
    s2_plus: complex
    s2_minus: complex
    s3_plus: complex
    s3_minus: complex
    mode: str                 # "exact" | "expanded"
    warning: str | None = None


@dataclass(frozen=True)
class IntensityTrace:
    times: np.ndarray         # [ns]
    intensity: np.ndarray     # I(t)/I0
    model: str                # "exact" | "three-term" | "two-term"


def compute_delta(rates: CollectiveRates, omega23: float) -> complex:
    """delta = sqrt(omega23^2 - gamma_avg^2 + 2i omega23 gamma_d).

    Principal branch, with the sign fixed so Im(delta) carries the sign of
    gamma_d (branch flips would swap the pole labels).
    """
    if omega23 <= 0:
        raise ValidationError(f"omega23 must be > 0, got {omega23}")
    arg = omega23**2 - rates.gamma_avg_N**2 + 2j * omega23 * rates.gamma_d_N
    delta = cmath.sqrt(arg)
    if delta.imag * rates.gamma_d_N < 0:
        delta = -delta
    return delta


def poles(rates: CollectiveRates, omega23: float, mode: str = "exact") -> PoleSet:
    """Poles of the two Laplace-domain amplitude denominators."""
    delta = compute_delta(rates, omega23)
    g_avg, g_d = rates.gamma_avg_N, rates.gamma_d_N
    warning = None
    if mode == "exact":
        s2p = -0.5 * g_avg + 0.5j * omega23 + 0.5j * delta
        s2m = -0.5 * g_avg + 0.5j * omega23 - 0.5j * delta
        s3p = -0.5 * g_avg - 0.5j * omega23 + 0.5j * delta
        s3m = -0.5 * g_avg - 0.5j * omega23 - 0.5j * delta
    elif mode == "expanded":
        if rates.gamma22_N >= omega23 / 5.0:
            warning = ("expanded poles requested outside the well-separated "
                       f"regime (gamma22_N = {rates.gamma22_N:.4g} >= "
                       f"omega23/5 = {omega23 / 5.0:.4g} rad/ns)")
        g22, g33, g23 = rates.gamma22_N, rates.gamma33_N, rates.gamma23_N
        shift = omega23 * (g23 / (2.0 * omega23)) ** 2   # second-order level shift
        re_slow = -0.5 * g33 * (1.0 + g_d * g22 / (2.0 * omega23**2))
        re_fast = -0.5 * g22 * (1.0 - g_d * g33 / (2.0 * omega23**2))
        s2p = re_slow + 1j * (omega23 - shift)
        s2m = re_fast + 1j * shift
        s3p = re_slow - 1j * shift
        s3m = re_fast - 1j * (omega23 - shift)
    else:
        raise ValidationError(f"mode must be 'exact' or 'expanded', got {mode!r}")
    return PoleSet(delta=delta, s2_plus=s2p, s2_minus=s2m,
                   s3_plus=s3p, s3_minus=s3m, mode=mode, warning=warning)


def amplitudes_exact(t, rates: CollectiveRates, omega23: float):
    """Closed-form amplitudes (c2, c3), scaled to c2(0) = 1, c3(0) = 0."""
    t = np.asarray(t, dtype=float)
    delta = compute_delta(rates, omega23)
    g_avg, g_d, g23 = rates.gamma_avg_N, rates.gamma_d_N, rates.gamma23_N
    env = np.exp(-0.5 * g_avg * t)
    ep = np.exp(0.5j * delta * t)
    em = np.exp(-0.5j * delta * t)
    c2 = (env * np.exp(0.5j * omega23 * t)
          * ((-1j * g_d - omega23 + delta) * ep
             + (1j * g_d + omega23 + delta) * em) / (2.0 * delta))
    c3 = (1j * g23 / (2.0 * delta)) * env * np.exp(-0.5j * omega23 * t) * (ep - em)
    return c2, c3


def amplitudes_approx(t, rates: CollectiveRates, omega23: float):
    """Second-order-expanded amplitudes: a fast branch decaying at gamma22_N
    and a slow branch at gamma33_N rotating at +-omega23.

    At t = 0 the expanded c2 deviates from 1 by the second-order weight;
    this truncation artifact is inherited from the expansion.
    """
    t = np.asarray(t, dtype=float)
    delta = compute_delta(rates, omega23)
    g22, g33, g23 = rates.gamma22_N, rates.gamma33_N, rates.gamma23_N
    eps2 = (g23 / (2.0 * omega23)) ** 2
    fast = np.exp(-0.5 * g22 * t)
    slow = np.exp(-0.5 * g33 * t)
    c2 = fast - eps2 * (delta.conjugate() / delta) * slow * np.exp(1j * omega23 * t)
    c3 = (-1j * g23 / (2.0 * delta)) * (fast * np.exp(-1j * omega23 * t) - slow)
    return c2, c3


def integrate_amplitudes(t_span, dt: float, rates: CollectiveRates,
                         omega23: float):
    """Fixed-step 4th-order integration of the coupled amplitude equations
    with the explicit e^{+-i omega23 t} coupling phases.

    Independent of the closed-form route; serves as its oracle.
    Returns (times, c2, c3) arrays.
    """
    if dt <= 0 or dt > 0.01 / omega23:
        raise ValidationError(
            f"dt={dt} ns must be in (0, {0.01 / omega23:.4g}] ns to resolve "
            "the splitting frequency")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise ValidationError(f"t_span must be increasing, got {t_span}")
    n = max(int(round((t1 - t0) / dt)), 0)
    g22h = 0.5 * rates.gamma22_N
    g33h = 0.5 * rates.gamma33_N
    g23h = 0.5 * rates.gamma23_N

    def rhs(t, c2, c3):
        phase = cmath.exp(1j * omega23 * t)
        return (-g22h * c2 - g23h * phase * c3,
                -g33h * c3 - g23h * c2 / phase)

    times = t0 + dt * np.arange(n + 1)
    c2s = np.empty(n + 1, dtype=complex)
    c3s = np.empty(n + 1, dtype=complex)
    c2, c3 = 1.0 + 0.0j, 0.0 + 0.0j
    c2s[0], c3s[0] = c2, c3
    for i in range(n):
        t = t0 + i * dt
        a1, b1 = rhs(t, c2, c3)
        a2, b2 = rhs(t + 0.5 * dt, c2 + 0.5 * dt * a1, c3 + 0.5 * dt * b1)
        a3, b3 = rhs(t + 0.5 * dt, c2 + 0.5 * dt * a2, c3 + 0.5 * dt * b2)
        a4, b4 = rhs(t + dt, c2 + dt * a3, c3 + dt * b3)
        c2 = c2 + (dt / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
        c3 = c3 + (dt / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
        c2s[i + 1], c3s[i + 1] = c2, c3
    return times, c2s, c3s


def intensity_exact(t, rates: CollectiveRates, omega23: float,
                    gamma23_over_gamma22: float | None = None):
    """Normalized forward intensity from the exact amplitudes:
    |e^{-i omega23 t} c2 + (gamma23/gamma22) c3|^2.

    The ratio defaults to the collective one (equal to the single-atom
    ratio, since the (1 + N f) factor cancels).
    """
    if gamma23_over_gamma22 is None:
        gamma23_over_gamma22 = rates.gamma23_N / rates.gamma22_N
    c2, c3 = amplitudes_exact(t, rates, omega23)
    t = np.asarray(t, dtype=float)
    field = np.exp(-1j * omega23 * t) * c2 + gamma23_over_gamma22 * c3
    return np.abs(field) ** 2


def intensity_model(t, rates: CollectiveRates, omega23: float,
                    variant: str = "three-term"):
    """Analytic normalized intensity.

    two-term: exp(-g22 t) + Ib exp(-g_avg t) sin(omega23 t + phi)
    three-term adds the small (g33/2w)^2 exp(-g33 t) middle term.
    """
    t = np.asarray(t, dtype=float)
    g22, g33 = rates.gamma22_N, rates.gamma33_N
    g_avg = rates.gamma_avg_N
    ib = beat_amplitude(rates, omega23)
    phi = beat_phase(rates, omega23)
    out = np.exp(-g22 * t) + ib * np.exp(-g_avg * t) * np.sin(omega23 * t + phi)
    if variant == "three-term":
        out = out + (g33 / (2.0 * omega23)) ** 2 * np.exp(-g33 * t)
    elif variant != "two-term":
        raise ValidationError(
            f"variant must be 'two-term' or 'three-term', got {variant!r}")
    return out


def beat_amplitude(rates: CollectiveRates, omega23: float) -> float:
    """Relative beat intensity Ib = gamma33_N / omega23."""
    return rates.gamma33_N / omega23


def beat_phase(rates: CollectiveRates, omega23: float) -> float:
    """Beat phase phi = arctan(gamma22_N / omega23), in (-pi/2, pi/2)."""
    return math.atan(rates.gamma22_N / omega23)


def _complex_json(z: complex) -> dict:
    return {
        "re_rad_per_ns": z.real, "im_rad_per_ns": z.imag,
        "re_MHz": rad_per_ns_to_mhz(z.real), "im_MHz": rad_per_ns_to_mhz(z.imag),
    }


def poleset_to_json(ps: PoleSet) -> dict:
    out = {
        "mode": ps.mode,
        "delta": _complex_json(ps.delta),
        "s2_plus": _complex_json(ps.s2_plus),
        "s2_minus": _complex_json(ps.s2_minus),
        "s3_plus": _complex_json(ps.s3_plus),
        "s3_minus": _complex_json(ps.s3_minus),
    }
    if ps.warning is not None:
        out["warning"] = ps.warning
    return out


def write_intensity_csv(trace: IntensityTrace, path) -> None:
    with open(path, "w") as fh:
        fh.write("t_ns,intensity_normalized\n")
        for t, v in zip(trace.times, trace.intensity):
            fh.write(f"{t:.17g},{v:.17g}\n")


def write_poles_json(ps: PoleSet, path) -> None:
    with open(path, "w") as fh:
        json.dump(poleset_to_json(ps), fh, indent=2)
        fh.write("\n")
