"""Fitting and spectral analysis of modulated decay curves.

The chain mirrors the measurement pipeline: weighted Levenberg-Marquardt
fit of the two-term beat model to each normalized histogram, FFT of the
decay-subtracted residual, then meta-fits of the enhancement-vs-OD line
and the arctan phase curve across the OD sweep.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import FitError, ValidationError
from .params import SystemParams, collective_rates, with_enhancement, rad_per_ns_to_mhz
from .dynamics import beat_amplitude, beat_phase
from .synth import Histogram

__all__ = [
    "LMResult", "FitResult", "Spectrum", "MetaFit",
    "lm_fit", "decay_model", "fit_decay", "subtract_and_fft",
    "fit_enhancement_line", "fit_phase_curve", "beat_summary",
]


@dataclass(frozen=True)
class LMResult:
    theta: np.ndarray
    covariance: np.ndarray
    sigma: np.ndarray
    residual_norm: float
    n_iterations: int
    converged: bool
    message: str = ""


@dataclass(frozen=True)
class FitResult:
    """Parameters of the two-term decay model fitted to one histogram."""

    i0: float
    ib: float
    gamma22N: float            # rad/ns
    phi: float                 # rad
    covariance: np.ndarray     # 4x4, order (i0, ib, gamma22N, phi)
    sigma: np.ndarray
    residual_norm: float
    n_iterations: int
    converged: bool
    omega23: float             # rad/ns, fixed during the fit
    branching: float           # gamma33/gamma22, fixed during the fit
    window: tuple = (0.0, 120.0)
    od: float | None = None

    @property
    def gamma_avg_N(self) -> float:
        return 0.5 * (1.0 + self.branching) * self.gamma22N


@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray          # MHz, non-negative ascending
    magnitude: np.ndarray
    resolution: float          # MHz
    zero_pad_factor: int

    def peak_frequency(self) -> float:
        return float(self.freqs[int(np.argmax(self.magnitude))])


@dataclass(frozen=True)
class MetaFit:
    kind: str                  # "linear" | "arctan"
    params: np.ndarray         # (slope, intercept) or (eta, phi0)
    sigma: np.ndarray
    covariance: np.ndarray
    converged: bool = True
    degenerate: bool = False   # True when dof <= 0 (CIs are infinite)

    def confidence_band(self, x) -> np.ndarray:
        """One-sigma band half-width of the fitted curve, delta method."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == "linear":
            grads = np.stack([x, np.ones_like(x)], axis=-1)
        else:
            eta, _ = self.params
            grads = np.stack([x / (1.0 + (eta * x) ** 2), np.ones_like(x)], axis=-1)
        var = np.einsum("ni,ij,nj->n", grads, self.covariance, grads)
        return np.sqrt(np.maximum(var, 0.0))

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return self.params[0] * x + self.params[1]
        return np.arctan(self.params[0] * x) + self.params[1]


def _fd_jacobian(resid_fn, theta, rel_step=1e-6):
    """Central finite-difference Jacobian of the residual vector."""
    theta = np.asarray(theta, dtype=float)
    r0 = resid_fn(theta)
    J = np.empty((r0.size, theta.size))
    for k in range(theta.size):
        h = rel_step * max(abs(theta[k]), 1.0)
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        J[:, k] = (resid_fn(tp) - resid_fn(tm)) / (2.0 * h)
    return J


def lm_fit(model, t, y, sigma_y, theta0, bounds=None, max_iter: int = 200,
           rel_step: float = 1e-6) -> LMResult:
    """Levenberg-Marquardt damped least squares.

    Minimizes sum(((y - model(t, theta)) / sigma_y)^2). The Jacobian is by
    central finite differences. Covariance is the inverse Gauss-Newton
    normal matrix at the optimum, scaled by the reduced chi-square.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma_y = np.broadcast_to(np.asarray(sigma_y, dtype=float), y.shape)
    theta = np.asarray(theta0, dtype=float).copy()
    if t.size < theta.size:
        raise ValidationError(
            f"need at least {theta.size} data points, got {t.size}")
    if np.any(sigma_y <= 0):
        raise ValidationError("sigma_y must be > 0")
    if not np.all(np.isfinite(theta)):
        raise ValidationError(f"theta0 must be finite, got {theta0}")

    lo = np.full(theta.shape, -np.inf)
    hi = np.full(theta.shape, np.inf)
    if bounds is not None:
        lo = np.asarray([b[0] for b in bounds], dtype=float)
        hi = np.asarray([b[1] for b in bounds], dtype=float)
        theta = np.clip(theta, lo, hi)

    def resid(th):
        return (y - model(t, th)) / sigma_y

    r = resid(theta)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    message = "max iterations reached"
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        J = _fd_jacobian(resid, theta, rel_step)
        A = J.T @ J
        g = J.T @ r
        if float(np.linalg.norm(g, ord=np.inf)) < 1e-10:
            converged = True
            message = "gradient below tolerance"
            break
        diag = np.diag(A).copy()
        if np.any(diag <= 0) and np.all(diag == 0):
            raise FitError("degenerate fit: singular normal matrix")
        diag[diag <= 0] = 1.0
        accepted = False
        for _ in range(50):
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError as exc:
                raise FitError(f"degenerate fit: {exc}") from exc
            trial = np.clip(theta + step, lo, hi)
            r_trial = resid(trial)
            cost_trial = float(r_trial @ r_trial)
            if cost_trial <= cost and np.isfinite(cost_trial):
                rel_drop = (cost - cost_trial) / max(cost, 1e-300)
                theta, r, cost = trial, r_trial, cost_trial
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if rel_drop < 1e-12:
                    converged = True
                    message = "relative cost change below tolerance"
                break
            lam *= 10.0
        if not accepted:
            converged = True
            message = "no downhill step found (stationary point)"
            break
        if converged:
            break

    J = _fd_jacobian(resid, theta, rel_step)
    A = J.T @ J
    try:
        A_inv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise FitError(f"degenerate fit: singular normal matrix: {exc}") from exc
    dof = t.size - theta.size
    if dof > 0:
        cov = A_inv * max(cost / dof, np.finfo(float).tiny)
    else:
        cov = np.full_like(A_inv, np.inf)
    sig = np.sqrt(np.abs(np.diag(cov)))
    return LMResult(theta=theta, covariance=cov, sigma=sig,
                    residual_norm=math.sqrt(cost), n_iterations=n_iter,
                    converged=converged, message=message)


def decay_model(t, theta, omega23: float, branching: float,
                variant: str = "two-term"):
    """i0 * beat model with gamma_avg tied to gamma22N by the branching ratio.

    theta = (i0, ib, gamma22N, phi); exactly four free parameters.
    """
    i0, ib, g22, phi = theta
    t = np.asarray(t, dtype=float)
    g33 = branching * g22
    g_avg = 0.5 * (g22 + g33)
    out = np.exp(-g22 * t) + ib * np.exp(-g_avg * t) * np.sin(omega23 * t + phi)
    if variant == "three-term":
        out = out + (g33 / (2.0 * omega23)) ** 2 * np.exp(-g33 * t)
    elif variant != "two-term":
        raise ValidationError(f"unknown variant {variant!r}")
    return i0 * out


def fit_decay(hist: Histogram, sys: SystemParams,
              window: tuple = (0.0, 40.0),
              variant: str = "two-term") -> FitResult:
    """Fit the two-term beat model to a steady-counts-normalized histogram."""
    t_all = hist.times
    counts = np.asarray(hist.counts, dtype=float)
    mask = (t_all >= window[0]) & (t_all <= window[1])
    if not np.any(mask):
        raise ValidationError(f"window {window} contains no histogram bins "
                              f"(data span [{t_all[0]}, {t_all[-1]}] ns)")
    t = t_all[mask]
    c = counts[mask]
    if np.all(c == 0):
        raise FitError("all counts in the fit window are zero")
    y = c / hist.steady_counts
    sigma_y = np.maximum(np.sqrt(c), 1.0) / hist.steady_counts

    omega23 = sys.omega23
    branching = sys.branching

    # initial guesses: log-linear envelope slope, then the analytic beat laws
    pos = y > 0
    slope, intercept = np.polyfit(t[pos], np.log(y[pos]), 1)
    g0 = max(-slope, 1e-4)
    i0_0 = max(y[0], math.exp(intercept))
    rates0 = collective_rates(with_enhancement(sys, max(g0 / sys.gamma22, 1.0)))
    theta0 = np.array([i0_0, beat_amplitude(rates0, omega23), g0,
                       beat_phase(rates0, omega23)])
    bounds = [(1e-12, np.inf), (0.0, 1.0), (1e-6, 10.0),
              (-0.5 * math.pi, 0.5 * math.pi)]

    res = lm_fit(lambda tt, th: decay_model(tt, th, omega23, branching, variant),
                 t, y, sigma_y, theta0, bounds=bounds)
    if not res.converged:
        raise FitError(f"decay fit did not converge: {res.message}")
    return FitResult(
        i0=float(res.theta[0]), ib=float(res.theta[1]),
        gamma22N=float(res.theta[2]), phi=float(res.theta[3]),
        covariance=res.covariance, sigma=res.sigma,
        residual_norm=res.residual_norm, n_iterations=res.n_iterations,
        converged=res.converged, omega23=omega23, branching=branching,
        window=tuple(window), od=hist.od,
    )


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def subtract_and_fft(hist: Histogram, fit: FitResult,
                     zero_pad_factor: int = 8,
                     window: tuple | None = None) -> Spectrum:
    """FFT of the residual after removing the exponential decay and dc offset.

    The residual is taken over `window` (default: the full post-turn-off
    record), independent of the window the decay fit used.
    """
    if not fit.converged:
        raise FitError("fit must have converged before the FFT step")
    if int(zero_pad_factor) != zero_pad_factor or zero_pad_factor < 1:
        raise ValidationError(
            f"zero_pad_factor must be an integer >= 1, got {zero_pad_factor}")
    t_all = hist.times
    if window is None:
        window = (0.0, float(t_all[-1]))
    mask = (t_all >= window[0]) & (t_all <= window[1])
    if not np.any(mask):
        raise ValidationError(f"window {window} contains no histogram bins")
    t = t_all[mask]
    y = np.asarray(hist.counts, dtype=float)[mask] / hist.steady_counts / fit.i0
    beat_period = 2.0 * math.pi / fit.omega23
    if (t[-1] - t[0]) < 4.0 * beat_period:
        warnings.warn("fit window shorter than 4 beat periods; "
                      "peak resolution degraded", stacklevel=2)
    residual = y - np.exp(-fit.gamma22N * t)
    residual = residual - residual.mean()
    n_pad = int(zero_pad_factor) * _next_pow2(residual.size)
    mag = np.abs(np.fft.rfft(residual, n_pad))
    freqs = np.fft.rfftfreq(n_pad, d=hist.bin_width) * 1e3   # 1/ns -> MHz
    return Spectrum(freqs=freqs, magnitude=mag,
                    resolution=1e3 / (hist.bin_width * n_pad),
                    zero_pad_factor=int(zero_pad_factor))


def _weighted_linear(x, y, w):
    """Weighted LS for y = a x + b; returns (params, covariance, chi2)."""
    X = np.stack([x, np.ones_like(x)], axis=-1)
    A = X.T @ (w[:, None] * X)
    try:
        A_inv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise FitError(f"degenerate line fit: {exc}") from exc
    p = A_inv @ (X.T @ (w * y))
    chi2 = float(np.sum(w * (y - X @ p) ** 2))
    return p, A_inv, chi2


def fit_enhancement_line(points) -> MetaFit:
    """Weighted linear fit of enhancement vs OD.

    points: iterable of (od, enhancement, sigma). Two points give the exact
    line with the degenerate (infinite-CI) flag set.
    """
    pts = [(float(a), float(b), float(s)) for a, b, s in points]
    if len(pts) < 2:
        raise ValidationError(f"need >= 2 points for a line fit, got {len(pts)}")
    x, y, s = (np.array(v) for v in zip(*pts))
    if np.any(s <= 0):
        raise ValidationError("point sigmas must be > 0")
    w = 1.0 / s**2
    p, A_inv, chi2 = _weighted_linear(x, y, w)
    dof = len(pts) - 2
    if dof > 0:
        cov = A_inv * (chi2 / dof)
        degenerate = False
    else:
        cov = np.full_like(A_inv, np.inf)
        degenerate = True
    return MetaFit(kind="linear", params=p, sigma=np.sqrt(np.abs(np.diag(cov))),
                   covariance=cov, degenerate=degenerate)


def fit_phase_curve(points) -> MetaFit:
    """Fit phi = arctan(eta * enhancement) + phi0.

    points: iterable of (enhancement, phi, sigma).
    """
    pts = [(float(a), float(b), float(s)) for a, b, s in points]
    if len(pts) < 3:
        raise ValidationError(f"need >= 3 points, got {len(pts)}")
    x, y, s = (np.array(v) for v in zip(*pts))
    # linearized start: in the small-angle regime the curve is nearly a line
    p_lin, _, _ = _weighted_linear(x, y, 1.0 / s**2)
    theta0 = np.array([max(p_lin[0], 1e-4), p_lin[1]])

    def model(xx, th):
        return np.arctan(th[0] * xx) + th[1]

    res = lm_fit(model, x, y, s, theta0,
                 bounds=[(-10.0, 10.0), (-math.pi, math.pi)])
    return MetaFit(kind="arctan", params=res.theta, sigma=res.sigma,
                   covariance=res.covariance, converged=res.converged)


def beat_summary(fits, sys: SystemParams) -> list[dict]:
    """Tabulate fitted (enhancement, ib, phi) with the theory line for ib."""
    rows = []
    for fit in fits:
        if not fit.converged:
            raise FitError("beat_summary requires converged fits")
        enh = fit.gamma22N / sys.gamma22
        enh_sigma = fit.sigma[2] / sys.gamma22
        rates = collective_rates(with_enhancement(sys, max(enh, 1.0)))
        rows.append({
            "od": fit.od,
            "enhancement": enh,
            "enhancement_sigma": enh_sigma,
            "ib": fit.ib,
            "ib_sigma": float(fit.sigma[1]),
            "phi": fit.phi,
            "phi_sigma": float(fit.sigma[3]),
            "ib_theory": beat_amplitude(rates, sys.omega23),
        })
    return rows


_SUMMARY_COLUMNS = ("od", "enhancement", "enhancement_sigma", "ib", "ib_sigma",
                    "phi", "phi_sigma", "ib_theory")


def write_summary_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(_SUMMARY_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(f"{row[c]:.17g}" for c in _SUMMARY_COLUMNS) + "\n")


def write_spectrum_csv(spec: Spectrum, path) -> None:
    with open(path, "w") as fh:
        fh.write("freq_MHz,magnitude\n")
        for f, m in zip(spec.freqs, spec.magnitude):
            fh.write(f"{f:.17g},{m:.17g}\n")


def fitresult_to_json(fit: FitResult) -> dict:
    return {
        "i0": fit.i0,
        "ib": fit.ib,
        "gamma22N_rad_per_ns": fit.gamma22N,
        "gamma22N_MHz": rad_per_ns_to_mhz(fit.gamma22N),
        "phi_rad": fit.phi,
        "sigma": list(map(float, fit.sigma)),
        "covariance_row_major": list(map(float, fit.covariance.ravel())),
        "residual_norm": fit.residual_norm,
        "n_iterations": fit.n_iterations,
        "converged": fit.converged,
        "window_ns": list(fit.window),
        "od": fit.od,
    }


def metafit_to_json(mf: MetaFit) -> dict:
    names = ("slope", "intercept") if mf.kind == "linear" else ("eta", "phi0")
    out = {"kind": mf.kind, "converged": mf.converged, "degenerate": mf.degenerate}
    for name, value, sig in zip(names, mf.params, mf.sigma):
        out[name] = float(value)
        out[name + "_sigma"] = float(sig)
    out["covariance_row_major"] = list(map(float, mf.covariance.ravel()))
    return out


def write_fit_json(fit: FitResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(fitresult_to_json(fit), fh, indent=2)
        fh.write("\n")


def write_metafit_json(mf: MetaFit, path) -> None:
    with open(path, "w") as fh:
        json.dump(metafit_to_json(mf), fh, indent=2)
        fh.write("\n")
