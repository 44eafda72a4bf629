"""Driven three-level optical Bloch equations.

State = 3x3 complex density matrix over levels {1, 2, 3} (ground, upper
excited, lower excited), in the frame rotating at the drive frequency.
Damping uses the collectively enhanced rates (1 + N*f)*Gamma_jl; the
drive-frequency correction to the damping rates is negligible at optical
frequencies and is not applied.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import IntegrationError, SteadyStateError, ValidationError
from .params import DriveConfig, SystemParams, collective_rates

__all__ = [
    "BlochTrajectory", "ground_state", "level_projector", "validate_density_matrix",
    "bloch_rhs", "integrate_bloch", "steady_state", "turnoff_ramp",
    "rabi_ramp_scale", "simulate_turnoff", "trajectory_to_csv",
]

_TRAJECTORY_HEADER = ("t_ns,rho11,rho22,rho33,re_rho21,im_rho21,"
                      "re_rho31,im_rho31,re_rho23,im_rho23")


@dataclass(frozen=True)
class BlochTrajectory:
    times: np.ndarray          # [ns], strictly increasing
    states: np.ndarray         # (n, 3, 3) complex, Hermitized
    step: float                # integration step [ns]

    def populations(self) -> np.ndarray:
        return np.real(np.einsum("nii->ni", self.states))


def ground_state() -> np.ndarray:
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def level_projector(level: int) -> np.ndarray:
    """|level><level| with level in {1, 2, 3}."""
    if level not in (1, 2, 3):
        raise ValidationError(f"level must be 1, 2 or 3, got {level}")
    rho = np.zeros((3, 3), dtype=complex)
    rho[level - 1, level - 1] = 1.0
    return rho


def validate_density_matrix(rho: np.ndarray, herm_tol: float = 1e-12,
                            trace_tol: float = 1e-9) -> None:
    rho = np.asarray(rho)
    if rho.shape != (3, 3):
        raise ValidationError(f"density matrix must be 3x3, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > trace_tol or abs(np.trace(rho).imag) > trace_tol:
        raise ValidationError(f"density matrix trace is {np.trace(rho)}, expected 1")
    # small negative excursions are intrinsic to the cross-damped equations
    pops = np.real(np.diag(rho))
    if np.any(pops < -1e-6) or np.any(pops > 1.0 + 1e-6):
        raise ValidationError(f"populations out of range: {pops}")


def bloch_rhs(rho: np.ndarray, sys: SystemParams, drive: DriveConfig,
              rabi_scale: float = 1.0) -> np.ndarray:
    """Time derivative of the density matrix under drive and damping.

    rabi_scale in [0, 1] multiplies both Rabi frequencies (ramp support).
    """
    rates = collective_rates(sys)
    g22, g33, g23 = rates.gamma22_N, rates.gamma33_N, rates.gamma23_N
    w23 = sys.omega23
    o2 = rabi_scale * drive.rabi2
    o3 = rabi_scale * drive.rabi3
    d2, d3 = drive.detuning2, drive.detuning3

    r11, r12, r13 = rho[0, 0], rho[0, 1], rho[0, 2]
    r21, r22, r23 = rho[1, 0], rho[1, 1], rho[1, 2]
    r31, r32, r33 = rho[2, 0], rho[2, 1], rho[2, 2]

    out = np.empty((3, 3), dtype=complex)
    out[2, 2] = (1j * o3 * (r13 - r31) - g33 * r33
                 - 0.5 * g23 * (r23 + r32))
    out[1, 1] = (1j * o2 * (r12 - r21) - g22 * r22
                 - 0.5 * g23 * (r23 + r32))
    out[0, 0] = (-1j * o3 * (r13 - r31) - 1j * o2 * (r12 - r21)
                 + g33 * r33 + g22 * r22 + g23 * (r23 + r32))
    out[2, 0] = (-1j * o2 * r32 - 1j * o3 * (r33 - r11)
                 - (0.5 * g33 - 1j * d3) * r31 - 0.5 * g23 * r21)
    out[0, 2] = (1j * o2 * r23 + 1j * o3 * (r33 - r11)
                 - (0.5 * g33 + 1j * d3) * r13 - 0.5 * g23 * r12)
    out[1, 0] = (-1j * o3 * r23 - 1j * o2 * (r22 - r11)
                 - (0.5 * g22 - 1j * d2) * r21 - 0.5 * g23 * r31)
    out[0, 1] = (1j * o3 * r32 + 1j * o2 * (r22 - r11)
                 - (0.5 * g22 + 1j * d2) * r12 - 0.5 * g23 * r13)
    out[2, 1] = (-1j * o2 * r31 + 1j * o3 * r12
                 - (0.5 * (g22 + g33) - 1j * w23) * r32
                 - 0.5 * g23 * (r22 + r33))
    out[1, 2] = (1j * o2 * r13 - 1j * o3 * r21
                 - (0.5 * (g22 + g33) + 1j * w23) * r23
                 - 0.5 * g23 * (r22 + r33))
    return out


def _generator_matrices(sys: SystemParams, drive: DriveConfig):
    """Return (A, B) with vec(drho/dt) = (A + rabi_scale*B) @ vec(rho).

    The right-hand side is complex-linear in the density-matrix entries,
    so the generator is assembled column-by-column from basis matrices.
    """
    A = np.empty((9, 9), dtype=complex)
    B = np.empty((9, 9), dtype=complex)
    for k in range(9):
        basis = np.zeros(9, dtype=complex)
        basis[k] = 1.0
        basis = basis.reshape(3, 3)
        A[:, k] = bloch_rhs(basis, sys, drive, rabi_scale=0.0).ravel()
        B[:, k] = bloch_rhs(basis, sys, drive, rabi_scale=1.0).ravel() - A[:, k]
    return A, B


def _rk4_matrix(L: np.ndarray, dt: float) -> np.ndarray:
    """One-step propagator of classical RK4 for the linear system x' = L x."""
    H = dt * L
    M = np.eye(9, dtype=complex)
    term = np.eye(9, dtype=complex)
    for k in (1, 2, 3, 4):
        term = term @ H / k
        M = M + term
    return M


def _max_rate(sys: SystemParams, drive: DriveConfig) -> float:
    rates = collective_rates(sys)
    return max(sys.omega23, abs(drive.rabi2), abs(drive.rabi3),
               rates.gamma22_N, abs(drive.detuning2), abs(drive.detuning3))


def integrate_bloch(rho0: np.ndarray, sys: SystemParams, drive: DriveConfig,
                    t_span: Sequence[float], dt: float = 1e-3,
                    rabi_scale: float | Callable[[float], float] = 1.0,
                    store_every: int = 1,
                    trace_tol: float = 1e-6) -> BlochTrajectory:
    """Fixed-step 4th-order integration of the Bloch equations.

    rabi_scale may be a constant or a function of time (for drive ramps).
    Stored states are re-Hermitized; trace drift beyond trace_tol raises.
    """
    validate_density_matrix(rho0)
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise ValidationError(f"t_span must be increasing, got {t_span}")
    if dt <= 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    if dt > 0.01 / _max_rate(sys, drive):
        raise ValidationError(
            f"dt={dt} ns does not resolve the fastest scale "
            f"{_max_rate(sys, drive):.4g} rad/ns (need dt <= "
            f"{0.01 / _max_rate(sys, drive):.4g} ns)")

    n_steps = max(int(round((t1 - t0) / dt)), 0)
    A, B = _generator_matrices(sys, drive)
    x = np.asarray(rho0, dtype=complex).ravel().copy()

    stored = [x.copy()]
    stored_t = [t0]

    if callable(rabi_scale):
        for i in range(n_steps):
            t = t0 + i * dt
            L1 = A + rabi_scale(t) * B
            Lm = A + rabi_scale(t + 0.5 * dt) * B
            L2 = A + rabi_scale(t + dt) * B
            k1 = L1 @ x
            k2 = Lm @ (x + 0.5 * dt * k1)
            k3 = Lm @ (x + 0.5 * dt * k2)
            k4 = L2 @ (x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if (i + 1) % store_every == 0 or i == n_steps - 1:
                stored.append(x.copy())
                stored_t.append(t0 + (i + 1) * dt)
    else:
        L = A + float(rabi_scale) * B
        M = _rk4_matrix(L, dt)
        # constant generator: RK4 is exactly x -> M x, so blocks of steps
        # collapse to a precomputed matrix power
        block = np.linalg.matrix_power(M, store_every)
        full_blocks, rem = divmod(n_steps, store_every)
        for b in range(full_blocks):
            x = block @ x
            stored.append(x.copy())
            stored_t.append(t0 + (b + 1) * store_every * dt)
        for _ in range(rem):
            x = M @ x
        if rem:
            stored.append(x.copy())
            stored_t.append(t0 + n_steps * dt)

    states = np.array(stored).reshape(-1, 3, 3)
    states = 0.5 * (states + np.conj(np.transpose(states, (0, 2, 1))))
    traces = np.real(np.einsum("nii->n", states))
    drift = float(np.max(np.abs(traces - 1.0)))
    if drift > trace_tol:
        raise IntegrationError(
            f"trace drifted by {drift:.3e} (> {trace_tol:.1e}) over the span")
    return BlochTrajectory(times=np.array(stored_t), states=states, step=dt)


def steady_state(sys: SystemParams, drive: DriveConfig) -> np.ndarray:
    """Steady state of the driven equations by direct linear solve.

    Solves {rhs(rho) = 0, trace(rho) = 1}; the rho11 equation is replaced
    by the trace constraint (the population rows are linearly dependent).
    """
    A, B = _generator_matrices(sys, drive)
    L = A + B
    M = L.copy()
    M[0, :] = 0.0
    M[0, [0, 4, 8]] = 1.0   # trace row
    rhs = np.zeros(9, dtype=complex)
    rhs[0] = 1.0
    try:
        x = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SteadyStateError(f"steady-state system is singular: {exc}") from exc
    residual = float(np.max(np.abs(L @ x)))
    scale = float(np.max(np.abs(L))) or 1.0
    if not np.all(np.isfinite(x)) or residual > 1e-8 * scale:
        raise SteadyStateError(
            f"no unique steady state (residual {residual:.3e})")
    rho = x.reshape(3, 3)
    return 0.5 * (rho + rho.conj().T)


def turnoff_ramp(t, t0: float, tau: float):
    """Drive *intensity* factor: 1, then cos^4((pi/2)(t-t0)/tau), then 0."""
    if tau <= 0:
        raise ValidationError(f"tau must be > 0, got {tau}")
    t = np.asarray(t, dtype=float)
    u = np.clip((t - t0) / tau, 0.0, 1.0)
    out = np.where(u >= 1.0, 0.0, np.cos(0.5 * np.pi * u) ** 4)
    return out if out.ndim else float(out)


def rabi_ramp_scale(t, t0: float, tau: float, exponent: float = 2.0):
    """Rabi-frequency factor during turn-off.

    The measured ramp is an intensity shape (cos^4); the field amplitude is
    its square root, i.e. cos^2. The exponent is exposed as a knob.
    """
    if tau <= 0:
        raise ValidationError(f"tau must be > 0, got {tau}")
    t = np.asarray(t, dtype=float)
    u = np.clip((t - t0) / tau, 0.0, 1.0)
    out = np.where(u >= 1.0, 0.0, np.cos(0.5 * np.pi * u) ** exponent)
    return out if out.ndim else float(out)


def simulate_turnoff(rhoS: np.ndarray, sys: SystemParams, drive: DriveConfig,
                     dt: float = 1e-3, ramp_exponent: float = 2.0,
                     wait: float = 0.5) -> np.ndarray:
    """Integrate across the drive turn-off ramp and return the final state.

    The span is [t0, t0 + tau + wait]; the default 0.5-ns wait mirrors the
    settling window before the decay analysis starts.
    """
    t0, tau = drive.ramp_t0, drive.ramp_tau
    traj = integrate_bloch(
        rhoS, sys, drive, (t0, t0 + tau + wait), dt=dt,
        rabi_scale=lambda t: rabi_ramp_scale(t, t0, tau, ramp_exponent),
        store_every=max(int(round((tau + wait) / dt)), 1),
    )
    return traj.states[-1]


def trajectory_to_csv(traj: BlochTrajectory, path) -> None:
    with open(path, "w") as fh:
        fh.write(_TRAJECTORY_HEADER + "\n")
        for t, rho in zip(traj.times, traj.states):
            row = [t, rho[0, 0].real, rho[1, 1].real, rho[2, 2].real,
                   rho[1, 0].real, rho[1, 0].imag,
                   rho[2, 0].real, rho[2, 0].imag,
                   rho[1, 2].real, rho[1, 2].imag]
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
