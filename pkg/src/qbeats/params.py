"""Physical parameters, unit conventions, and collective rate scaling.

Internal unit system: angular frequencies in rad/ns, times in ns.
All user-facing I/O (JSON files, CLI flags) uses ordinary frequency in MHz
and is converted at the boundary.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace

from .errors import ValidationError

TWO_PI = 2.0 * math.pi


def mhz_to_rad_per_ns(f_mhz: float) -> float:
    """Ordinary frequency in MHz -> angular frequency in rad/ns."""
    return TWO_PI * f_mhz * 1e-3


def rad_per_ns_to_mhz(w: float) -> float:
    """Angular frequency in rad/ns -> ordinary frequency in MHz."""
    return w / (TWO_PI * 1e-3)


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class SystemParams:
    """Single-atom rates plus the collective parameters (N, f).

    gamma22, gamma33: excited-level decay rates to the ground level [rad/ns]
    gamma23: vacuum-mediated cross-damping rate [rad/ns]
    omega23: splitting between the two excited levels [rad/ns]
    n_atoms, f_geom: only the product n_atoms * f_geom enters the physics;
        both are kept for bookkeeping.
    """

    gamma22: float
    gamma33: float
    gamma23: float
    omega23: float
    n_atoms: float = 0.0
    f_geom: float = 0.0

    def __post_init__(self):
        for name in ("gamma22", "gamma33", "gamma23", "omega23", "n_atoms", "f_geom"):
            _require_finite(name, getattr(self, name))
        if self.gamma22 <= 0:
            raise ValidationError(f"gamma22 must be > 0, got {self.gamma22}")
        if self.gamma33 < 0:
            raise ValidationError(f"gamma33 must be >= 0, got {self.gamma33}")
        if self.omega23 <= 0:
            raise ValidationError(f"omega23 must be > 0, got {self.omega23}")
        if self.n_atoms < 0 or self.f_geom < 0:
            raise ValidationError("n_atoms and f_geom must be >= 0")
        target = math.sqrt(self.gamma22 * self.gamma33)
        if abs(self.gamma23 - target) > 1e-12 * max(self.gamma22, 1.0):
            raise ValidationError(
                "gamma23 must equal sqrt(gamma22*gamma33) "
                f"(parallel dipoles): got {self.gamma23}, expected {target}"
            )
        g22n = (1.0 + self.nf) * self.gamma22
        if g22n > self.omega23 / 5.0:
            warnings.warn(
                "collective gamma22 exceeds omega23/5; the well-separated "
                "approximations degrade in this regime",
                stacklevel=2,
            )

    @property
    def nf(self) -> float:
        """The collective product N*f."""
        return self.n_atoms * self.f_geom

    @property
    def branching(self) -> float:
        return self.gamma33 / self.gamma22


@dataclass(frozen=True)
class CollectiveRates:
    """(1 + N*f)-scaled rates and their average/difference combinations."""

    gamma22_N: float
    gamma33_N: float
    gamma23_N: float
    gamma_avg_N: float
    gamma_d_N: float


@dataclass(frozen=True)
class DriveConfig:
    """Drive-field parameters (angular Rabi frequencies in rad/ns, times in ns)."""

    rabi2: float = 0.0
    rabi3: float = 0.0
    detuning2: float = 0.0
    detuning3: float = 0.0
    ramp_t0: float = -4.0
    ramp_tau: float = 3.5
    pulse_on: float = 200.0
    pulse_off: float = 800.0

    def __post_init__(self):
        for name in ("rabi2", "rabi3", "detuning2", "detuning3",
                     "ramp_t0", "ramp_tau", "pulse_on", "pulse_off"):
            _require_finite(name, getattr(self, name))
        if self.ramp_tau <= 0:
            raise ValidationError(f"ramp_tau must be > 0, got {self.ramp_tau}")
        if self.pulse_on <= 0:
            raise ValidationError(f"pulse_on must be > 0, got {self.pulse_on}")


def make_system(gamma22_MHz: float, branching: float, omega23_MHz: float,
                n_atoms: float = 0.0, f_geom: float = 0.0) -> SystemParams:
    """Build SystemParams from MHz inputs and a branching ratio.

    gamma33 = branching * gamma22 and gamma23 = sqrt(gamma22*gamma33)
    (parallel-dipole assumption).
    """
    gamma22_MHz = _require_finite("gamma22_MHz", gamma22_MHz)
    branching = _require_finite("branching", branching)
    omega23_MHz = _require_finite("omega23_MHz", omega23_MHz)
    if gamma22_MHz <= 0:
        raise ValidationError(f"gamma22_MHz must be > 0, got {gamma22_MHz}")
    if not 0.0 <= branching <= 1.0:
        raise ValidationError(f"branching must be in [0, 1], got {branching}")
    if omega23_MHz <= 0:
        raise ValidationError(f"omega23_MHz must be > 0, got {omega23_MHz}")
    gamma22 = mhz_to_rad_per_ns(gamma22_MHz)
    gamma33 = branching * gamma22
    return SystemParams(
        gamma22=gamma22,
        gamma33=gamma33,
        gamma23=math.sqrt(gamma22 * gamma33),
        omega23=mhz_to_rad_per_ns(omega23_MHz),
        n_atoms=n_atoms,
        f_geom=f_geom,
    )


def paper_system(n_atoms: float = 0.0, f_geom: float = 0.0) -> SystemParams:
    """Rb-85 D2 constants: gamma22 = 2pi*6.1 MHz, branching 5/9, splitting 121 MHz."""
    return make_system(6.1, 5.0 / 9.0, 121.0, n_atoms, f_geom)


def collective_rates(sys: SystemParams) -> CollectiveRates:
    """Scale every rate by (1 + N*f) and form the avg/diff combinations."""
    scale = 1.0 + sys.nf
    g22 = scale * sys.gamma22
    g33 = scale * sys.gamma33
    return CollectiveRates(
        gamma22_N=g22,
        gamma33_N=g33,
        gamma23_N=math.sqrt(g22 * g33),
        gamma_avg_N=0.5 * (g22 + g33),
        gamma_d_N=0.5 * (g33 - g22),
    )


def with_enhancement(sys: SystemParams, enhancement: float) -> SystemParams:
    """Return a copy whose collective rates are enhancement * single-atom rates."""
    if enhancement < 1.0:
        raise ValidationError(
            f"enhancement must be >= 1 (got {enhancement}); sub-single-atom "
            "collective rates are unphysical"
        )
    return replace(sys, n_atoms=enhancement - 1.0, f_geom=1.0)


def resonant_drive(sys: SystemParams, rabi2: float, rabi3: float | None = None,
                   **kwargs) -> DriveConfig:
    """Drive resonant on |1>-|2>: detuning2 = 0, detuning3 = -omega23.

    rabi3 defaults to sqrt(branching)*rabi2 (dipole-moment ratio).
    """
    if rabi3 is None:
        rabi3 = math.sqrt(sys.branching) * rabi2
    return DriveConfig(rabi2=rabi2, rabi3=rabi3,
                       detuning2=0.0, detuning3=-sys.omega23, **kwargs)


_PARAM_KEYS = {"gamma22_MHz", "branching", "omega23_MHz", "n_atoms", "f_geom", "drive"}
_DRIVE_KEYS = {"rabi2_MHz", "rabi3_MHz", "detuning2_MHz", "detuning3_MHz",
               "ramp_t0_ns", "ramp_tau_ns", "pulse_on_ns", "pulse_off_ns"}


def params_from_dict(data: dict) -> tuple[SystemParams, DriveConfig]:
    """Parse the JSON parameter schema. Unknown keys are rejected by name."""
    if not isinstance(data, dict):
        raise ValidationError("parameter file must contain a JSON object")
    for key in data:
        if key not in _PARAM_KEYS:
            raise ValidationError(f"unknown parameter key: {key!r}")
    sys = make_system(
        gamma22_MHz=data.get("gamma22_MHz", 6.1),
        branching=data.get("branching", 5.0 / 9.0),
        omega23_MHz=data.get("omega23_MHz", 121.0),
        n_atoms=data.get("n_atoms", 0.0),
        f_geom=data.get("f_geom", 0.0),
    )
    drive_data = data.get("drive", {})
    if not isinstance(drive_data, dict):
        raise ValidationError("'drive' must be a JSON object")
    for key in drive_data:
        if key not in _DRIVE_KEYS:
            raise ValidationError(f"unknown drive key: {key!r}")
    drive = DriveConfig(
        rabi2=mhz_to_rad_per_ns(drive_data.get("rabi2_MHz", 0.0)),
        rabi3=mhz_to_rad_per_ns(drive_data.get("rabi3_MHz", 0.0)),
        detuning2=mhz_to_rad_per_ns(drive_data.get("detuning2_MHz", 0.0)),
        detuning3=mhz_to_rad_per_ns(drive_data.get("detuning3_MHz", 0.0)),
        ramp_t0=drive_data.get("ramp_t0_ns", -4.0),
        ramp_tau=drive_data.get("ramp_tau_ns", 3.5),
        pulse_on=drive_data.get("pulse_on_ns", 200.0),
        pulse_off=drive_data.get("pulse_off_ns", 800.0),
    )
    return sys, drive


def load_params(path) -> tuple[SystemParams, DriveConfig]:
    """Read the JSON parameter file."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    return params_from_dict(data)
