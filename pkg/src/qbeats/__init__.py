"""Collective quantum-beat simulator and analysis toolkit.

Simulates the fluorescence decay of a driven V-type three-level atom after
a fast drive turn-off, including the collectively enhanced decay rates of
an optically dense ensemble, generates shot-noise-limited synthetic photon
histograms, and recovers the decay law, beat amplitude, and beat phase
with a weighted Levenberg-Marquardt pipeline plus FFT diagnostics.

Units: times in ns, angular frequencies in rad/ns internally; file and CLI
interfaces use MHz (ordinary frequency).
"""

from .errors import (
    FitError,
    IntegrationError,
    SteadyStateError,
    ValidationError,
)
from .params import (
    CollectiveRates,
    DriveConfig,
    SystemParams,
    collective_rates,
    load_params,
    make_system,
    mhz_to_rad_per_ns,
    paper_system,
    params_from_dict,
    rad_per_ns_to_mhz,
    resonant_drive,
    with_enhancement,
)
from .bloch import (
    BlochTrajectory,
    bloch_rhs,
    ground_state,
    integrate_bloch,
    level_projector,
    rabi_ramp_scale,
    simulate_turnoff,
    steady_state,
    trajectory_to_csv,
    turnoff_ramp,
    validate_density_matrix,
)
from .dynamics import (
    IntensityTrace,
    PoleSet,
    amplitudes_approx,
    amplitudes_exact,
    beat_amplitude,
    beat_phase,
    compute_delta,
    integrate_amplitudes,
    intensity_exact,
    intensity_model,
    poles,
    poleset_to_json,
    write_intensity_csv,
    write_poles_json,
)
from .synth import (
    ExperimentConfig,
    Histogram,
    expected_counts,
    od_to_enhancement,
    read_histogram_csv,
    steady_transmission,
    synth_histogram,
    write_histogram_csv,
)
from .analysis import (
    FitResult,
    LMResult,
    MetaFit,
    Spectrum,
    beat_summary,
    decay_model,
    fit_decay,
    fit_enhancement_line,
    fit_phase_curve,
    lm_fit,
    subtract_and_fft,
    write_fit_json,
    write_metafit_json,
    write_spectrum_csv,
    write_summary_csv,
)

__version__ = "1.0.0"

__all__ = [
    "__version__",
    # errors
    "ValidationError", "IntegrationError", "SteadyStateError", "FitError",
    # params
    "SystemParams", "CollectiveRates", "DriveConfig",
    "make_system", "paper_system", "collective_rates", "with_enhancement",
    "resonant_drive", "params_from_dict", "load_params",
    "mhz_to_rad_per_ns", "rad_per_ns_to_mhz",
    # bloch
    "BlochTrajectory", "ground_state", "level_projector",
    "validate_density_matrix", "bloch_rhs", "integrate_bloch",
    "steady_state", "turnoff_ramp", "rabi_ramp_scale", "simulate_turnoff",
    "trajectory_to_csv",
    # dynamics
    "PoleSet", "IntensityTrace", "compute_delta", "poles",
    "amplitudes_exact", "amplitudes_approx", "integrate_amplitudes",
    "intensity_exact", "intensity_model", "beat_amplitude", "beat_phase",
    "poleset_to_json", "write_intensity_csv", "write_poles_json",
    # synth
    "Histogram", "ExperimentConfig", "od_to_enhancement",
    "steady_transmission", "expected_counts", "synth_histogram",
    "write_histogram_csv", "read_histogram_csv",
    # analysis
    "LMResult", "FitResult", "Spectrum", "MetaFit",
    "lm_fit", "decay_model", "fit_decay", "subtract_and_fft",
    "fit_enhancement_line", "fit_phase_curve", "beat_summary",
    "write_summary_csv", "write_spectrum_csv", "write_fit_json",
    "write_metafit_json",
]
