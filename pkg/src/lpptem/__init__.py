"""lpptem: laser-phase-plate TEM simulation and estimation toolkit.

Forward models: standing-wave electron phase profiles, Ronchigram synthesis
by Fresnel propagation, laser-phase-plate contrast transfer functions,
weak-phase-object imaging, and counting-camera coincidence loss. Inverse
problems: Ronchigram parameter fitting and Thon-ring defocus/phase fitting
with node/antinode phase-scan analysis.
"""

__version__ = "0.1.0"

from .physics import (
    ElectronBeam,
    LaserField,
    LaserMode,
    electron_beam_from_voltage,
    laser_field_from_intensity,
    laser_field_from_power,
    laser_mode_geometry,
    peak_phase_from_intensity,
    phase_profile,
    ponderomotive_potential,
)
from .propagation import (
    GridSpec,
    RonchigramSetup,
    analytic_fringe_contrast,
    contrast_maximizing_offsets,
    fresnel_propagate,
    synthesize_ronchigram,
)
from .detector import (
    CoincidenceParams,
    apply_coincidence_loss,
    invert_coincidence_loss,
    sample_poisson_counts,
)
from .ctf import (
    CtfMap,
    OpticsConfig,
    PlateAlignment,
    aberration_phase,
    ctf_map,
    laser_phase_of_frequency,
    misalignment_signature,
    rms_angular_average,
    simulate_weak_phase_image,
    unscattered_phase,
)
from .estimation import (
    CtfFit,
    PhaseScanResult,
    RonchigramFit,
    RonchigramFitHints,
    analyze_phase_scan,
    assign_zero_phases,
    correct_astigmatism,
    estimate_standing_wave_vector,
    fit_defocus_polynomial,
    fit_ronchigram,
    locate_ctf_zeros,
)
from .raster import ComplexField, RadialProfile, RasterImage
from .config import RunConfig

__all__ = [
    "__version__",
    "ElectronBeam",
    "LaserField",
    "LaserMode",
    "electron_beam_from_voltage",
    "laser_field_from_intensity",
    "laser_field_from_power",
    "laser_mode_geometry",
    "peak_phase_from_intensity",
    "phase_profile",
    "ponderomotive_potential",
    "GridSpec",
    "RonchigramSetup",
    "analytic_fringe_contrast",
    "contrast_maximizing_offsets",
    "fresnel_propagate",
    "synthesize_ronchigram",
    "CoincidenceParams",
    "apply_coincidence_loss",
    "invert_coincidence_loss",
    "sample_poisson_counts",
    "CtfMap",
    "OpticsConfig",
    "PlateAlignment",
    "aberration_phase",
    "ctf_map",
    "laser_phase_of_frequency",
    "misalignment_signature",
    "rms_angular_average",
    "simulate_weak_phase_image",
    "unscattered_phase",
    "CtfFit",
    "PhaseScanResult",
    "RonchigramFit",
    "RonchigramFitHints",
    "analyze_phase_scan",
    "assign_zero_phases",
    "correct_astigmatism",
    "estimate_standing_wave_vector",
    "fit_defocus_polynomial",
    "fit_ronchigram",
    "locate_ctf_zeros",
    "ComplexField",
    "RadialProfile",
    "RasterImage",
    "RunConfig",
]
