"""Inverse problems: Ronchigram fitting and Thon-ring / phase-scan analysis."""

from .ronchigram import (
    RonchigramFit,
    RonchigramFitHints,
    estimate_standing_wave_vector,
    fit_ronchigram,
)
from .thon import (
    CtfFit,
    PhaseScanResult,
    analyze_phase_scan,
    assign_zero_phases,
    correct_astigmatism,
    fit_defocus_polynomial,
    locate_ctf_zeros,
)

__all__ = [
    "RonchigramFit",
    "RonchigramFitHints",
    "estimate_standing_wave_vector",
    "fit_ronchigram",
    "CtfFit",
    "PhaseScanResult",
    "analyze_phase_scan",
    "assign_zero_phases",
    "correct_astigmatism",
    "fit_defocus_polynomial",
    "locate_ctf_zeros",
]
