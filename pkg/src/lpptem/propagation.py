"""Paraxial electron wave propagation and Ronchigram synthesis.

The Fresnel step is carried out as a Fourier-domain multiplication by the
exact transfer function of the Fresnel kernel, with 2x zero-padding per axis.
A Ronchigram is the far-field image of the standing laser wave: a uniform
converging/diverging wave picks up the laser phase in a single plane and is
propagated by the plate-to-diffraction-plane offset ``delta``; the detector
coordinates are the propagated coordinates scaled by M f / delta.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import fft as sp_fft
from scipy import special

from .errors import SamplingError, ValidationError
from .parallel import worker_count
from .physics import ElectronBeam, LaserMode, phase_profile
from .raster import (
    PLANE_IMAGE,
    PLANE_PHASE_PLATE,
    ComplexField,
    RasterImage,
    centered_mesh,
)

#: Minimum samples per standing-wave fringe, in the plate plane and mapped
#: onto the detector alike. Violations are hard errors so fits stay honest.
MIN_SAMPLES_PER_FRINGE = 4.0


@dataclass(frozen=True)
class GridSpec:
    """Square-pixel grid: width x height samples of size pixel_size [m]."""

    width: int
    height: int
    pixel_size: float

    def __post_init__(self):
        if self.width < 16 or self.height < 16 or self.width % 2 or self.height % 2:
            raise ValidationError(
                f"grid must be at least 16x16 with even sizes, got {self.width}x{self.height}"
            )
        if not self.pixel_size > 0:
            raise ValidationError(f"pixel_size must be positive, got {self.pixel_size}")


@dataclass(frozen=True)
class RonchigramSetup:
    """Geometry for imaging the standing wave: beam, mode, and lens constants.

    ``delta`` is the signed offset of the plate plane downstream of the
    diffraction plane; delta = 0 is the in-focus phase-plate condition and
    belongs to the CTF engine, not here.
    """

    beam: ElectronBeam
    mode: LaserMode
    delta: float
    focal_length: float
    magnification: float

    def __post_init__(self):
        if self.delta == 0:
            raise ValidationError(
                "delta must be nonzero for Ronchigram synthesis; delta = 0 is the "
                "phase-plate imaging condition handled by the CTF engine (ctf.ctf_map)"
            )
        if not self.focal_length > 0:
            raise ValidationError(f"focal length must be positive, got {self.focal_length}")
        if not self.magnification > 0:
            raise ValidationError(f"magnification must be positive, got {self.magnification}")

    @property
    def detector_scale(self):
        """|M f / delta|: plate-plane lengths per detector length."""
        return abs(self.magnification * self.focal_length / self.delta)


def fresnel_propagate(field: ComplexField, distance: float, wavenumber: float) -> ComplexField:
    """Propagate a complex field by ``distance`` using the Fresnel kernel.

    Computed as an FFT-based convolution with the exact transfer function
    exp(i k z) exp(-i pi lambda z |f|^2), zero-padded 2x per axis. Raises
    SamplingError when the transfer function would be aliased on this grid.
    """
    if distance == 0:
        raise ValidationError("propagation distance must be nonzero")
    if not wavenumber > 0:
        raise ValidationError("wavenumber must be positive")
    wavelength = 2.0 * math.pi / wavenumber
    h, w = field.values.shape
    p = field.pixel_size
    # Padded transfer-function sampling: the quadratic phase must advance by
    # less than pi between frequency samples out to the corner frequency.
    n_min = wavelength * abs(distance) / (2.0 * p * p)
    if max(h, w) < n_min:
        raise SamplingError(
            "Fresnel transfer function aliased: propagating "
            f"{distance:.6g} m at pixel {p:.6g} m needs a grid of at least "
            f"{int(math.ceil(n_min))} samples per axis, got {w}x{h}"
        )
    ph, pw = 2 * h, 2 * w
    fy = np.fft.fftfreq(ph, d=p)[:, np.newaxis]
    fx = np.fft.fftfreq(pw, d=p)[np.newaxis, :]
    transfer = np.exp(1j * wavenumber * distance) * np.exp(
        -1j * math.pi * wavelength * distance * (fx**2 + fy**2)
    )
    padded = np.zeros((ph, pw), dtype=np.complex128)
    padded[:h, :w] = field.values
    workers = worker_count()
    out = sp_fft.ifft2(sp_fft.fft2(padded, workers=workers) * transfer, workers=workers)[:h, :w]
    return ComplexField(values=out, pixel_size=p, plane="generic")


def _require_fringe_sampling(pixel_size, fringe_period, where):
    if fringe_period / pixel_size < MIN_SAMPLES_PER_FRINGE:
        required = fringe_period / MIN_SAMPLES_PER_FRINGE
        raise SamplingError(
            f"{where} undersamples the standing-wave fringe: pixel "
            f"{pixel_size:.6g} m exceeds the required {required:.6g} m "
            f"({MIN_SAMPLES_PER_FRINGE:g} samples per {fringe_period:.6g} m fringe)"
        )


def synthesize_ronchigram(setup: RonchigramSetup, grid: GridSpec) -> RasterImage:
    """Synthesize |psi_im|^2 of the standing laser wave on the detector.

    The grid describes the phase-plate plane sampling; the returned raster
    carries the detector pixel size ``pixel * |M f / delta|``. The background
    far from the laser axis is normalized to 1.
    """
    mode = setup.mode
    fringe = mode.wavelength / 2.0
    _require_fringe_sampling(grid.pixel_size, fringe, "phase-plate grid")
    # The detector sees the same samples relabeled, so the mapped fringe
    # period is sampled identically; both spec'd rules collapse to one check.
    x, y = centered_mesh(grid.width, grid.height, grid.pixel_size)
    eta = phase_profile(x, y, mode)
    # The illumination is uniform far beyond the grid, so the unit background
    # propagates to e^{ik delta} exactly; only the laser-induced deviation is
    # windowed and convolved. This keeps the background free of artificial
    # edge diffraction from the padding.
    deviation = ComplexField(
        values=np.exp(-1j * eta) - 1.0, pixel_size=grid.pixel_size, plane=PLANE_PHASE_PLATE
    )
    propagated = fresnel_propagate(deviation, setup.delta, setup.beam.wavenumber)
    wave = np.exp(1j * setup.beam.wavenumber * setup.delta) + propagated.values
    intensity = np.abs(wave) ** 2
    intensity /= _background_level(intensity, y, mode.waist, grid)
    return RasterImage(
        values=intensity,
        pixel_size=grid.pixel_size * setup.detector_scale,
        plane=PLANE_IMAGE,
    )


def _background_level(intensity, y, waist, grid):
    """Median intensity over rows far from the laser axis, if any exist."""
    margin = int(round(0.05 * grid.height))
    rows = np.abs(y[:, 0]) > 3.5 * waist
    rows[:margin] = False
    rows[grid.height - margin:] = False
    if not np.any(rows):
        return 1.0
    return float(np.median(intensity[rows, :]))


def analytic_fringe_contrast(
    peak_phase: float, delta: float, k: float, k_laser: float
) -> float:
    """Closed-form cosine-fringe amplitude of the normalized Ronchigram.

    Two-term Jacobi-Anger treatment of the pure standing wave gives

        |psi_im|^2 = 1 - C cos(2 k_L x * delta/(M f)),
        C = 4 J1(eta0/2) / J0(eta0/2) * sin(2 delta k_L^2 / k).

    Returns the signed C. Valid for eta0 well below pi; warns above 1.5 rad.
    """
    if not peak_phase >= 0:
        raise ValidationError("peak phase must be non-negative")
    if peak_phase >= math.pi:
        raise ValidationError(
            f"two-term expansion invalid for peak phase {peak_phase:.3f} >= pi rad"
        )
    if peak_phase > 1.5:
        import warnings

        warnings.warn(
            f"fringe-contrast expansion is inaccurate for peak phase {peak_phase:.3f} rad",
            stacklevel=2,
        )
    j0 = special.j0(peak_phase / 2.0)
    if j0 == 0.0:
        raise ValidationError("J0(eta0/2) vanishes; contrast expansion undefined")
    return float(
        4.0 * special.j1(peak_phase / 2.0) / j0 * math.sin(2.0 * delta * k_laser**2 / k)
    )


def contrast_maximizing_offsets(
    beam: ElectronBeam, laser_wavelength: float, count: int
) -> np.ndarray:
    """Offsets delta_max = (pi/2)(k/k_L^2)(j + 1/2) for j = 0..count-1."""
    if count < 1:
        raise ValidationError(f"count must be at least 1, got {count}")
    if not laser_wavelength > 0:
        raise ValidationError("laser wavelength must be positive")
    k_laser = 2.0 * math.pi / laser_wavelength
    j = np.arange(count, dtype=np.float64)
    return math.pi / 2.0 * beam.wavenumber / k_laser**2 * (j + 0.5)
