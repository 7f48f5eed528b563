"""Grid containers for scalar rasters, complex fields, and radial profiles.

Conventions used everywhere in the toolkit:

* grids are row-major with axis 0 = y and axis 1 = x,
* the coordinate origin (and the DC sample of frequency-plane grids) sits at
  index ``n // 2`` on each axis, so grids must have even sizes,
* ``pixel_size`` is meters for real-space planes and 1/meters (the frequency
  step) for frequency-plane rasters.
"""

from dataclasses import dataclass, field
import numpy as np

from .errors import ValidationError

PLANE_PHASE_PLATE = "phase-plate-plane"
PLANE_IMAGE = "image-plane"
PLANE_DIFFRACTION = "diffraction-plane"
PLANE_FREQUENCY = "frequency"
PLANE_GENERIC = "generic"

_RASTER_PLANES = (PLANE_IMAGE, PLANE_DIFFRACTION, PLANE_FREQUENCY, PLANE_GENERIC)
_FIELD_PLANES = (PLANE_PHASE_PLATE, PLANE_IMAGE, PLANE_GENERIC)


def _check_grid(values, pixel_size, min_size=2, even=False):
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValidationError(f"grid must be 2-D, got shape {values.shape}")
    h, w = values.shape
    if h < min_size or w < min_size:
        raise ValidationError(f"grid must be at least {min_size}x{min_size}, got {w}x{h}")
    if even and (h % 2 or w % 2):
        raise ValidationError(f"grid sizes must be even, got {w}x{h}")
    if not pixel_size > 0:
        raise ValidationError(f"pixel_size must be positive, got {pixel_size}")
    return values


@dataclass
class RasterImage:
    """2-D scalar grid with a pixel size and the plane it lives in."""

    values: np.ndarray
    pixel_size: float
    plane: str = PLANE_GENERIC

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        _check_grid(self.values, self.pixel_size)
        if self.plane not in _RASTER_PLANES:
            raise ValidationError(f"unknown plane tag {self.plane!r}")

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    def axis_coords(self, axis):
        """Centered physical coordinates along one axis (0 = y, 1 = x)."""
        n = self.values.shape[axis]
        return (np.arange(n) - n // 2) * self.pixel_size


@dataclass
class ComplexField:
    """Complex wave amplitudes on a regular grid in a named plane."""

    values: np.ndarray
    pixel_size: float
    plane: str = PLANE_GENERIC

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        _check_grid(self.values, self.pixel_size, min_size=16, even=True)
        if self.plane not in _FIELD_PLANES:
            raise ValidationError(f"unknown plane tag {self.plane!r}")

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    def total_intensity(self):
        """Sum of |psi|^2 times pixel area."""
        return float(np.sum(np.abs(self.values) ** 2)) * self.pixel_size**2

    def axis_coords(self, axis):
        n = self.values.shape[axis]
        return (np.arange(n) - n // 2) * self.pixel_size


@dataclass
class RadialProfile:
    """Radial profile (s, value) with uniform bin width."""

    s: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.s.ndim != 1 or self.s.shape != self.values.shape:
            raise ValidationError("profile s and values must be 1-D arrays of equal length")
        if self.s.size and np.any(np.diff(self.s) <= 0):
            raise ValidationError("profile s values must be strictly increasing")

    def __len__(self):
        return self.s.size


def centered_coords(n, step):
    """1-D centered coordinate vector with the origin at index n // 2."""
    return (np.arange(n) - n // 2) * step


def centered_mesh(width, height, step):
    """(x, y) coordinate arrays for a centered grid (broadcastable)."""
    x = centered_coords(width, step)[np.newaxis, :]
    y = centered_coords(height, step)[:, np.newaxis]
    return x, y


def frequency_step_for(n, pixel_size):
    """Frequency step of the DFT of an n-sample axis with the given pixel."""
    return 1.0 / (n * pixel_size)
