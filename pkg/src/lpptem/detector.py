"""Electron-counting camera nonlinearity and synthetic shot noise.

Coincidence loss: an electron-counting camera cannot separate electrons
landing in the same resolution cell within one frame, so the detected count
saturates as I_det = (1 - exp(-I_act * theta)) / theta. ``theta`` is a single
scalar per image.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SaturationError, ValidationError
from .raster import RasterImage


@dataclass(frozen=True)
class CoincidenceParams:
    """Coincidence-loss strength theta = (tau/T)(A/a), dimensionless."""

    theta: float

    def __post_init__(self):
        if not self.theta >= 0:
            raise ValidationError(f"theta must be non-negative, got {self.theta}")


def apply_coincidence_loss(actual_counts, params: CoincidenceParams):
    """Expected detected counts for given incident counts per pixel."""
    counts = np.asarray(actual_counts, dtype=np.float64)
    if np.any(counts < 0):
        raise ValidationError("actual counts must be non-negative")
    if params.theta == 0.0:
        out = counts.copy()
    else:
        # -expm1(-x) keeps the small-theta limit accurate.
        out = -np.expm1(-counts * params.theta) / params.theta
    if np.ndim(actual_counts) == 0:
        return float(out)
    return out


def invert_coincidence_loss(detected_counts, params: CoincidenceParams):
    """Incident counts that produce the given detected counts.

    Defined only below the saturation level 1/theta.
    """
    counts = np.asarray(detected_counts, dtype=np.float64)
    if np.any(counts < 0):
        raise ValidationError("detected counts must be non-negative")
    if params.theta == 0.0:
        out = counts.copy()
    else:
        scaled = counts * params.theta
        if np.any(scaled >= 1.0):
            raise SaturationError(
                f"detected counts reach the coincidence asymptote 1/theta = "
                f"{1.0 / params.theta:.6g}; the loss model has no preimage there"
            )
        out = -np.log1p(-scaled) / params.theta
    if np.ndim(detected_counts) == 0:
        return float(out)
    return out


def sample_poisson_counts(expected: RasterImage, seed: int) -> RasterImage:
    """Independent Poisson draws per pixel, deterministic for a fixed seed.

    Uses the counter-based Philox generator so results do not depend on
    thread count or evaluation order.
    """
    lam = expected.values
    if np.any(lam < 0):
        raise ValidationError("expected counts must be non-negative")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    return RasterImage(
        values=rng.poisson(lam).astype(np.float64),
        pixel_size=expected.pixel_size,
        plane=expected.plane,
    )
