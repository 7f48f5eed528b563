"""Laser-phase-plate contrast transfer function and weak-phase image synthesis.

A diffraction-plane position x corresponds to object spatial frequency
s = x / (lambda_e f), so the standing-wave phase profile becomes a
frequency-dependent phase delay eta(s). The symmetric CTF is
sin(eta(s) - eta(0) + gamma(s)) E(s); the general (inversion-asymmetric)
form is (i/2)(e^{i zeta(0)} e^{-i zeta(-s)} - e^{-i zeta(0)} e^{i zeta(s)}) E(s)
with zeta = gamma + eta. All stored maps put DC at the grid center.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import fft as sp_fft

from .errors import GridMismatchError, SamplingError, ValidationError
from .parallel import worker_count
from .physics import ElectronBeam, LaserMode, phase_profile
from .propagation import GridSpec
from .raster import (
    PLANE_FREQUENCY,
    RadialProfile,
    RasterImage,
    centered_mesh,
)

#: Default coherence-envelope half-maximum radius [1/m].
DEFAULT_ENVELOPE_HALF_MAX_RADIUS = 1.0 / 0.51e-9

#: Default half-angle (radians) of the wedge excluded around the laser axis
#: in angular averages. The occupied angular range is not sharply defined, so
#: this is configurable everywhere it is used.
DEFAULT_WEDGE_HALF_ANGLE = math.radians(15.0)

#: |eta| / eta0 level that delimits the laser-affected stripe; e^-2 matches
#: the waist convention of the Gaussian envelope.
STRIPE_THRESHOLD_FRACTION = math.exp(-2.0)


@dataclass(frozen=True)
class OpticsConfig:
    """Imaging-side optics: focal length, defocus, Cs, coherence envelope.

    ``defocus`` is positive for underfocus and negative for overfocus.
    """

    focal_length: float
    defocus: float = 0.0
    spherical_aberration: float = 0.0
    envelope_half_max_radius: float = DEFAULT_ENVELOPE_HALF_MAX_RADIUS

    def __post_init__(self):
        if not self.focal_length > 0:
            raise ValidationError(f"focal length must be positive, got {self.focal_length}")
        if not self.envelope_half_max_radius > 0:
            raise ValidationError("envelope half-max radius must be positive")
        if self.spherical_aberration < 0:
            raise ValidationError("spherical aberration must be non-negative")


@dataclass(frozen=True)
class PlateAlignment:
    """Beam position relative to the laser, plus in-plane laser orientation.

    ``transverse_offset`` displaces the unscattered beam along the laser
    propagation direction (standing-wave axis), ``lateral_offset`` along the
    perpendicular; ``rotation`` orients the laser axis in the frequency plane.
    """

    transverse_offset: float = 0.0
    lateral_offset: float = 0.0
    rotation: float = 0.0

    def __post_init__(self):
        for name in ("transverse_offset", "lateral_offset", "rotation"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if not 0.0 <= self.rotation < math.pi:
            raise ValidationError(f"rotation must lie in [0, pi), got {self.rotation}")


CENTERED = PlateAlignment()


@dataclass
class CtfMap:
    """CTF values over (s_x, s_y), DC at the grid center.

    ``symmetric`` records whether the inversion-symmetric sine form or the
    general form produced the values. The general form is complex-Hermitian
    when the alignment breaks inversion symmetry; the real part is stored and
    the largest discarded imaginary magnitude is kept in ``max_imag``.
    """

    values: np.ndarray
    freq_step: float
    symmetric: bool
    laser_axis_angle: float = 0.0
    max_imag: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValidationError("CTF map must be 2-D")
        if not self.freq_step > 0:
            raise ValidationError("frequency step must be positive")
        peak = float(np.max(np.abs(self.values))) if self.values.size else 0.0
        if peak > 1.0 + 1e-9:
            raise ValidationError(f"CTF values must lie in [-1, 1], found magnitude {peak}")

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    def frequency_mesh(self):
        return centered_mesh(self.width, self.height, self.freq_step)


def aberration_phase(s, config: OpticsConfig, beam: ElectronBeam):
    """Wave aberration gamma(s) = pi/2 (-2 dZ lambda s^2 + Cs lambda^3 s^4)."""
    s = np.asarray(s, dtype=np.float64)
    lam = beam.wavelength
    value = math.pi / 2.0 * (
        -2.0 * config.defocus * lam * s**2
        + config.spherical_aberration * lam**3 * s**4
    )
    return float(value) if value.ndim == 0 else value


def envelope(s, config: OpticsConfig):
    """Gaussian coherence envelope with the configured half-maximum radius."""
    s = np.asarray(s, dtype=np.float64)
    value = np.exp(-math.log(2.0) * (s / config.envelope_half_max_radius) ** 2)
    return float(value) if value.ndim == 0 else value


def laser_phase_of_frequency(
    s_x,
    s_y,
    mode: LaserMode,
    align: PlateAlignment,
    focal_length: float,
    beam: ElectronBeam,
):
    """Laser phase delay eta(s) at spatial frequency (s_x, s_y).

    Frequencies map to diffraction-plane positions through s * lambda_e * f;
    the position is then rotated into the laser frame and offset by the beam
    center before evaluating the phase profile.
    """
    scale = beam.wavelength * focal_length
    sx = np.asarray(s_x, dtype=np.float64) * scale
    sy = np.asarray(s_y, dtype=np.float64) * scale
    cos_r = math.cos(align.rotation)
    sin_r = math.sin(align.rotation)
    along = sx * cos_r + sy * sin_r + align.transverse_offset
    across = -sx * sin_r + sy * cos_r + align.lateral_offset
    return phase_profile(along, across, mode)


def unscattered_phase(mode: LaserMode, align: PlateAlignment) -> float:
    """eta(0): the phase delay at the unscattered-beam position."""
    return float(phase_profile(align.transverse_offset, align.lateral_offset, mode))


def required_frequency_step(mode: LaserMode, focal_length: float, beam: ElectronBeam) -> float:
    """Largest frequency step that resolves the standing-wave structure."""
    return mode.wavelength / (8.0 * beam.wavelength * focal_length)


def ctf_map(
    grid: GridSpec,
    config: OpticsConfig,
    mode: LaserMode,
    align: PlateAlignment,
    beam: ElectronBeam,
    symmetric: bool = True,
) -> CtfMap:
    """Compute the CTF on a frequency grid (GridSpec.pixel_size = step in 1/m).

    ``symmetric`` selects the sine form; otherwise the general form is
    evaluated, which reduces to the sine form whenever eta(s) = eta(-s).
    """
    step = grid.pixel_size
    step_max = required_frequency_step(mode, config.focal_length, beam)
    if step > step_max * (1.0 + 1e-12):
        raise SamplingError(
            f"frequency step {step:.6g} /m does not resolve the standing wave; "
            f"need step <= {step_max:.6g} /m (grid of "
            f"{int(math.ceil(grid.width * step / step_max))} samples at this extent)"
        )
    sx, sy = centered_mesh(grid.width, grid.height, step)
    s_mag = np.hypot(sx, sy)
    gamma = aberration_phase(s_mag, config, beam)
    env = envelope(s_mag, config)
    eta = laser_phase_of_frequency(sx, sy, mode, align, config.focal_length, beam)
    eta0 = unscattered_phase(mode, align)
    max_imag = 0.0
    if symmetric:
        values = np.sin(eta - eta0 + gamma) * env
    else:
        eta_neg = laser_phase_of_frequency(-sx, -sy, mode, align, config.focal_length, beam)
        zeta = gamma + eta
        zeta_neg = gamma + eta_neg  # gamma is radial, so gamma(-s) = gamma(s)
        zeta0 = eta0
        ctf_complex = 0.5j * (
            np.exp(1j * (zeta0 - zeta_neg)) - np.exp(1j * (zeta - zeta0))
        )
        values = ctf_complex.real * env
        max_imag = float(np.max(np.abs(ctf_complex.imag * env)))
    return CtfMap(
        values=values,
        freq_step=step,
        symmetric=symmetric,
        laser_axis_angle=align.rotation,
        max_imag=max_imag,
    )


def simulate_weak_phase_image(object_phase: RasterImage, ctf: CtfMap) -> RasterImage:
    """Image of a weak phase object: 1 + IFT[-2 phi_hat(s) CTF(s)].

    The object raster and the CTF map must share the grid: equal shapes and
    ctf.freq_step = 1 / (n * pixel_size).
    """
    phi = object_phase.values
    if phi.shape != ctf.values.shape:
        raise GridMismatchError(
            f"object grid {phi.shape} does not match CTF grid {ctf.values.shape}"
        )
    expected_step = 1.0 / (object_phase.width * object_phase.pixel_size)
    if not math.isclose(ctf.freq_step, expected_step, rel_tol=1e-9):
        raise GridMismatchError(
            f"CTF frequency step {ctf.freq_step:.9g} does not match the object "
            f"grid's {expected_step:.9g}"
        )
    peak_phi = float(np.max(np.abs(phi))) if phi.size else 0.0
    if peak_phi > 0.2:
        import warnings

        warnings.warn(
            f"object phase peak {peak_phi:.3f} rad exceeds the weak-phase regime (0.2 rad)",
            stacklevel=2,
        )
    workers = worker_count()
    spectrum = sp_fft.fft2(phi, workers=workers)
    transfer = np.fft.ifftshift(ctf.values)
    image_complex = sp_fft.ifft2(-2.0 * spectrum * transfer, workers=workers)
    peak = float(np.max(np.abs(1.0 + image_complex)))
    residue = float(np.max(np.abs(image_complex.imag)))
    if peak > 0 and residue > 1e-8 * peak:
        raise ValidationError(
            f"imaginary residue {residue:.3e} exceeds 1e-8 of peak {peak:.3e}; "
            "the CTF map is not Hermitian-compatible with a real image"
        )
    return RasterImage(
        values=1.0 + image_complex.real,
        pixel_size=object_phase.pixel_size,
        plane=object_phase.plane,
    )


def rms_angular_average(
    spectrum,
    wedge_half_angle: float = 0.0,
    axis_angle=None,
    freq_step=None,
) -> RadialProfile:
    """Radial RMS profile of a CTF map or power spectrum.

    Per radial bin (width = frequency step) the RMS is taken over all pixels
    whose polar angle lies outside the double wedge of the given half-angle
    about the axis. Accepts a CtfMap, a frequency-plane RasterImage, or a
    bare array plus ``freq_step``. Only full rings (radius <= half the
    smaller grid side) are returned. DC is always retained.
    """
    if isinstance(spectrum, CtfMap):
        values = spectrum.values
        step = spectrum.freq_step
        if axis_angle is None:
            axis_angle = spectrum.laser_axis_angle
    elif isinstance(spectrum, RasterImage):
        values = spectrum.values
        step = spectrum.pixel_size
    else:
        values = np.asarray(spectrum, dtype=np.float64)
        step = freq_step
        if step is None:
            raise ValidationError("freq_step is required for bare-array input")
    if axis_angle is None:
        axis_angle = 0.0
    if not 0.0 <= wedge_half_angle < math.pi / 2.0:
        raise ValidationError(
            f"wedge half-angle must lie in [0, pi/2), got {wedge_half_angle}"
        )
    h, w = values.shape
    sx, sy = centered_mesh(w, h, step)
    radius_bins = np.rint(np.hypot(sx, sy) / step).astype(np.int64)
    n_bins = min(h, w) // 2 + 1
    keep = radius_bins < n_bins
    if wedge_half_angle > 0.0:
        angle = np.arctan2(sy, sx)
        dist = np.abs(((angle - axis_angle + math.pi / 2.0) % math.pi) - math.pi / 2.0)
        keep &= dist >= wedge_half_angle
        keep[h // 2, w // 2] = True
    bins = radius_bins[keep]
    squares = values[keep] ** 2
    counts = np.bincount(bins, minlength=n_bins)
    if np.any(counts == 0):
        first = int(np.argmin(counts > 0))
        raise ValidationError(
            f"radial bin {first} has no retained pixels; wedge of "
            f"{wedge_half_angle:.3f} rad over-excludes this grid"
        )
    sums = np.bincount(bins, weights=squares, minlength=n_bins)
    rms = np.sqrt(sums / counts)
    return RadialProfile(s=np.arange(n_bins) * step, values=rms)


@dataclass(frozen=True)
class StripeSignature:
    """Laser-affected bands in the frequency plane.

    ``centers`` are positions along the axis perpendicular to the laser
    direction; a centered plate gives a single stripe through the origin.
    """

    count: int
    centers: tuple
    half_width: float
    axis_angle: float


def misalignment_signature(
    mode: LaserMode,
    align: PlateAlignment,
    focal_length: float,
    beam: ElectronBeam,
    threshold_fraction: float = STRIPE_THRESHOLD_FRACTION,
) -> StripeSignature:
    """Locate the stripes where the laser phase (of s or -s) exceeds a threshold.

    A real image's spectrum couples s with -s, so a laser line displaced by
    more than one waist from the beam shows up as two symmetric stripes; they
    merge into one centered stripe as the lateral offset goes to zero.
    """
    if not 0.0 < threshold_fraction < 1.0:
        raise ValidationError("threshold fraction must lie in (0, 1)")
    if mode.peak_phase == 0.0:
        return StripeSignature(count=0, centers=(), half_width=0.0, axis_angle=align.rotation)
    scale = beam.wavelength * focal_length
    stripe_half = mode.waist / scale
    reach = (abs(align.lateral_offset) + 5.0 * mode.waist) / scale
    t = np.linspace(-reach, reach, 8192)
    # Max over one standing-wave period along the axis captures the antinode.
    u = np.linspace(-0.5, 0.5, 65)[:, np.newaxis] * mode.wavelength
    along = u + align.transverse_offset
    across = t[np.newaxis, :] * scale + align.lateral_offset
    direct = np.max(np.abs(phase_profile(along, np.broadcast_to(across, (65, t.size)), mode)), axis=0)
    mirrored = direct[::-1]  # eta(-s) sampled on the symmetric t grid
    profile = np.maximum(direct, mirrored)
    mask = profile > threshold_fraction * mode.peak_phase
    if not np.any(mask):
        return StripeSignature(count=0, centers=(), half_width=0.0, axis_angle=align.rotation)
    starts = np.flatnonzero(mask[1:] & ~mask[:-1]) + 1
    stops = np.flatnonzero(mask[:-1] & ~mask[1:]) + 1
    if mask[0]:
        starts = np.concatenate(([0], starts))
    if mask[-1]:
        stops = np.concatenate((stops, [mask.size]))
    centers = []
    widths = []
    for a, b in zip(starts, stops):
        centers.append(0.5 * (t[a] + t[b - 1]))
        widths.append(0.5 * (t[b - 1] - t[a]))
    return StripeSignature(
        count=len(centers),
        centers=tuple(float(c) for c in centers),
        half_width=float(np.mean(widths)),
        axis_angle=align.rotation,
    )
