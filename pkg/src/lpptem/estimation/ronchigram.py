"""Standing-wave image (Ronchigram) parameter estimation.

The fit follows a fixed stage order: background normalization and dead-pixel
removal, fringe-wavevector estimation, forward-model generation, center
initialization by cross-correlation, golden-section line searches over the
longitudinal and transverse laser position, a derivative-free simplex over
(eta0, NA, theta), and five outer repetitions of the position/joint stages.
Unless a plate offset is supplied the fit uses the lower-bound convention:
tilt = 0 and delta = -(pi/4) k / k_L^2, where the fringe contrast is maximal,
so the reported peak phase is a lower bound.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import ndimage, optimize, special

from ..errors import EstimationError, FitError, ValidationError
from ..physics import ElectronBeam, laser_mode_geometry, phase_profile
from ..propagation import fresnel_propagate
from ..raster import ComplexField, RasterImage

GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0

#: Relative residual tolerance of the joint simplex stage.
JOINT_STAGE_TOLERANCE = 1e-6


def estimate_standing_wave_vector(image: RasterImage):
    """Fringe wavevector (cycles/m) maximizing the 2-D Fourier magnitude.

    A coarse DFT peak search is refined by maximizing the continuous Fourier
    integral magnitude. The half-plane representative (positive x component,
    or positive y on the boundary) is returned. Raises EstimationError when
    no significant non-DC peak exists.
    """
    values = image.values
    demeaned = values - values.mean()
    scale = float(np.max(np.abs(demeaned)))
    if scale == 0.0 or scale < 1e-12 * max(1.0, abs(float(values.mean()))):
        raise EstimationError("image has no contrast; cannot estimate a fringe vector")
    spectrum = np.fft.fft2(demeaned)
    magnitude = np.abs(spectrum)
    magnitude[0, 0] = 0.0
    peak_idx = np.unravel_index(int(np.argmax(magnitude)), magnitude.shape)
    nonzero = magnitude[magnitude > 0]
    if nonzero.size == 0 or magnitude[peak_idx] < 8.0 * np.median(nonzero):
        raise EstimationError("no significant fringe peak in the image spectrum")
    h, w = values.shape
    fy = np.fft.fftfreq(h)[peak_idx[0]]
    fx = np.fft.fftfreq(w)[peak_idx[1]]

    iy = np.arange(h)[:, np.newaxis]
    ix = np.arange(w)[np.newaxis, :]

    def neg_magnitude(q):
        row = np.exp(-2j * math.pi * q[0] * iy[:, 0])
        col = np.exp(-2j * math.pi * q[1] * ix[0, :])
        return -abs(row @ demeaned @ col)

    res = optimize.minimize(
        neg_magnitude,
        x0=np.array([fy, fx]),
        method="Nelder-Mead",
        options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 400},
    )
    qy, qx = res.x / image.pixel_size
    if qx < 0 or (qx == 0 and qy < 0):
        qx, qy = -qx, -qy
    return (float(qx), float(qy))


@dataclass(frozen=True)
class RonchigramFitHints:
    """Fixed knowledge the Ronchigram fit needs alongside the micrograph."""

    beam: ElectronBeam
    laser_wavelength: float
    delta: float = None
    na_init: float = 0.026
    theta_counts_init: float = 0.5
    remove_dead_pixels: bool = True
    outer_repetitions: int = 5

    def resolved_delta(self):
        if self.delta is not None:
            if self.delta == 0:
                raise ValidationError("delta must be nonzero")
            return self.delta
        k_laser = 2.0 * math.pi / self.laser_wavelength
        return -math.pi / 4.0 * self.beam.wavenumber / k_laser**2


@dataclass
class RonchigramFit:
    """Result of the Ronchigram fit.

    ``wavevector`` is the fringe vector on the detector in cycles/m,
    ``center`` the laser-axis intersection in (column, row) pixels,
    ``theta_cl`` the coincidence-loss parameter per detected frame.
    """

    wavevector: tuple
    center: tuple
    peak_phase: float
    numerical_aperture: float
    theta_cl: float
    residual_norm: float
    background_counts: float
    delta: float
    objective_history: list = field(default_factory=list)
    n_dead_pixels: int = 0

    def __post_init__(self):
        if self.peak_phase < 0:
            raise FitError(f"fitted peak phase is negative: {self.peak_phase}")
        if not 0 < self.numerical_aperture <= 0.1:
            raise FitError(f"fitted NA out of range: {self.numerical_aperture}")
        if not math.isfinite(self.residual_norm):
            raise FitError("fit residual is not finite")


def remove_dead_pixels(counts):
    """Replace pixels > 6 MAD from a 5x5 median-filtered image by the median.

    Returns (cleaned, replaced_mask).
    """
    median_image = ndimage.median_filter(counts, size=5, mode="nearest")
    deviation = counts - median_image
    mad = float(np.median(np.abs(deviation)))
    if mad == 0.0:
        return counts.copy(), np.zeros_like(counts, dtype=bool)
    mask = np.abs(deviation) > 6.0 * mad
    cleaned = np.where(mask, median_image, counts)
    return cleaned, mask


class _RonchigramModel:
    """Forward model of the normalized micrograph on the data grid."""

    def __init__(self, shape, pixel_size, axis_angle, map_scale, delta, beam, laser_wavelength):
        self.shape = shape
        self.pixel_size = pixel_size
        self.delta = delta
        self.beam = beam
        self.laser_wavelength = laser_wavelength
        self.plate_pixel = pixel_size * map_scale
        h, w = shape
        # Detector pixel indices; the laser frame is rotated by the fringe
        # direction and scaled into the phase-plate plane.
        jx = np.arange(w)[np.newaxis, :].astype(np.float64)
        iy = np.arange(h)[:, np.newaxis].astype(np.float64)
        cos_r, sin_r = math.cos(axis_angle), math.sin(axis_angle)
        self._along_px = jx * cos_r + iy * sin_r
        self._across_px = -jx * sin_r + iy * cos_r
        self._cos_r, self._sin_r = cos_r, sin_r

    def center_shift(self, center, longitudinal, transverse):
        """Center moved by (longitudinal, transverse) detector pixels."""
        cx, cy = center
        return (
            cx + longitudinal * self._cos_r - transverse * self._sin_r,
            cy + longitudinal * self._sin_r + transverse * self._cos_r,
        )

    def normalized_image(self, center, peak_phase, numerical_aperture, theta_counts):
        cx, cy = center
        c_along = cx * self._cos_r + cy * self._sin_r
        c_across = -cx * self._sin_r + cy * self._cos_r
        along = (self._along_px - c_along) * self.plate_pixel
        across = (self._across_px - c_across) * self.plate_pixel
        mode = laser_mode_geometry(self.laser_wavelength, numerical_aperture, 0.0, peak_phase)
        eta = phase_profile(along, across, mode)
        plate = ComplexField(np.exp(-1j * eta), pixel_size=self.plate_pixel)
        propagated = fresnel_propagate(plate, self.delta, self.beam.wavenumber)
        intensity = np.abs(propagated.values) ** 2
        if theta_counts > 1e-12:
            intensity = -np.expm1(-intensity * theta_counts) / -np.expm1(-theta_counts)
        return intensity


def _golden_section(objective, lo, hi, tol, max_iter=60):
    """Golden-section minimum of a 1-D objective on [lo, hi]."""
    a, b = lo, hi
    c = b - GOLDEN_RATIO * (b - a)
    d = a + GOLDEN_RATIO * (b - a)
    fc, fd = objective(c), objective(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN_RATIO * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN_RATIO * (b - a)
            fd = objective(d)
    return (c, fc) if fc <= fd else (d, fd)


def _initial_peak_phase(contrast, delta, k, k_laser):
    """Invert the two-term fringe-contrast formula for an initial eta0."""
    osc = abs(math.sin(2.0 * delta * k_laser**2 / k))
    if osc < 1e-6 or contrast <= 0:
        return 0.05

    def mismatch(eta):
        return 4.0 * special.j1(eta / 2.0) / special.j0(eta / 2.0) * osc - contrast

    try:
        return float(optimize.brentq(mismatch, 1e-6, 2.4))
    except ValueError:
        return 2.0


def fit_ronchigram(image: RasterImage, hints: RonchigramFitHints) -> RonchigramFit:
    """Fit laser parameters to a standing-wave micrograph (counts per pixel).

    Returns a RonchigramFit; the objective value after the initial stage and
    after each outer repetition is recorded in ``objective_history`` and is
    non-increasing by construction.
    """
    counts = np.asarray(image.values, dtype=np.float64)
    h, w = counts.shape
    if h % 2 or w % 2:
        raise ValidationError("Ronchigram fitting requires even grid sizes")

    # Stage 1: dead pixels, then background normalization to unity.
    n_dead = 0
    if hints.remove_dead_pixels:
        counts, dead_mask = remove_dead_pixels(counts)
        n_dead = int(dead_mask.sum())
    background = float(np.median(counts))
    if background <= 0:
        raise EstimationError("background level is not positive; cannot normalize")
    data = counts / background

    # Stage 2: fringe wavevector.
    normalized = RasterImage(data, image.pixel_size, image.plane)
    q = estimate_standing_wave_vector(normalized)
    q_mag = math.hypot(*q)
    axis_angle = math.atan2(q[1], q[0])
    extent_along = abs(w * image.pixel_size * math.cos(axis_angle)) + abs(
        h * image.pixel_size * math.sin(axis_angle)
    )
    if extent_along * q_mag < 8.0:
        raise EstimationError(
            f"image spans only {extent_along * q_mag:.1f} fringe periods; need at least 8"
        )

    delta = hints.resolved_delta()
    k = hints.beam.wavenumber
    k_laser = 2.0 * math.pi / hints.laser_wavelength
    map_scale = q_mag * hints.laser_wavelength / 2.0  # |delta / (M f)|
    model = _RonchigramModel(
        (h, w), image.pixel_size, axis_angle, map_scale, delta, hints.beam, hints.laser_wavelength
    )
    fringe_px = 1.0 / (q_mag * image.pixel_size)

    # Stage 3: initial parameter guesses from the fringe amplitude.
    mode0 = laser_mode_geometry(hints.laser_wavelength, hints.na_init)
    row_phase = np.exp(-2j * math.pi * q[1] * image.pixel_size * np.arange(h))
    col_phase = np.exp(-2j * math.pi * q[0] * image.pixel_size * np.arange(w))
    fourier_amp = abs(row_phase @ (data - 1.0) @ col_phase)
    waist_px = mode0.waist / model.plate_pixel
    envelope_sum = waist_px * math.sqrt(math.pi / 2.0) * (
        w * abs(math.cos(axis_angle)) + h * abs(math.sin(axis_angle))
    )
    contrast_init = 2.0 * fourier_amp / max(envelope_sum, 1.0)
    eta0 = _initial_peak_phase(contrast_init, delta, k, k_laser)
    na = hints.na_init
    theta_counts = hints.theta_counts_init

    # Stage 4: center initialization by cross-correlation with the model.
    center = (w / 2.0, h / 2.0)
    model_image = model.normalized_image(center, max(eta0, 0.05), na, theta_counts)
    xcorr = np.fft.ifft2(
        np.fft.fft2(data - data.mean()) * np.conj(np.fft.fft2(model_image - model_image.mean()))
    ).real
    shift_idx = np.unravel_index(int(np.argmax(xcorr)), xcorr.shape)
    dy = shift_idx[0] if shift_idx[0] <= h // 2 else shift_idx[0] - h
    dx = shift_idx[1] if shift_idx[1] <= w // 2 else shift_idx[1] - w
    center = (center[0] + dx, center[1] + dy)

    def objective(c, e, n_a, th):
        if not (0.0 <= e <= 3.2 and 1e-4 < n_a <= 0.1 and 0.0 <= th <= 50.0):
            return 1e6
        predicted = model.normalized_image(c, e, n_a, th)
        return float(np.mean((predicted - data) ** 2))

    best = objective(center, eta0, na, theta_counts)
    history = [best]

    # Stages 5-7, repeated (stage 8).
    for _ in range(hints.outer_repetitions):
        for transverse_axis in (False, True):
            def line(t):
                if transverse_axis:
                    c = model.center_shift(center, 0.0, t)
                else:
                    c = model.center_shift(center, t, 0.0)
                return objective(c, eta0, na, theta_counts)

            t_best, f_best = _golden_section(line, -fringe_px, fringe_px, tol=1e-3 * fringe_px)
            if f_best < best:
                best = f_best
                if transverse_axis:
                    center = model.center_shift(center, 0.0, t_best)
                else:
                    center = model.center_shift(center, t_best, 0.0)

        res = optimize.minimize(
            lambda p: objective(center, p[0], p[1], p[2]),
            x0=np.array([eta0, na, theta_counts]),
            method="Nelder-Mead",
            options={
                "fatol": JOINT_STAGE_TOLERANCE * max(best, 1e-30),
                "xatol": 1e-7,
                "maxiter": 400,
            },
        )
        if res.fun < best:
            best = float(res.fun)
            eta0, na, theta_counts = (float(v) for v in res.x)
        history.append(best)

    if any(b > a + 1e-15 for a, b in zip(history, history[1:])):
        raise FitError(f"objective increased across repetitions: {history}")

    theta_cl = -np.expm1(-theta_counts) / background if theta_counts > 0 else 0.0
    return RonchigramFit(
        wavevector=q,
        center=(float(center[0]), float(center[1])),
        peak_phase=eta0,
        numerical_aperture=na,
        theta_cl=float(theta_cl),
        residual_norm=math.sqrt(best),
        background_counts=background,
        delta=delta,
        objective_history=history,
        n_dead_pixels=n_dead,
    )
