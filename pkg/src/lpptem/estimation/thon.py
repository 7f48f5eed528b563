"""Thon-ring spectrum fitting: astigmatism, CTF zeros, defocus polynomial,
and the node/antinode phase scan.

The zero locations of the angularly averaged spectrum carry the phase
as^4 + bs^2 + c: consecutive minima are assigned consecutive multiples of pi
starting from the first resolvable minimum, the polynomial is fit by least
squares, and the constant term tracks the laser-induced phase (plus any
amplitude-contrast offset, which cancels in differences between positions).
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import ndimage, optimize

from ..errors import EstimationError, FitError, ValidationError
from ..raster import RadialProfile, RasterImage
from ..ctf import rms_angular_average


@dataclass
class CtfFit:
    """Quartic phase fit zeta(s) = a s^4 + b s^2 + c through assigned zeros.

    ``quartic_coeff`` maps to spherical aberration (a = pi/2 Cs lambda^3),
    ``quadratic_coeff`` to defocus (b = -pi dZ lambda); ``constant_phase``
    absorbs the laser phase and amplitude contrast. ``ellipse`` is
    (axis ratio >= 1, orientation in radians) when astigmatism was corrected.
    """

    quartic_coeff: float
    quadratic_coeff: float
    constant_phase: float
    ellipse: tuple = None
    zero_locations: tuple = ()

    def __post_init__(self):
        zeros = tuple(float(s) for s in self.zero_locations)
        if any(b <= a for a, b in zip(zeros, zeros[1:])):
            raise ValidationError("zero locations must be strictly increasing")
        self.zero_locations = zeros
        if self.ellipse is not None:
            ratio, orientation = self.ellipse
            if not ratio >= 1.0:
                raise ValidationError(f"ellipse ratio must be >= 1, got {ratio}")
            self.ellipse = (float(ratio), float(orientation))

    def defocus(self, beam):
        """Defocus in meters implied by the quadratic coefficient."""
        return -self.quadratic_coeff / (math.pi * beam.wavelength)

    def spherical_aberration(self, beam):
        """Cs in meters implied by the quartic coefficient."""
        return 2.0 * self.quartic_coeff / (math.pi * beam.wavelength**3)


@dataclass
class PhaseScanResult:
    """Peak-to-peak phase modulation and spatial period of a beam-position scan."""

    positions: np.ndarray
    phases: np.ndarray
    peak_to_peak: float
    period: float

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.phases = np.asarray(self.phases, dtype=np.float64)
        if self.peak_to_peak < 0:
            raise ValidationError("peak-to-peak must be non-negative")
        if not self.period > 0:
            raise ValidationError("period must be positive")


def locate_ctf_zeros(profile: RadialProfile, smoothing_sigma: float = 1.0,
                     s_min: float = None, s_max: float = None) -> np.ndarray:
    """Positions of the minima of a radial profile, sub-bin refined.

    The profile is pre-smoothed with a Gaussian of ``smoothing_sigma`` bins;
    minima are refined by a local quadratic through the three bracketing
    samples. Fewer than two minima raise EstimationError.
    """
    values = profile.values
    if smoothing_sigma > 0:
        values = ndimage.gaussian_filter1d(values, smoothing_sigma, mode="nearest")
    s = profile.s
    lo = 0 if s_min is None else int(np.searchsorted(s, s_min))
    hi = s.size if s_max is None else int(np.searchsorted(s, s_max, side="right"))
    zeros = []
    for i in range(max(lo, 1), min(hi, s.size - 1)):
        if values[i] < values[i - 1] and values[i] <= values[i + 1]:
            denom = values[i - 1] - 2.0 * values[i] + values[i + 1]
            shift = 0.0
            if denom > 0:
                shift = 0.5 * (values[i - 1] - values[i + 1]) / denom
                shift = float(np.clip(shift, -1.0, 1.0))
            zeros.append(s[i] + shift * (s[1] - s[0]))
    if len(zeros) < 2:
        raise EstimationError(
            f"found {len(zeros)} minima; need at least 2 (profile may be monotone "
            "or the search range too narrow)"
        )
    return np.asarray(zeros)


def assign_zero_phases(zeros, direction: int = 1, start_multiple: int = 1):
    """Assign consecutive multiples of pi to consecutive minima.

    ``direction`` is +1 when the aberration phase grows with frequency
    (overfocus) and -1 when it falls (underfocus); the sign cannot be read
    off a single power spectrum, so the caller supplies it.
    """
    if direction not in (-1, 1):
        raise ValidationError("direction must be +1 or -1")
    zeros = np.asarray(zeros, dtype=np.float64)
    order = np.argsort(zeros)
    phases = direction * math.pi * (start_multiple + np.arange(zeros.size))
    return list(zip(zeros[order], phases))


def fit_defocus_polynomial(zero_phases, fix_quartic: float = None) -> CtfFit:
    """Least-squares fit of zeta(s) = a s^4 + b s^2 + c to assigned zeros.

    ``zero_phases`` is a list of (s, phase) pairs. With ``fix_quartic`` the
    quartic coefficient is held at a known value (e.g. from a known Cs) and
    two zeros suffice; otherwise three are needed.
    """
    pairs = sorted((float(s), float(p)) for s, p in zero_phases)
    s = np.array([p[0] for p in pairs])
    phi = np.array([p[1] for p in pairs])
    needed = 2 if fix_quartic is not None else 3
    if s.size < needed:
        raise FitError(
            f"need at least {needed} zeros for the polynomial fit, got {s.size}"
            + ("" if fix_quartic is not None else "; consider fixing the quartic coefficient")
        )
    scale = float(s.max())
    u = (s / scale) ** 2
    if fix_quartic is not None:
        design = np.column_stack([u, np.ones_like(u)])
        target = phi - fix_quartic * s**4
    else:
        design = np.column_stack([u**2, u, np.ones_like(u)])
        target = phi
    coeffs, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < design.shape[1]:
        raise FitError(
            "zero set is rank-deficient for the quartic model; "
            "fix the quartic coefficient at a known spherical aberration"
        )
    if fix_quartic is not None:
        a = fix_quartic
        b = coeffs[0] / scale**2
        c = coeffs[1]
    else:
        a = coeffs[0] / scale**4
        b = coeffs[1] / scale**2
        c = coeffs[2]
    return CtfFit(
        quartic_coeff=float(a),
        quadratic_coeff=float(b),
        constant_phase=float(c),
        zero_locations=tuple(s),
    )


def _ellipse_shape(theta, ratio, orientation):
    """Ellipse radius vs angle, normalized to unit geometric scale."""
    t = theta - orientation
    return 1.0 / np.sqrt(np.cos(t) ** 2 + ratio**2 * np.sin(t) ** 2)


def _ring_points(values, step, reference_radii, n_angle_bins, wedge_half_angle, axis_angle,
                 smoothing_sigma):
    """Per-angular-bin radial minima near each reference ring."""
    h, w = values.shape
    iy, ix = np.indices((h, w))
    sx = (ix - w // 2).astype(np.float64)
    sy = (iy - h // 2).astype(np.float64)
    radius = np.hypot(sx, sy)
    angle = np.mod(np.arctan2(sy, sx), math.pi)
    r_bins = np.rint(radius).astype(np.int64)
    n_r = min(h, w) // 2 + 1
    ring_spacing = np.min(np.diff(reference_radii)) if len(reference_radii) > 1 else reference_radii[0]
    window = max(3, int(ring_spacing / step / 3.0))
    points = []
    bin_edges = np.linspace(0.0, math.pi, n_angle_bins + 1)
    for b in range(n_angle_bins):
        theta_c = 0.5 * (bin_edges[b] + bin_edges[b + 1])
        if wedge_half_angle > 0:
            dist = abs(((theta_c - axis_angle + math.pi / 2.0) % math.pi) - math.pi / 2.0)
            if dist < wedge_half_angle:
                continue
        in_bin = (angle >= bin_edges[b]) & (angle < bin_edges[b + 1]) & (r_bins < n_r)
        counts = np.bincount(r_bins[in_bin], minlength=n_r)
        sums = np.bincount(r_bins[in_bin], weights=values[in_bin], minlength=n_r)
        valid = counts > 0
        prof = np.full(n_r, np.nan)
        prof[valid] = sums[valid] / counts[valid]
        # fill gaps (small radii may miss a narrow bin) by interpolation
        if np.any(~valid):
            idx = np.arange(n_r)
            prof = np.interp(idx, idx[valid], prof[valid])
        prof = ndimage.gaussian_filter1d(prof, smoothing_sigma, mode="nearest")
        for ref in reference_radii:
            center = int(round(ref / step))
            lo = max(center - window, 1)
            hi = min(center + window + 1, n_r - 1)
            if hi - lo < 3:
                continue
            local = prof[lo:hi]
            i = int(np.argmin(local)) + lo
            if i <= lo or i >= hi - 1:
                continue
            denom = prof[i - 1] - 2.0 * prof[i] + prof[i + 1]
            shift = 0.5 * (prof[i - 1] - prof[i + 1]) / denom if denom > 0 else 0.0
            points.append((theta_c, (i + float(np.clip(shift, -1, 1))) * step, ref))
    return points


def correct_astigmatism(power_spectrum: RasterImage, n_angle_bins: int = 36,
                        max_rings: int = 4, wedge_half_angle: float = 0.0,
                        axis_angle: float = 0.0, smoothing_sigma: float = 1.0,
                        s_min: float = None, s_max: float = None):
    """Estimate Thon-ring astigmatism and resample the spectrum to circularize.

    The ellipse is fit to ring-minimum loci (algebraic conic least squares,
    then geometric refinement of a shared angular modulation across rings);
    the spectrum is then radially rescaled angle by angle so rings become
    circles while their mean radii stay unchanged. Returns
    (corrected_spectrum, (axis_ratio, orientation)).
    """
    values = power_spectrum.values
    step = power_spectrum.pixel_size
    iso = rms_angular_average(power_spectrum, wedge_half_angle, axis_angle)
    try:
        minima = locate_ctf_zeros(iso, smoothing_sigma, s_min=s_min, s_max=s_max)
    except EstimationError as exc:
        raise EstimationError(f"Thon rings not detectable: {exc}") from exc
    reference = minima[:max_rings]
    points = _ring_points(
        values, step, reference, n_angle_bins, wedge_half_angle, axis_angle, smoothing_sigma
    )
    if len(points) < 6:
        raise EstimationError(
            f"only {len(points)} usable ring-minimum points; rings not detectable"
        )
    theta = np.array([p[0] for p in points])
    radius = np.array([p[1] for p in points])
    ref_of = np.array([p[2] for p in points])

    # Algebraic init: normalize each ring to its mean radius, fit one conic
    # A x^2 + 2 B x y + C y^2 = 1 through the pooled points.
    norm = radius.copy()
    for ref in np.unique(ref_of):
        sel = ref_of == ref
        norm[sel] = radius[sel] / radius[sel].mean()
    x = norm * np.cos(theta)
    y = norm * np.sin(theta)
    design = np.column_stack([x**2, 2.0 * x * y, y**2])
    coef, *_ = np.linalg.lstsq(design, np.ones_like(x), rcond=None)
    conic = np.array([[coef[0], coef[1]], [coef[1], coef[2]]])
    eigvals, eigvecs = np.linalg.eigh(conic)
    if np.any(eigvals <= 0):
        raise EstimationError("ring points do not describe an ellipse")
    ratio0 = math.sqrt(eigvals[1] / eigvals[0])
    orient0 = math.atan2(eigvecs[1, 0], eigvecs[0, 0]) % math.pi

    # Geometric refinement with shared (ratio, orientation), per-ring scale.
    refs = np.unique(ref_of)
    scales0 = np.array([radius[ref_of == r].mean() for r in refs])

    def residuals(params):
        log_ratio, orientation = params[0], params[1]
        ring_scales = params[2:]
        shape = _ellipse_shape(theta, math.exp(log_ratio), orientation)
        model = np.zeros_like(radius)
        for k, r in enumerate(refs):
            sel = ref_of == r
            model[sel] = ring_scales[k] * shape[sel]
        return model - radius

    p0 = np.concatenate([[math.log(ratio0), orient0], scales0])
    sol = optimize.least_squares(residuals, p0, method="lm", max_nfev=2000)
    ratio = math.exp(sol.x[0])
    orientation = sol.x[1] % math.pi
    if ratio < 1.0:
        ratio = 1.0 / ratio
        orientation = (orientation + math.pi / 2.0) % math.pi

    # Angle-dependent radial rescaling, unit mean so mean radii are kept.
    dense = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
    mean_shape = float(np.mean(_ellipse_shape(dense, ratio, orientation)))
    h, w = values.shape
    iy, ix = np.indices((h, w))
    sx = (ix - w // 2).astype(np.float64)
    sy = (iy - h // 2).astype(np.float64)
    ang = np.arctan2(sy, sx)
    rho = _ellipse_shape(ang, ratio, orientation) / mean_shape
    src_x = sx * rho + w // 2
    src_y = sy * rho + h // 2
    corrected = ndimage.map_coordinates(
        values, np.array([src_y.ravel(), src_x.ravel()]), order=3, mode="nearest"
    ).reshape(values.shape)
    image = RasterImage(corrected, pixel_size=step, plane=power_spectrum.plane)
    return image, (float(ratio), float(orientation))


def analyze_phase_scan(scan) -> PhaseScanResult:
    """Peak-to-peak phase and period from fitted constants along a scan.

    ``scan`` is a sequence of (position, CtfFit) or (position, phase) pairs.
    Peak-to-peak is std(phases) * 2^(3/2) (the RMS-to-peak-to-peak factor of
    a sinusoid); the period comes from a continuous refinement of the
    dominant Fourier component of phase vs position.
    """
    if len(scan) < 8:
        raise EstimationError(f"need at least 8 scan positions, got {len(scan)}")
    positions = np.array([float(p) for p, _ in scan])
    phases = np.array(
        [c.constant_phase if isinstance(c, CtfFit) else float(c) for _, c in scan]
    )
    order = np.argsort(positions)
    positions, phases = positions[order], phases[order]
    span = positions[-1] - positions[0]
    if span <= 0:
        raise EstimationError("scan positions are degenerate")
    demeaned = phases - phases.mean()
    peak_to_peak = float(np.std(demeaned) * 2.0 ** 1.5)

    min_spacing = float(np.min(np.diff(positions)))
    if min_spacing <= 0:
        raise EstimationError("scan positions must be distinct")
    f_max = 0.5 / min_spacing

    def neg_power(freq):
        z = np.exp(-2j * math.pi * freq * positions)
        return -abs(np.dot(demeaned, z))

    coarse = np.linspace(0.25 / span, f_max, 512)
    f0 = coarse[int(np.argmin([neg_power(f) for f in coarse]))]
    res = optimize.minimize_scalar(
        neg_power,
        bracket=(max(f0 - 0.25 / span, 0.05 / span), f0, f0 + 0.25 / span),
        method="brent",
        options={"xtol": 1e-12},
    )
    frequency = float(res.x) if res.x > 0 else f0
    period = 1.0 / frequency
    if span < period * (1.0 - 1e-9):
        raise EstimationError(
            f"scan span {span:.3e} is shorter than the detected period {period:.3e}"
        )
    return PhaseScanResult(
        positions=positions, phases=phases, peak_to_peak=peak_to_peak, period=period
    )
