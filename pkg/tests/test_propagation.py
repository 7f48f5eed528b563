import math

import numpy as np
import pytest
from scipy import special

from lpptem import (
    ComplexField,
    GridSpec,
    RonchigramSetup,
    analytic_fringe_contrast,
    contrast_maximizing_offsets,
    electron_beam_from_voltage,
    fresnel_propagate,
    laser_mode_geometry,
    synthesize_ronchigram,
)
from lpptem.errors import SamplingError, ValidationError

K_LASER = 2.0 * math.pi / 1064e-9


def gaussian_field(n, pixel, waist):
    x = (np.arange(n) - n // 2) * pixel
    xx, yy = np.meshgrid(x, x)
    return ComplexField(np.exp(-(xx**2 + yy**2) / waist**2), pixel_size=pixel)


class TestFresnelPropagate:
    def test_round_trip_inverse(self):
        field = gaussian_field(256, 1.0e-6, 16e-6)
        k = 2.0 * math.pi / 500e-9
        forward = fresnel_propagate(field, 5e-4, k)
        back = fresnel_propagate(forward, -5e-4, k)
        peak = np.abs(field.values).max()
        assert np.max(np.abs(back.values - field.values)) < 1e-6 * peak

    def test_plane_wave_global_phase(self):
        n, pixel = 256, 1.0e-6
        wavelength = 500e-9
        k = 2.0 * math.pi / wavelength
        z = 1e-4
        field = ComplexField(np.ones((n, n), dtype=complex), pixel_size=pixel)
        out = fresnel_propagate(field, z, k).values
        # away from the zero-padding boundary the wave is unchanged up to e^{ikz}
        core = out[n // 4 : 3 * n // 4, n // 4 : 3 * n // 4] * np.exp(-1j * k * z)
        assert np.max(np.abs(core - 1.0)) < 5e-3
        assert np.abs(np.angle(core)).max() < 5e-3

    def test_gaussian_beam_spreads_by_sqrt2_at_rayleigh(self):
        # analytic Gaussian-beam solution as the oracle
        n, pixel = 512, 1.0e-6
        waist = 16e-6
        wavelength = 500e-9
        z_r = math.pi * waist**2 / wavelength
        field = gaussian_field(n, pixel, waist)
        out = fresnel_propagate(field, z_r, 2.0 * math.pi / wavelength)
        intensity = np.abs(out.values) ** 2
        x = (np.arange(n) - n // 2) * pixel
        xx = np.meshgrid(x, x)[0]
        second_moment = float((intensity * xx**2).sum() / intensity.sum())
        # <x^2> of exp(-2 r^2 / w^2) is w^2 / 4
        measured_w = 2.0 * math.sqrt(second_moment)
        assert measured_w == pytest.approx(math.sqrt(2.0) * waist, rel=0.01)

    def test_total_intensity_conserved(self):
        field = gaussian_field(256, 1.0e-6, 12e-6)
        out = fresnel_propagate(field, 5e-4, 2.0 * math.pi / 500e-9)
        assert out.total_intensity() == pytest.approx(field.total_intensity(), rel=1e-6)

    def test_sampling_violation_names_required_size(self):
        field = gaussian_field(64, 1.0e-6, 8e-6)
        with pytest.raises(SamplingError, match="at least"):
            fresnel_propagate(field, 2.0, 2.0 * math.pi / 500e-9)

    def test_zero_distance_rejected(self):
        field = gaussian_field(64, 1e-6, 8e-6)
        with pytest.raises(ValidationError):
            fresnel_propagate(field, 0.0, 1e7)


class TestContrastMaximizingOffsets:
    def test_first_offset_and_spacing(self, beam80):
        offsets = contrast_maximizing_offsets(beam80, 1064e-9, 4)
        assert offsets[0] == pytest.approx(33.9e-3, rel=2e-3)
        spacing = np.diff(offsets)
        assert np.allclose(spacing, 67.7e-3, rtol=2e-3)
        assert np.ptp(spacing) < 1e-12

    def test_scales_with_wavenumber(self, beam80, beam300):
        d80 = contrast_maximizing_offsets(beam80, 1064e-9, 1)[0]
        d300 = contrast_maximizing_offsets(beam300, 1064e-9, 1)[0]
        assert d300 / d80 == pytest.approx(beam300.wavenumber / beam80.wavenumber, rel=1e-12)

    def test_count_validation(self, beam80):
        with pytest.raises(ValidationError):
            contrast_maximizing_offsets(beam80, 1064e-9, 0)


class TestAnalyticFringeContrast:
    def test_zero_at_zero_offset(self, beam80):
        assert analytic_fringe_contrast(0.5, 0.0, beam80.wavenumber, K_LASER) == 0.0

    def test_small_phase_limit(self, beam80):
        # J1(x) ~ x/2, J0 ~ 1: contrast/eta0 -> sin(2 delta kL^2/k)
        delta = 0.02
        eta0 = 0.01
        c = analytic_fringe_contrast(eta0, delta, beam80.wavenumber, K_LASER)
        expected = math.sin(2.0 * delta * K_LASER**2 / beam80.wavenumber)
        assert c / eta0 == pytest.approx(expected, rel=1e-3)

    def test_period_in_delta(self, beam80):
        period = math.pi * beam80.wavenumber / K_LASER**2
        assert period == pytest.approx(135.5e-3, rel=2e-3)
        c1 = analytic_fringe_contrast(0.3, 0.011, beam80.wavenumber, K_LASER)
        c2 = analytic_fringe_contrast(0.3, 0.011 + period, beam80.wavenumber, K_LASER)
        assert c1 == pytest.approx(c2, rel=1e-9)

    def test_validity_guards(self, beam80):
        with pytest.raises(ValidationError):
            analytic_fringe_contrast(math.pi, 0.01, beam80.wavenumber, K_LASER)
        with pytest.warns(UserWarning):
            analytic_fringe_contrast(1.6, 0.01, beam80.wavenumber, K_LASER)


def exact_fringe_contrast(eta0, delta, k, k_laser, orders=12):
    """All-order Bessel expansion of the standing-wave image fundamental."""
    mu = 2.0 * delta * k_laser**2 / k
    b = eta0 / 2.0
    return 4.0 * sum(
        special.jv(n, b) * special.jv(n + 1, b) * math.sin((2 * n + 1) * mu)
        for n in range(orders)
    )


class TestSynthesizeRonchigram:
    def _contrast(self, beam, eta0_deg, delta, n=1024, pixel=130e-9):
        mode = laser_mode_geometry(1064e-9, 0.026, 0.0, math.radians(eta0_deg))
        setup = RonchigramSetup(
            beam=beam, mode=mode, delta=delta, focal_length=0.02, magnification=100.0
        )
        image = synthesize_ronchigram(setup, GridSpec(n, n, pixel))
        row = image.values[n // 2]
        x = (np.arange(n) - n // 2) * pixel  # plate-plane coordinates
        keep = np.abs(x) < 25e-6
        q = 2.0 / 1064e-9
        design = np.column_stack(
            [np.ones(keep.sum()), np.cos(2 * np.pi * q * x[keep]), np.sin(2 * np.pi * q * x[keep])]
        )
        coef, *_ = np.linalg.lstsq(design, row[keep], rcond=None)
        return -coef[1]

    def test_zero_phase_gives_uniform_image(self, beam80):
        mode = laser_mode_geometry(1064e-9, 0.026, 0.0, 0.0)
        setup = RonchigramSetup(
            beam=beam80, mode=mode, delta=0.0339, focal_length=0.02, magnification=100.0
        )
        image = synthesize_ronchigram(setup, GridSpec(256, 256, 130e-9))
        assert np.max(np.abs(image.values - 1.0)) < 1e-6

    def test_matches_exact_multi_order_series(self, beam80):
        # strongest oracle: all-order Bessel expansion of the pure grating
        for eta0_deg in (10.0, 38.0, 45.0):
            for frac in (0.25, 0.6):
                delta = frac * math.pi * beam80.wavenumber / K_LASER**2
                sim = self._contrast(beam80, eta0_deg, delta)
                exact = exact_fringe_contrast(
                    math.radians(eta0_deg), delta, beam80.wavenumber, K_LASER
                )
                assert sim == pytest.approx(exact, abs=0.01 * max(abs(exact), 0.05))

    def test_matches_two_term_form_in_small_phase_regime(self, beam80):
        for eta0_deg in (5.0, 15.0, 25.0):
            delta = contrast_maximizing_offsets(beam80, 1064e-9, 1)[0]
            sim = self._contrast(beam80, eta0_deg, delta)
            closed = analytic_fringe_contrast(
                math.radians(eta0_deg), delta, beam80.wavenumber, K_LASER
            )
            assert sim == pytest.approx(closed, rel=0.05)

    def test_fringe_period_on_detector(self, beam80):
        mode = laser_mode_geometry(1064e-9, 0.026, 0.0, math.radians(20.0))
        delta = 0.0339
        setup = RonchigramSetup(
            beam=beam80, mode=mode, delta=delta, focal_length=0.02, magnification=100.0
        )
        n, pixel = 1024, 130e-9
        image = synthesize_ronchigram(setup, GridSpec(n, n, pixel))
        row = image.values[n // 2] - 1.0
        spectrum = np.abs(np.fft.rfft(row))
        spectrum[0] = 0.0
        peak = np.argmax(spectrum)
        # parabolic refinement
        num = spectrum[peak - 1] - spectrum[peak + 1]
        den = spectrum[peak - 1] - 2 * spectrum[peak] + spectrum[peak + 1]
        shift = 0.5 * num / den if den != 0 else 0.0
        freq = (peak + shift) / (n * image.pixel_size)
        expected_period = (100.0 * 0.02 / delta) * 1064e-9 / 2.0
        assert 1.0 / freq == pytest.approx(expected_period, rel=0.01)

    def test_background_far_from_axis_is_one(self, beam80):
        mode = laser_mode_geometry(1064e-9, 0.026, 0.0, math.radians(38.0))
        setup = RonchigramSetup(
            beam=beam80, mode=mode, delta=-0.0339, focal_length=0.02, magnification=100.0
        )
        n, pixel = 1024, 130e-9
        image = synthesize_ronchigram(setup, GridSpec(n, n, pixel))
        y = (np.arange(n) - n // 2) * pixel
        far = (np.abs(y) > 3.5 * mode.waist) & (np.abs(y) < 0.9 * y.max())
        assert image.values[far, :].mean() == pytest.approx(1.0, abs=1e-3)

    def test_symmetric_under_y_flip(self, beam80):
        mode = laser_mode_geometry(1064e-9, 0.026, 0.0, math.radians(25.0))
        setup = RonchigramSetup(
            beam=beam80, mode=mode, delta=0.02, focal_length=0.02, magnification=100.0
        )
        # tall grid so the envelope has decayed at the y boundary
        image = synthesize_ronchigram(setup, GridSpec(256, 512, 130e-9))
        rows = image.values[1:]
        # y -> -y about the laser axis: row i pairs with row n-i; the
        # centered convention leaves row 0 unpaired
        assert np.max(np.abs(rows - rows[::-1])) < 2e-6

    def test_delta_sign_flips_fringe(self, beam80):
        c_pos = self._contrast(beam80, 20.0, 0.02, n=512)
        c_neg = self._contrast(beam80, 20.0, -0.02, n=512)
        assert c_neg == pytest.approx(-c_pos, rel=1e-3)

    def test_zero_delta_points_to_ctf_engine(self, beam80):
        mode = laser_mode_geometry(1064e-9, 0.026)
        with pytest.raises(ValidationError, match="ctf"):
            RonchigramSetup(beam=beam80, mode=mode, delta=0.0, focal_length=0.02, magnification=100.0)

    def test_fringe_sampling_enforced(self, beam80):
        mode = laser_mode_geometry(1064e-9, 0.026, 0.0, 0.3)
        setup = RonchigramSetup(
            beam=beam80, mode=mode, delta=0.02, focal_length=0.02, magnification=100.0
        )
        with pytest.raises(SamplingError):
            synthesize_ronchigram(setup, GridSpec(256, 256, 200e-9))
