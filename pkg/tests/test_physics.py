import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from lpptem import (
    electron_beam_from_voltage,
    laser_field_from_intensity,
    laser_field_from_power,
    laser_mode_geometry,
    peak_phase_from_intensity,
    phase_profile,
    ponderomotive_potential,
)
from lpptem.errors import ValidationError
from lpptem.physics import LaserField, antinode_intensity_from_power

mp.mp.dps = 30

# CODATA 2018, independent of the package's constants module
_C = mp.mpf("299792458")
_E = mp.mpf("1.602176634e-19")
_H = mp.mpf("6.62607015e-34")
_ME = mp.mpf("9.1093837015e-31")
_EPS0 = mp.mpf("8.8541878128e-12")


def _wavelength_oracle(kilovolts):
    energy = _E * kilovolts * 1000
    rest = _ME * _C * _C
    return _H * _C / mp.sqrt(energy * (energy + 2 * rest))


class TestElectronBeam:
    @pytest.mark.parametrize("kv", [80.0, 300.0, 1.0, 1000.0])
    def test_wavelength_against_high_precision_oracle(self, kv):
        beam = electron_beam_from_voltage(kv)
        expected = float(_wavelength_oracle(kv))
        assert beam.wavelength == pytest.approx(expected, rel=1e-9)

    def test_reference_values(self):
        # frozen from the mpmath oracle above
        assert electron_beam_from_voltage(80).wavelength == pytest.approx(4.175716077e-12, rel=1e-9)
        assert electron_beam_from_voltage(300).wavelength == pytest.approx(1.968748901e-12, rel=1e-9)

    @given(st.floats(min_value=0.1, max_value=3000.0))
    def test_wavenumber_times_wavelength_is_two_pi(self, kv):
        beam = electron_beam_from_voltage(kv)
        assert beam.wavenumber * beam.wavelength == pytest.approx(2.0 * math.pi, rel=1e-15)

    @given(st.floats(min_value=0.1, max_value=3000.0))
    def test_speed_below_c(self, kv):
        assert 0 < electron_beam_from_voltage(kv).speed < 299792458.0

    def test_nonpositive_voltage_rejected(self):
        with pytest.raises(ValidationError):
            electron_beam_from_voltage(0.0)
        with pytest.raises(ValidationError):
            electron_beam_from_voltage(-80.0)


class TestLaserMode:
    def test_waist_and_rayleigh_range(self):
        mode = laser_mode_geometry(1064e-9, 0.026)
        assert mode.waist == pytest.approx(1064e-9 / (math.pi * 0.026), rel=1e-15)
        assert mode.waist == pytest.approx(13.03e-6, rel=1e-3)
        assert mode.rayleigh_range == pytest.approx(501e-6, rel=2e-3)
        assert mode.kappa == pytest.approx(2958.6, rel=1e-4)

    @given(
        st.floats(min_value=2e-7, max_value=2e-6),
        st.floats(min_value=1e-3, max_value=0.1),
    )
    def test_derived_fields_consistent(self, wavelength, na):
        mode = laser_mode_geometry(wavelength, na)
        assert mode.waist * math.pi * na == pytest.approx(wavelength, rel=1e-14)
        assert mode.rayleigh_range * math.pi * na**2 == pytest.approx(wavelength, rel=1e-14)
        assert mode.kappa * na**2 == pytest.approx(2.0, rel=1e-14)

    def test_na_guard(self):
        with pytest.raises(ValidationError):
            laser_mode_geometry(1064e-9, 0.11)
        with pytest.raises(ValidationError):
            laser_mode_geometry(1064e-9, 0.0)
        with pytest.raises(ValidationError):
            laser_mode_geometry(1064e-9, 0.026, peak_phase=-0.1)


class TestPonderomotivePotential:
    def test_zero_field(self):
        assert ponderomotive_potential(0.0, 1064e-9) == 0.0

    def test_43_gw_per_cm2(self):
        # U = e^2 E^2 lambda^2 / (16 pi^2 m c^2), E^2 = 2 I / (eps0 c),
        # evaluated independently with mpmath
        intensity = mp.mpf("43e13")
        e2 = 2 * intensity / (_EPS0 * _C)
        expected = _E**2 * e2 * mp.mpf("1064e-9") ** 2 / (16 * mp.pi**2 * _ME * _C**2)
        amplitude = math.sqrt(2.0 * 43e13 / (8.8541878128e-12 * 299792458.0))
        result = ponderomotive_potential(amplitude, 1064e-9)
        assert result == pytest.approx(float(expected), rel=1e-12)
        assert result / 1.602176634e-19 == pytest.approx(4.545e-3, rel=1e-3)  # ~4.5 meV

    @given(st.floats(min_value=1e3, max_value=1e10))
    def test_quadratic_in_field(self, amplitude):
        u1 = ponderomotive_potential(amplitude, 1064e-9)
        u2 = ponderomotive_potential(2.0 * amplitude, 1064e-9)
        assert u2 == pytest.approx(4.0 * u1, rel=1e-12)


class TestPeakPhase:
    def test_zero_intensity(self, beam80):
        mode = laser_mode_geometry(1064e-9, 0.026)
        assert peak_phase_from_intensity(0.0, mode, beam80) == 0.0

    def test_against_line_integral_oracle(self, beam80):
        # eta0 = (1/hbar v) * integral of U(I0 exp(-2 z^2/w0^2)) dz, computed
        # by quadrature, independent of the closed-form path factor.
        mode = laser_mode_geometry(1064e-9, 0.026)
        intensity = 43e13
        eps0, c = 8.8541878128e-12, 299792458.0
        hbar = 6.62607015e-34 / (2 * math.pi)

        def potential(z):
            local = intensity * math.exp(-2.0 * z**2 / mode.waist**2)
            e2 = 2.0 * local / (eps0 * c)
            return (1.602176634e-19) ** 2 * e2 * (1064e-9) ** 2 / (
                16 * math.pi**2 * 9.1093837015e-31 * c**2
            )

        integral, _ = integrate.quad(potential, -10 * mode.waist, 10 * mode.waist, epsabs=0, epsrel=1e-12)
        expected = integral / (hbar * beam80.speed)
        result = peak_phase_from_intensity(intensity, mode, beam80)
        assert result == pytest.approx(expected, rel=1e-10)
        # simple-model value is ~43 deg; the measured 38 deg is a lower bound
        assert 30.0 < math.degrees(result) < 50.0
        assert math.degrees(result) == pytest.approx(42.888, abs=0.01)

    @given(st.floats(min_value=1e-6, max_value=1e3))
    def test_linear_in_intensity(self, factor):
        beam = electron_beam_from_voltage(80.0)
        mode = laser_mode_geometry(1064e-9, 0.026)
        base = peak_phase_from_intensity(1e13, mode, beam)
        scaled = peak_phase_from_intensity(factor * 1e13, mode, beam)
        assert scaled == pytest.approx(factor * base, rel=1e-13)

    def test_exact_linearity_power_of_two(self, beam80):
        mode = laser_mode_geometry(1064e-9, 0.026)
        assert peak_phase_from_intensity(2e13, mode, beam80) == 2.0 * peak_phase_from_intensity(
            1e13, mode, beam80
        )


class TestLaserField:
    def test_power_intensity_consistency(self):
        mode = laser_mode_geometry(1064e-9, 0.026)
        field = laser_field_from_power(mode, 29.6e3)
        # 29.6 kW circulating gives ~44 GW/cm^2 at the antinode
        assert field.antinode_intensity == pytest.approx(44.4e13, rel=1e-2)
        back = laser_field_from_intensity(mode, field.antinode_intensity)
        assert back.circulating_power == pytest.approx(29.6e3, rel=1e-12)

    def test_inconsistent_pair_rejected(self):
        mode = laser_mode_geometry(1064e-9, 0.026)
        good = antinode_intensity_from_power(mode, 1000.0)
        with pytest.raises(ValidationError):
            LaserField(mode, good * 1.1, 1000.0)


class TestPhaseProfile:
    def test_center_value(self):
        mode = laser_mode_geometry(1064e-9, 0.026, 0.0, 0.5)
        assert phase_profile(0.0, 0.0, mode) == pytest.approx(0.5, rel=1e-15)

    def test_node_at_quarter_wavelength(self):
        mode = laser_mode_geometry(1064e-9, 0.026, 0.0, 0.5)
        node = phase_profile(1064e-9 / 4.0, 0.0, mode)
        assert abs(node) < 1e-6 * 0.5

    def test_transverse_envelope(self):
        mode = laser_mode_geometry(1064e-9, 0.026, 0.0, 0.7)
        for y_over_w0 in (0.5, 1.0, 2.0):
            y = y_over_w0 * mode.waist
            ratio = phase_profile(0.0, y, mode) / phase_profile(0.0, 0.0, mode)
            assert ratio == pytest.approx(math.exp(-2.0 * y_over_w0**2), rel=1e-12)

    @given(
        st.floats(min_value=-5e-4, max_value=5e-4),
        st.floats(min_value=-5e-5, max_value=5e-5),
        st.floats(min_value=0.005, max_value=0.1),
        st.floats(min_value=0.0, max_value=0.05),
    )
    def test_symmetric_in_y(self, x, y, na, tilt):
        mode = laser_mode_geometry(1064e-9, na, tilt, 1.0)
        assert phase_profile(x, y, mode) == pytest.approx(phase_profile(x, -y, mode), rel=1e-14)

    @given(
        st.floats(min_value=-2e-3, max_value=2e-3),
        st.floats(min_value=-1e-4, max_value=1e-4),
        st.floats(min_value=0.0, max_value=1.5),
    )
    def test_bounds_zero_tilt(self, x, y, eta0):
        mode = laser_mode_geometry(1064e-9, 0.026, 0.0, eta0)
        value = phase_profile(x, y, mode)
        assert value >= 0.0
        assert value <= eta0 * (1.0 + 1e-6)

    @given(st.floats(min_value=0.0, max_value=0.05), st.floats(min_value=0.0, max_value=0.05))
    def test_tilt_damps_oscillation(self, t1, t2):
        lo, hi = sorted((t1, t2))
        center_lo = phase_profile(0.0, 0.0, laser_mode_geometry(1064e-9, 0.026, lo, 1.0))
        center_hi = phase_profile(0.0, 0.0, laser_mode_geometry(1064e-9, 0.026, hi, 1.0))
        # center value is eta0 (1 + exp(-tilt^2 kappa)) / 2: decreasing in |tilt|
        assert center_hi <= center_lo + 1e-15

    def test_fringe_period_half_laser_wavelength(self):
        # zero-crossing spacing of the oscillatory term at Y = 0, small X
        mode = laser_mode_geometry(1064e-9, 0.026, 0.0, 1.0)
        x = np.linspace(0.0, 20 * 532e-9, 200001)
        osc = phase_profile(x, 0.0, mode) / (0.5 * (1 + x**2 / mode.rayleigh_range**2) ** -0.5) - 1.0
        signs = np.sign(osc)
        crossings = np.flatnonzero(np.diff(signs) != 0)
        xc = x[crossings]
        spacing = np.diff(xc)
        period = 2.0 * np.mean(spacing)
        assert period == pytest.approx(1064e-9 / 2.0, rel=1e-3)
