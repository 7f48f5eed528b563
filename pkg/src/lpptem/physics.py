"""Electron-beam kinematics, Gaussian-mode geometry, and the laser phase profile.

All quantities are SI. The electron acquires a phase delay from the
ponderomotive potential of the standing laser wave; the transverse profile of
that delay is what every downstream module (Ronchigram synthesis, CTF maps,
fitting) consumes.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import constants as const
from .errors import ValidationError

#: Paraxial validity guard for the cavity mode.
MAX_NUMERICAL_APERTURE = 0.1


@dataclass(frozen=True)
class ElectronBeam:
    """Relativistic electron beam defined by its accelerating voltage.

    Attributes
    ----------
    voltage : float
        Accelerating voltage in kilovolts.
    wavelength : float
        de Broglie wavelength [m].
    wavenumber : float
        2 pi / wavelength [rad/m].
    speed : float
        Relativistic speed [m/s].
    """

    voltage: float
    wavelength: float
    wavenumber: float
    speed: float


def electron_beam_from_voltage(voltage_kv: float) -> ElectronBeam:
    """Build an ElectronBeam from the accelerating voltage in kV."""
    if not voltage_kv > 0:
        raise ValidationError(f"voltage must be positive, got {voltage_kv} kV")
    energy = const.ELEMENTARY_CHARGE * voltage_kv * 1e3
    rest = const.ELECTRON_REST_ENERGY
    wavelength = const.PLANCK * const.SPEED_OF_LIGHT / math.sqrt(energy * (energy + 2.0 * rest))
    gamma = 1.0 + energy / rest
    speed = const.SPEED_OF_LIGHT * math.sqrt(1.0 - 1.0 / gamma**2)
    return ElectronBeam(
        voltage=voltage_kv,
        wavelength=wavelength,
        wavenumber=2.0 * math.pi / wavelength,
        speed=speed,
    )


@dataclass(frozen=True)
class LaserMode:
    """Standing-wave Gaussian cavity mode seen by the electron beam.

    ``waist``, ``rayleigh_range`` and ``kappa`` are derived from
    (wavelength, NA) and are never stored independently. ``tilt`` is the
    angle between the laser axis and the plane normal to the electron beam;
    ``peak_phase`` is the phase delay at the central antinode for zero tilt.
    """

    wavelength: float
    numerical_aperture: float
    tilt: float
    peak_phase: float
    waist: float
    rayleigh_range: float
    kappa: float


def laser_mode_geometry(
    wavelength: float,
    numerical_aperture: float,
    tilt: float = 0.0,
    peak_phase: float = 0.0,
) -> LaserMode:
    """Construct a LaserMode, deriving waist, Rayleigh range, and kappa."""
    if not wavelength > 0:
        raise ValidationError(f"laser wavelength must be positive, got {wavelength}")
    if not 0 < numerical_aperture <= MAX_NUMERICAL_APERTURE:
        raise ValidationError(
            f"numerical aperture must be in (0, {MAX_NUMERICAL_APERTURE}], "
            f"got {numerical_aperture}"
        )
    if not peak_phase >= 0:
        raise ValidationError(f"peak phase must be non-negative, got {peak_phase}")
    if not math.isfinite(tilt):
        raise ValidationError("tilt must be finite")
    return LaserMode(
        wavelength=wavelength,
        numerical_aperture=numerical_aperture,
        tilt=tilt,
        peak_phase=peak_phase,
        waist=wavelength / (math.pi * numerical_aperture),
        rayleigh_range=wavelength / (math.pi * numerical_aperture**2),
        kappa=2.0 / numerical_aperture**2,
    )


@dataclass(frozen=True)
class LaserField:
    """A LaserMode together with its antinode intensity and circulating power.

    The two scalars are tied by the standing-wave Gaussian relation
    ``I_antinode = 8 P / (pi w0^2)``: an antinode carries four times the
    one-way peak intensity ``2 P / (pi w0^2)``.
    """

    mode: LaserMode
    antinode_intensity: float
    circulating_power: float

    def __post_init__(self):
        if self.antinode_intensity < 0 or self.circulating_power < 0:
            raise ValidationError("intensity and power must be non-negative")
        expected = antinode_intensity_from_power(self.mode, self.circulating_power)
        if not math.isclose(self.antinode_intensity, expected, rel_tol=1e-9, abs_tol=1e-30):
            raise ValidationError(
                "antinode intensity inconsistent with circulating power: "
                f"got {self.antinode_intensity:.6e}, expected {expected:.6e} W/m^2"
            )


def antinode_intensity_from_power(mode: LaserMode, circulating_power: float) -> float:
    """Antinode peak intensity of the standing wave for a circulating power."""
    if circulating_power < 0:
        raise ValidationError("circulating power must be non-negative")
    return 8.0 * circulating_power / (math.pi * mode.waist**2)


def laser_field_from_power(mode: LaserMode, circulating_power: float) -> LaserField:
    return LaserField(mode, antinode_intensity_from_power(mode, circulating_power), circulating_power)


def laser_field_from_intensity(mode: LaserMode, antinode_intensity: float) -> LaserField:
    if antinode_intensity < 0:
        raise ValidationError("antinode intensity must be non-negative")
    power = antinode_intensity * math.pi * mode.waist**2 / 8.0
    return LaserField(mode, antinode_intensity, power)


def ponderomotive_potential(field_amplitude: float, wavelength: float) -> float:
    """Ponderomotive potential U = e^2 E^2 lambda^2 / (16 pi^2 m c^2) in joules."""
    if field_amplitude < 0:
        raise ValidationError("field amplitude must be non-negative")
    if not wavelength > 0:
        raise ValidationError("wavelength must be positive")
    return (
        const.ELEMENTARY_CHARGE**2
        * field_amplitude**2
        * wavelength**2
        / (16.0 * math.pi**2 * const.ELECTRON_MASS * const.SPEED_OF_LIGHT**2)
    )


def field_amplitude_from_intensity(intensity: float) -> float:
    """Traveling-wave-equivalent field amplitude, E^2 = 2 I / (eps0 c).

    ``intensity`` is interpreted as the standing-wave antinode intensity;
    this convention reproduces the quoted antinode numbers self-consistently.
    """
    if intensity < 0:
        raise ValidationError("intensity must be non-negative")
    return math.sqrt(2.0 * intensity / (const.VACUUM_PERMITTIVITY * const.SPEED_OF_LIGHT))


def peak_phase_from_intensity(
    antinode_intensity: float, mode: LaserMode, beam: ElectronBeam
) -> float:
    """Peak phase delay at an antinode for a given antinode intensity.

    The electron crosses the waist on a straight line; the Gaussian
    transverse profile makes the line integral of the potential equal
    U0 * w0 * sqrt(pi/2). No additional relativistic correction factor is
    applied beyond using the relativistic electron speed, so this is the
    simple-model value (strictly linear in intensity).
    """
    amplitude = field_amplitude_from_intensity(antinode_intensity)
    u0 = ponderomotive_potential(amplitude, mode.wavelength)
    path_factor = mode.waist * math.sqrt(math.pi / 2.0)
    return u0 * path_factor / (const.HBAR * beam.speed)


def phase_profile(x, y, mode: LaserMode):
    """Laser-induced electron phase delay at position (x, y) in the plate plane.

    x runs along the laser propagation axis, y along the electron-facing
    transverse direction; the waist sits at the origin. Accepts scalars or
    numpy arrays (broadcast together). Returns radians.

    With X = x / z_R and Y = y / w0 the profile is

        eta0/2 * exp(-2 Y^2/(1+X^2)) / sqrt(1+X^2)
          * [1 + exp(-tilt^2 kappa (1+X^2)) * (1+X^2)^(-1/4)
               * cos(2 X Y^2/(1+X^2) + 2 kappa X - 3/2 arctan X)]

    i.e. a standing wave of period lambda_L/2 under a Gaussian envelope,
    with tilt damping the oscillatory term.
    """
    big_x = np.asarray(x, dtype=np.float64) / mode.rayleigh_range
    big_y = np.asarray(y, dtype=np.float64) / mode.waist
    one_plus = 1.0 + big_x**2
    envelope = np.exp(-2.0 * big_y**2 / one_plus) / np.sqrt(one_plus)
    osc_amp = np.exp(-(mode.tilt**2) * mode.kappa * one_plus) * one_plus**-0.25
    phase = 2.0 * big_x / one_plus * big_y**2 + 2.0 * mode.kappa * big_x - 1.5 * np.arctan(big_x)
    value = 0.5 * mode.peak_phase * envelope * (1.0 + osc_amp * np.cos(phase))
    if np.ndim(x) == 0 and np.ndim(y) == 0:
        return float(value)
    return value
