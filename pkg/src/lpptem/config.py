"""Flat run configuration with unit-suffixed keys.

Every key carries its unit in the name; there is no unit inference. Defaults
correspond to the reference setup: 80 kV electrons, 1064 nm laser at
NA 0.026, 20 mm effective focal length. ``validate()`` constructs every
domain object up front so invalid configurations fail before any output is
produced.
"""

from dataclasses import dataclass, asdict, fields
import json
import math

from .ctf import OpticsConfig, PlateAlignment
from .errors import ValidationError
from .physics import ElectronBeam, LaserMode, electron_beam_from_voltage, laser_mode_geometry
from .propagation import GridSpec, RonchigramSetup


@dataclass
class RunConfig:
    # beam and laser
    voltage_kv: float = 80.0
    lambda_l_nm: float = 1064.0
    na: float = 0.026
    eta0_deg: float = 18.0
    tilt_deg: float = 0.0
    # optics
    f_mm: float = 20.0
    magnification: float = 100.0
    defocus_nm: float = 0.0
    cs_mm: float = 0.0
    delta_mm: float = None  # None -> lower-bound convention -(pi/4) k/k_L^2
    envelope_half_max_per_nm: float = 1.0 / 0.51
    # plate alignment
    transverse_offset_um: float = 0.0
    lateral_offset_um: float = 0.0
    rotation_deg: float = 0.0
    # grids
    grid_n: int = 1024
    pixel_size_nm: float = 0.65
    plate_pixel_nm: float = 125.0
    freq_step_per_nm: float = 0.0015
    # detector
    theta_cl: float = 0.0
    counts_per_pixel: float = 0.0
    seed: int = 0
    # analysis
    wedge_deg: float = 15.0
    symmetric_ctf: bool = True
    # synthetic weak-phase object
    object_phase_rms: float = 0.05
    object_path: str = None
    # fitting
    input_path: str = None
    input_is_spectrum: bool = False
    astigmatism_correction: bool = True
    fit_smin_per_nm: float = 0.45
    fit_smax_per_nm: float = 2.0
    smoothing_bins: float = 1.0
    n_angle_bins: int = 36
    max_rings: int = 4
    defocus_sign: int = -1
    scan_csv: str = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as handle:
            try:
                data = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError(f"config {path} must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    # --- domain objects -------------------------------------------------
    def beam(self) -> ElectronBeam:
        return electron_beam_from_voltage(self.voltage_kv)

    def mode(self) -> LaserMode:
        return laser_mode_geometry(
            self.lambda_l_nm * 1e-9,
            self.na,
            math.radians(self.tilt_deg),
            math.radians(self.eta0_deg),
        )

    def optics(self) -> OpticsConfig:
        return OpticsConfig(
            focal_length=self.f_mm * 1e-3,
            defocus=self.defocus_nm * 1e-9,
            spherical_aberration=self.cs_mm * 1e-3,
            envelope_half_max_radius=self.envelope_half_max_per_nm * 1e9,
        )

    def alignment(self) -> PlateAlignment:
        return PlateAlignment(
            transverse_offset=self.transverse_offset_um * 1e-6,
            lateral_offset=self.lateral_offset_um * 1e-6,
            rotation=math.radians(self.rotation_deg) % math.pi,
        )

    def resolved_delta(self) -> float:
        if self.delta_mm is not None:
            return self.delta_mm * 1e-3
        beam = self.beam()
        k_laser = 2.0 * math.pi / (self.lambda_l_nm * 1e-9)
        return -math.pi / 4.0 * beam.wavenumber / k_laser**2

    def ronchigram_setup(self) -> RonchigramSetup:
        return RonchigramSetup(
            beam=self.beam(),
            mode=self.mode(),
            delta=self.resolved_delta(),
            focal_length=self.f_mm * 1e-3,
            magnification=self.magnification,
        )

    def plate_grid(self) -> GridSpec:
        return GridSpec(self.grid_n, self.grid_n, self.plate_pixel_nm * 1e-9)

    def image_grid(self) -> GridSpec:
        return GridSpec(self.grid_n, self.grid_n, self.pixel_size_nm * 1e-9)

    def frequency_grid(self) -> GridSpec:
        return GridSpec(self.grid_n, self.grid_n, self.freq_step_per_nm * 1e9)

    def wedge_half_angle(self) -> float:
        return math.radians(self.wedge_deg)

    def validate(self) -> None:
        """Construct every domain object so all invariants are checked."""
        self.beam()
        self.mode()
        self.optics()
        self.alignment()
        self.plate_grid()
        self.image_grid()
        self.frequency_grid()
        if self.delta_mm is not None and self.delta_mm == 0:
            raise ValidationError("delta_mm must be nonzero when given")
        if self.counts_per_pixel < 0:
            raise ValidationError("counts_per_pixel must be non-negative")
        if self.theta_cl < 0:
            raise ValidationError("theta_cl must be non-negative")
        if not 0 <= self.wedge_deg < 90:
            raise ValidationError("wedge_deg must lie in [0, 90)")
        if self.defocus_sign not in (-1, 1):
            raise ValidationError("defocus_sign must be -1 or +1")
        if self.object_phase_rms < 0:
            raise ValidationError("object_phase_rms must be non-negative")
        if not 0 < self.fit_smin_per_nm < self.fit_smax_per_nm:
            raise ValidationError("need 0 < fit_smin_per_nm < fit_smax_per_nm")
