"""Command-line entry points.

Subcommands: simulate-ronchigram, simulate-image, ctf-map, rms-profile,
fit-ronchigram, fit-ctf, scan-analyze. Every run validates the full
configuration before computing anything, writes its declared outputs
atomically, and finishes with a manifest recording the configuration,
package versions, and SHA-256 hashes of all outputs.

Exit codes: 0 success, 2 validation/usage error (before compute), 1
runtime or fit error.
"""

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .config import RunConfig
from .ctf import ctf_map, rms_angular_average, simulate_weak_phase_image
from .detector import CoincidenceParams, apply_coincidence_loss, sample_poisson_counts
from .errors import LppError, ValidationError
from .estimation import (
    RonchigramFitHints,
    analyze_phase_scan,
    assign_zero_phases,
    correct_astigmatism,
    fit_defocus_polynomial,
    fit_ronchigram,
    locate_ctf_zeros,
)
from .raster import PLANE_FREQUENCY, RadialProfile, RasterImage
from .raster_io import (
    _atomic_write_bytes,
    export_profile,
    export_values_csv,
    read_raster,
    render_raster,
    write_raster,
)
from .propagation import GridSpec, synthesize_ronchigram

_FORMATS = ("raster", "csv", "png")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lpptem",
        description="Laser-phase-plate TEM simulation and estimation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate-ronchigram", "synthesize a standing-wave micrograph"),
        ("simulate-image", "synthesize a weak-phase-object image through the CTF"),
        ("ctf-map", "compute a CTF map and its angular RMS profile"),
        ("rms-profile", "angular RMS profile of a stored frequency-plane raster"),
        ("fit-ronchigram", "fit laser parameters to a Ronchigram"),
        ("fit-ctf", "fit defocus/phase polynomial to a Thon-ring spectrum"),
        ("scan-analyze", "peak-to-peak phase and period of a position scan"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument(
            "--format", choices=_FORMATS, default="raster",
            help="raster output format (default: raster)",
        )
    return parser


def _load_config(args) -> RunConfig:
    config = RunConfig.from_json(args.config) if args.config else RunConfig()
    if args.seed is not None:
        config.seed = args.seed
    config.validate()
    return config


def _write_raster_as(image, out_dir, stem, fmt, kind="intensity"):
    if fmt == "raster":
        path = os.path.join(out_dir, stem + ".lppr")
        write_raster(image, path, kind=kind)
    elif fmt == "csv":
        path = os.path.join(out_dir, stem + ".csv")
        export_values_csv(image, path)
    else:
        path = os.path.join(out_dir, stem + ".png")
        render_raster(image, path, image_format="png", scaling="percentile")
    return path


def _write_report(lines, out_dir, stem="report"):
    path = os.path.join(out_dir, stem + ".txt")
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))
    return path


def _write_manifest(out_dir, command, config, outputs):
    digest = {}
    for path in outputs:
        h = hashlib.sha256()
        with open(path, "rb") as handle:
            for chunk in iter(lambda: handle.read(1 << 20), b""):
                h.update(chunk)
        digest[os.path.basename(path)] = h.hexdigest()
    import scipy

    manifest = {
        "command": command,
        "config": config.to_dict(),
        "versions": {
            "lpptem": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
        "outputs": digest,
    }
    path = os.path.join(out_dir, "manifest.json")
    _atomic_write_bytes(
        path, (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8")
    )
    return path


def _apply_detector(image, config):
    if config.theta_cl > 0 or config.counts_per_pixel > 0:
        counts = image.values * max(config.counts_per_pixel, 1.0)
        detected = apply_coincidence_loss(counts, CoincidenceParams(config.theta_cl))
        expected = RasterImage(detected, image.pixel_size, image.plane)
        if config.counts_per_pixel > 0:
            return sample_poisson_counts(expected, config.seed)
        return expected
    return image


def _synthetic_object(config):
    rng = np.random.Generator(np.random.Philox(key=np.uint64(config.seed) + np.uint64(0x0BEC7)))
    phi = rng.normal(0.0, config.object_phase_rms, size=(config.grid_n, config.grid_n))
    np.clip(phi, -0.2, 0.2, out=phi)
    return RasterImage(phi, config.pixel_size_nm * 1e-9, "image-plane")


def _power_spectrum(image):
    values = image.values
    centered = values - values.mean()
    spectrum = np.abs(np.fft.fftshift(np.fft.fft2(centered))) ** 2
    return RasterImage(
        spectrum, 1.0 / (image.width * image.pixel_size), PLANE_FREQUENCY
    )


def _cmd_simulate_ronchigram(args, config, out_dir):
    image = synthesize_ronchigram(config.ronchigram_setup(), config.plate_grid())
    image = _apply_detector(image, config)
    outputs = [_write_raster_as(image, out_dir, "ronchigram", args.format)]
    return outputs


def _cmd_simulate_image(args, config, out_dir):
    if config.object_path:
        phi = read_raster(config.object_path)
    else:
        phi = _synthetic_object(config)
    step = 1.0 / (phi.width * phi.pixel_size)
    freq_grid = GridSpec(phi.width, phi.height, step)
    transfer = ctf_map(
        freq_grid, config.optics(), config.mode(), config.alignment(),
        config.beam(), symmetric=config.symmetric_ctf,
    )
    image = simulate_weak_phase_image(phi, transfer)
    image = _apply_detector(image, config)
    outputs = [_write_raster_as(image, out_dir, "image", args.format)]
    return outputs


def _cmd_ctf_map(args, config, out_dir):
    transfer = ctf_map(
        config.frequency_grid(), config.optics(), config.mode(),
        config.alignment(), config.beam(), symmetric=config.symmetric_ctf,
    )
    # Compute everything before writing so a validation failure cannot
    # leave a partial set of outputs behind.
    profile = rms_angular_average(transfer, config.wedge_half_angle())
    raster = RasterImage(transfer.values, transfer.freq_step, PLANE_FREQUENCY)
    outputs = [_write_raster_as(raster, out_dir, "ctf_map", args.format, kind="ctf")]
    path = os.path.join(out_dir, "rms_profile.csv")
    export_profile(profile, path)
    outputs.append(path)
    return outputs


def _cmd_rms_profile(args, config, out_dir):
    if not config.input_path:
        raise ValidationError("rms-profile requires config key 'input_path'")
    raster = read_raster(config.input_path)
    profile = rms_angular_average(
        raster.values, config.wedge_half_angle(),
        axis_angle=math.radians(config.rotation_deg), freq_step=raster.pixel_size,
    )
    path = os.path.join(out_dir, "rms_profile.csv")
    export_profile(profile, path)
    return [path]


def _cmd_fit_ronchigram(args, config, out_dir):
    if not config.input_path:
        raise ValidationError("fit-ronchigram requires config key 'input_path'")
    image = read_raster(config.input_path)
    hints = RonchigramFitHints(
        beam=config.beam(),
        laser_wavelength=config.lambda_l_nm * 1e-9,
        delta=None if config.delta_mm is None else config.delta_mm * 1e-3,
        na_init=config.na,
    )
    fit = fit_ronchigram(image, hints)
    lines = [
        f"wavevector_x_per_m = {fit.wavevector[0]:.17g}  # cycles/m",
        f"wavevector_y_per_m = {fit.wavevector[1]:.17g}  # cycles/m",
        f"center_x_px = {fit.center[0]:.17g}",
        f"center_y_px = {fit.center[1]:.17g}",
        f"peak_phase_deg = {math.degrees(fit.peak_phase):.17g}",
        f"numerical_aperture = {fit.numerical_aperture:.17g}",
        f"theta_cl = {fit.theta_cl:.17g}",
        f"residual_norm = {fit.residual_norm:.17g}",
        f"background_counts = {fit.background_counts:.17g}",
        f"delta_mm = {fit.delta * 1e3:.17g}",
        f"n_dead_pixels = {fit.n_dead_pixels}",
        "objective_history = " + ",".join(f"{v:.10g}" for v in fit.objective_history),
    ]
    return [_write_report(lines, out_dir, "ronchigram_fit")]


def _fit_spectrum_pipeline(spectrum, config):
    """Steps: astigmatism correction, angular average, zeros, polynomial."""
    axis = math.radians(config.rotation_deg)
    ellipse = None
    if config.astigmatism_correction:
        spectrum, ellipse = correct_astigmatism(
            spectrum,
            n_angle_bins=config.n_angle_bins,
            max_rings=config.max_rings,
            wedge_half_angle=config.wedge_half_angle(),
            axis_angle=axis,
            smoothing_sigma=config.smoothing_bins,
            s_min=config.fit_smin_per_nm * 1e9,
            s_max=config.fit_smax_per_nm * 1e9,
        )
    profile = rms_angular_average(
        spectrum.values, config.wedge_half_angle(), axis_angle=axis,
        freq_step=spectrum.pixel_size,
    )
    zeros = locate_ctf_zeros(
        profile, config.smoothing_bins,
        s_min=config.fit_smin_per_nm * 1e9, s_max=config.fit_smax_per_nm * 1e9,
    )
    direction = 1 if config.defocus_sign < 0 else -1
    fit = fit_defocus_polynomial(assign_zero_phases(zeros, direction=direction))
    fit.ellipse = ellipse
    return fit


def _cmd_fit_ctf(args, config, out_dir):
    if not config.input_path:
        raise ValidationError("fit-ctf requires config key 'input_path'")
    raster = read_raster(config.input_path)
    spectrum = raster if config.input_is_spectrum else _power_spectrum(raster)
    fit = _fit_spectrum_pipeline(spectrum, config)
    beam = config.beam()
    lines = [
        f"quartic_coeff_m4 = {fit.quartic_coeff:.17g}",
        f"quadratic_coeff_m2 = {fit.quadratic_coeff:.17g}",
        f"constant_phase_deg = {math.degrees(fit.constant_phase):.17g}",
        f"defocus_nm = {fit.defocus(beam) * 1e9:.17g}",
        f"cs_mm = {fit.spherical_aberration(beam) * 1e3:.17g}",
        "zeros_per_nm = " + ",".join(f"{z / 1e9:.10g}" for z in fit.zero_locations),
    ]
    if fit.ellipse is not None:
        lines.append(f"ellipse_ratio = {fit.ellipse[0]:.17g}")
        lines.append(f"ellipse_orientation_deg = {math.degrees(fit.ellipse[1]):.17g}")
    return [_write_report(lines, out_dir, "ctf_fit")]


def _cmd_scan_analyze(args, config, out_dir):
    if not config.scan_csv:
        raise ValidationError(
            "scan-analyze requires config key 'scan_csv' with columns position_um,phase_rad"
        )
    positions, phases = [], []
    with open(config.scan_csv, "r", encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
        if header[:2] != ["position_um", "phase_rad"]:
            raise ValidationError(
                f"scan csv must start with header position_um,phase_rad; got {header}"
            )
        for line in handle:
            if not line.strip():
                continue
            a, b = line.strip().split(",")[:2]
            positions.append(float(a) * 1e-6)
            phases.append(float(b))
    result = analyze_phase_scan(list(zip(positions, phases)))
    lines = [
        f"n_positions = {len(result.positions)}",
        f"peak_to_peak_deg = {math.degrees(result.peak_to_peak):.17g}",
        f"period_nm = {result.period * 1e9:.17g}",
    ]
    outputs = [_write_report(lines, out_dir, "scan_report")]
    profile = RadialProfile(result.positions, result.phases)
    path = os.path.join(out_dir, "scan_phases.csv")
    export_profile(profile, path, abscissa="x_um")
    outputs.append(path)
    return outputs


_COMMANDS = {
    "simulate-ronchigram": _cmd_simulate_ronchigram,
    "simulate-image": _cmd_simulate_image,
    "ctf-map": _cmd_ctf_map,
    "rms-profile": _cmd_rms_profile,
    "fit-ronchigram": _cmd_fit_ronchigram,
    "fit-ctf": _cmd_fit_ctf,
    "scan-analyze": _cmd_scan_analyze,
}


def run_command(argv) -> int:
    """Run one CLI invocation; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        config = _load_config(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    try:
        outputs = _COMMANDS[args.command](args, config, out_dir)
        _write_manifest(out_dir, args.command, config, outputs)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (LppError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in outputs:
        print(path)
    return 0


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
