"""Raster file formats (native + MRC mode 2), profile export, image rendering.

The native format is a 24-byte little-endian header followed by row-major
float32 payload:

    offset  size  field
    0       4     magic b"LPPR"
    4       2     format version (1)
    6       1     plane tag (0 image, 1 diffraction, 2 frequency, 3 generic)
    7       1     value kind (0 intensity, 1 phase, 2 ctf)
    8       4     width (u32)
    12      4     height (u32)
    16      8     pixel size in meters, or 1/m for frequency rasters (f64)

MRC-2014 support is limited to single-section mode-2 (float32) files.
All writes are atomic (temp file + rename).
"""

import math
import os
import struct
import tempfile

import numpy as np

from .errors import RasterFormatError, ValidationError
from .raster import (
    PLANE_DIFFRACTION,
    PLANE_FREQUENCY,
    PLANE_GENERIC,
    PLANE_IMAGE,
    RadialProfile,
    RasterImage,
)

_MAGIC = b"LPPR"
_HEADER = struct.Struct("<4sHBBIId")
_PLANES = (PLANE_IMAGE, PLANE_DIFFRACTION, PLANE_FREQUENCY, PLANE_GENERIC)
_KINDS = ("intensity", "phase", "ctf")

_MRC_HEADER_SIZE = 1024
_MRC_MODE_FLOAT32 = 2


def _atomic_write_bytes(path, payload):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_raster(image: RasterImage, path, kind: str = "intensity"):
    """Write a RasterImage in the native format (float32 payload)."""
    if kind not in _KINDS:
        raise ValidationError(f"unknown value kind {kind!r}; expected one of {_KINDS}")
    header = _HEADER.pack(
        _MAGIC,
        1,
        _PLANES.index(image.plane),
        _KINDS.index(kind),
        image.width,
        image.height,
        image.pixel_size,
    )
    payload = np.ascontiguousarray(image.values, dtype="<f4").tobytes()
    _atomic_write_bytes(path, header + payload)


def inspect_raster(path):
    """Header fields of a native raster file, as a dict."""
    with open(path, "rb") as handle:
        head = handle.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise RasterFormatError(f"{path}: truncated header ({len(head)} bytes at offset 0)")
    magic, version, plane, kind, width, height, pixel_size = _HEADER.unpack(head)
    if magic != _MAGIC:
        raise RasterFormatError(f"{path}: bad magic {magic!r} at offset 0")
    if version != 1:
        raise RasterFormatError(f"{path}: unsupported format version {version} at offset 4")
    if plane >= len(_PLANES) or kind >= len(_KINDS):
        raise RasterFormatError(f"{path}: invalid plane/kind bytes at offset 6")
    return {
        "plane": _PLANES[plane],
        "kind": _KINDS[kind],
        "width": width,
        "height": height,
        "pixel_size": pixel_size,
    }


def _read_native(path):
    meta = inspect_raster(path)
    width, height = meta["width"], meta["height"]
    expected = width * height * 4
    with open(path, "rb") as handle:
        handle.seek(_HEADER.size)
        payload = handle.read(expected + 1)
    if len(payload) != expected:
        raise RasterFormatError(
            f"{path}: payload is {len(payload)} bytes at offset {_HEADER.size}, "
            f"expected {expected} for {width}x{height}"
        )
    if not meta["pixel_size"] > 0:
        raise RasterFormatError(f"{path}: non-positive pixel size at offset 16")
    values = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    return RasterImage(values=values, pixel_size=meta["pixel_size"], plane=meta["plane"])


def write_mrc(image: RasterImage, path):
    """Write a single-section MRC-2014 mode-2 file."""
    header = bytearray(_MRC_HEADER_SIZE)
    nx, ny = image.width, image.height
    pixel_angstrom = image.pixel_size * 1e10
    struct.pack_into("<3i", header, 0, nx, ny, 1)
    struct.pack_into("<i", header, 12, _MRC_MODE_FLOAT32)
    struct.pack_into("<3i", header, 28, nx, ny, 1)
    struct.pack_into(
        "<3f", header, 40, nx * pixel_angstrom, ny * pixel_angstrom, pixel_angstrom
    )
    struct.pack_into("<3f", header, 52, 90.0, 90.0, 90.0)
    struct.pack_into("<3i", header, 64, 1, 2, 3)
    values = image.values
    struct.pack_into(
        "<3f", header, 76, float(values.min()), float(values.max()), float(values.mean())
    )
    header[208:212] = b"MAP "
    header[212:216] = bytes((0x44, 0x44, 0x00, 0x00))
    struct.pack_into("<f", header, 216, float(values.std()))
    payload = np.ascontiguousarray(values, dtype="<f4").tobytes()
    _atomic_write_bytes(path, bytes(header) + payload)


def _read_mrc(path):
    with open(path, "rb") as handle:
        header = handle.read(_MRC_HEADER_SIZE)
        if len(header) < _MRC_HEADER_SIZE:
            raise RasterFormatError(f"{path}: truncated MRC header ({len(header)} bytes)")
        nx, ny, nz = struct.unpack_from("<3i", header, 0)
        (mode,) = struct.unpack_from("<i", header, 12)
        mx = struct.unpack_from("<3i", header, 28)[0]
        cella_x = struct.unpack_from("<3f", header, 40)[0]
        (nsymbt,) = struct.unpack_from("<i", header, 92)
        machst = header[212:216]
        if machst[:2] == bytes((0x11, 0x11)):
            raise RasterFormatError(f"{path}: big-endian MRC (machine stamp at offset 212) unsupported")
        if mode != _MRC_MODE_FLOAT32:
            raise RasterFormatError(
                f"{path}: MRC mode {mode} at offset 12 unsupported; only mode 2 (float32)"
            )
        if nz != 1:
            raise RasterFormatError(f"{path}: {nz} sections at offset 8; only single-section files")
        if nx <= 0 or ny <= 0:
            raise RasterFormatError(f"{path}: invalid dimensions {nx}x{ny} at offset 0")
        if cella_x > 0 and mx > 0:
            pixel_size = cella_x / mx * 1e-10
        else:
            raise RasterFormatError(
                f"{path}: cannot determine pixel size (cella at offset 40 / mx at offset 28)"
            )
        handle.seek(_MRC_HEADER_SIZE + max(nsymbt, 0))
        expected = nx * ny * 4
        payload = handle.read(expected)
    if len(payload) != expected:
        raise RasterFormatError(
            f"{path}: payload is {len(payload)} bytes at offset "
            f"{_MRC_HEADER_SIZE + max(nsymbt, 0)}, expected {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(ny, nx)
    return RasterImage(values=values, pixel_size=pixel_size, plane=PLANE_IMAGE)


def read_raster(path) -> RasterImage:
    """Read a native raster or a single-section MRC-2014 mode-2 file."""
    with open(path, "rb") as handle:
        head = handle.read(216)
    if head[:4] == _MAGIC:
        return _read_native(path)
    if len(head) >= 212 and head[208:212] == b"MAP ":
        return _read_mrc(path)
    raise RasterFormatError(
        f"{path}: neither native magic at offset 0 nor MRC 'MAP ' stamp at offset 208"
    )


def export_profile(profile: RadialProfile, path, abscissa: str = "s_per_nm"):
    """Write a profile as CSV with 17-significant-digit values.

    ``abscissa`` selects the first column: 's_per_nm' divides 1/m values by
    1e9, 'x_um' multiplies meter values by 1e6.
    """
    if len(profile) == 0:
        raise ValidationError("profile is empty")
    if abscissa == "s_per_nm":
        first = profile.s / 1e9
    elif abscissa == "x_um":
        first = profile.s * 1e6
    else:
        raise ValidationError(f"unknown abscissa {abscissa!r}; use 's_per_nm' or 'x_um'")
    lines = [f"{abscissa},value"]
    for a, v in zip(first, profile.values):
        lines.append(f"{a:.17g},{v:.17g}")
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))


def read_profile_csv(path):
    """Read back a profile CSV written by export_profile."""
    with open(path, "r", encoding="ascii") as handle:
        header = handle.readline().strip().split(",")
        rows = [line.strip().split(",") for line in handle if line.strip()]
    if len(header) != 2 or header[1] != "value":
        raise RasterFormatError(f"{path}: unexpected CSV header {header}")
    first = np.array([float(r[0]) for r in rows])
    values = np.array([float(r[1]) for r in rows])
    if header[0] == "s_per_nm":
        s = first * 1e9
    elif header[0] == "x_um":
        s = first / 1e6
    else:
        raise RasterFormatError(f"{path}: unknown abscissa column {header[0]!r}")
    return RadialProfile(s=s, values=values)


def export_values_csv(image: RasterImage, path):
    """Write raster values as a plain CSV grid (row per line)."""
    lines = [",".join(f"{v:.17g}" for v in row) for row in image.values]
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("ascii"))


def render_raster(image: RasterImage, path, image_format: str = "png",
                  scaling: str = "minmax"):
    """Render a raster to 8-bit grayscale PNG or PGM.

    ``scaling`` is 'minmax' or 'percentile' (1st-99th). Constant images map
    to uniform mid-gray.
    """
    values = image.values
    if scaling == "percentile":
        lo, hi = np.percentile(values, [1.0, 99.0])
    elif scaling == "minmax":
        lo, hi = float(values.min()), float(values.max())
    else:
        raise ValidationError(f"unknown scaling {scaling!r}")
    if hi > lo:
        scaled = np.clip((values - lo) / (hi - lo), 0.0, 1.0)
        gray = (scaled * 255.0).round().astype(np.uint8)
    else:
        gray = np.full(values.shape, 128, dtype=np.uint8)
    if image_format == "pgm":
        header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
        _atomic_write_bytes(path, header + gray.tobytes())
    elif image_format == "png":
        from PIL import Image

        import io

        buffer = io.BytesIO()
        Image.fromarray(gray, mode="L").save(buffer, format="PNG")
        _atomic_write_bytes(path, buffer.getvalue())
    else:
        raise ValidationError(f"unknown image format {image_format!r}")
