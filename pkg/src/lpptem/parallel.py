"""Thread-count control for FFT-heavy paths.

LPP_THREADS caps internal parallelism; 0 means one worker per CPU. Unset
defaults to 1, which keeps results bit-reproducible run to run (the FFT
backend splits work along whole transforms, so worker count never changes
numerics on a given build).
"""

import os

from .errors import ValidationError


def worker_count() -> int:
    raw = os.environ.get("LPP_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValidationError(f"LPP_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ValidationError(f"LPP_THREADS must be >= 0, got {n}")
    if n == 0:
        return os.cpu_count() or 1
    return n
