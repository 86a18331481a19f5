"""Raw capture file format used by the sync trials.

Layout: a 32-byte little-endian header followed by float64 samples.

    offset 0   magic   4 bytes  b"VPSC"
    offset 4   version u32      format version (currently 1)
    offset 8   n       u32      cipher frame length
    offset 12  f_s     f64      sample rate in Hz
    offset 20  count   u64      number of samples
    offset 28  pad     4 bytes  zero
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError

MAGIC = b"VPSC"
VERSION = 1
_HEADER = struct.Struct("<4sIIdQ4x")

assert _HEADER.size == 32


def write_capture(path, samples: np.ndarray, n: int, sample_rate_hz: float) -> None:
    samples = np.asarray(samples, dtype="<f8")
    header = _HEADER.pack(MAGIC, VERSION, n, sample_rate_hz, len(samples))
    Path(path).write_bytes(header + samples.tobytes())


def read_capture(path):
    """Returns (samples, n, sample_rate_hz)."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise ConfigError("capture file too short for its header")
    magic, version, n, f_s, count = _HEADER.unpack(blob[: _HEADER.size])
    if magic != MAGIC:
        raise ConfigError("bad capture magic")
    if version != VERSION:
        raise ConfigError(f"unsupported capture version {version}")
    samples = np.frombuffer(blob[_HEADER.size :], dtype="<f8")
    if len(samples) != count:
        raise ConfigError("capture sample count does not match header")
    return samples.astype(np.float64), int(n), float(f_s)
