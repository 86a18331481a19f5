"""Counter-mode keystream with random access and structured key frames.

The generator is AES-256 over explicit 128-bit counter blocks (the classic
CTR construction), keyed by the SHA-256 of an opaque secret seed.  Each
counter block yields ``VALUES_PER_COUNTER`` 64-bit words which are mapped to
floats on [0, 1) by keeping their top 53 bits.  One key frame of length N
consumes N values, so a frame occupies ``counters_per_frame(N)`` consecutive
counters; that stride is what the frame-alignment arithmetic below rounds to.

Counter timeline: the stream's counter c for frame j is (sc + j*u) mod P,
where sc is the configured seed counter.  current_counter()/initial_counter()
compute the sc-relative elapsed counter exactly as the synchronization
arithmetic defines them; callers add sc when addressing the generator.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import ClockError, ConfigError, CounterError
from .frames import TWO_PI

#: 64-bit words produced per counter block (16-byte AES block)
VALUES_PER_COUNTER = 2

#: default counter period; counters are encoded in the low 64 bits of the block
DEFAULT_PERIOD = 2 ** 64

_BLOCK_BYTES = 16
_FLOAT_SCALE = 2.0 ** -53


def counters_per_frame(n: int) -> int:
    """Counters consumed by one key frame of length n."""
    return -(-n // VALUES_PER_COUNTER)


class KeystreamGenerator:
    """Deterministic, counter-addressable uniform [0,1) value source."""

    def __init__(self, secret_seed: bytes | str, period: int = DEFAULT_PERIOD):
        if isinstance(secret_seed, str):
            secret_seed = bytes.fromhex(secret_seed)
        if not (1 <= period <= 2 ** 64):
            raise ConfigError("counter period must lie in [1, 2**64]")
        self.period = int(period)
        self._key = hashlib.sha256(secret_seed).digest()

    def _keystream_bytes(self, start: int, nblocks: int) -> bytes:
        out = bytearray()
        remaining = nblocks
        counter = start
        while remaining:
            run = min(remaining, self.period - counter)
            lo = np.arange(run, dtype=np.uint64) + np.uint64(counter)
            blocks = np.zeros((run, _BLOCK_BYTES), dtype=np.uint8)
            blocks[:, 8:] = lo.byteswap().view(np.uint8).reshape(run, 8)
            enc = Cipher(algorithms.AES(self._key), modes.ECB()).encryptor()
            out += enc.update(blocks.tobytes()) + enc.finalize()
            counter = 0
            remaining -= run
        return bytes(out)

    def raw_values(self, counter: int, count: int) -> np.ndarray:
        """``count`` uniform [0,1) floats starting at the given counter.

        Random access identity (for block-aligned a, i.e. a a multiple of
        VALUES_PER_COUNTER):
        raw_values(c, a+b) == raw_values(c, a) ++ raw_values(c + a//r, b).
        """
        if not 0 <= counter < self.period:
            raise CounterError(f"counter {counter} outside [0, {self.period})")
        if count < 0:
            raise ValueError("count must be nonnegative")
        nblocks = -(-count // VALUES_PER_COUNTER)
        stream = self._keystream_bytes(counter, nblocks)
        words = np.frombuffer(stream, dtype=">u8")
        # top 53 bits -> full float64 resolution on [0, 1), never reaching 1.0
        values = (words >> np.uint64(11)).astype(np.float64) * _FLOAT_SCALE
        return values[:count]


@dataclass
class SyncConfig:
    """Shared encrypter/decrypter stream configuration.

    sc: seed counter, the generator counter at which frame 0 begins;
    st: stream start time in seconds on the transmitter clock;
    g:  key generation rate in counters per second;
    period: counter period P;
    u:  counters consumed per key frame.
    """

    sc: int
    st: float
    g: float
    period: int = DEFAULT_PERIOD
    u: int = 1
    secret_seed: bytes = b""

    def __post_init__(self):
        if not 0 <= self.sc < self.period:
            raise ConfigError("require 0 <= sc < period")
        if self.g <= 0:
            raise ConfigError("key generation rate g must be positive")
        if self.u < 1:
            raise ConfigError("counters per frame u must be >= 1")
        if isinstance(self.secret_seed, str):
            self.secret_seed = bytes.fromhex(self.secret_seed)

    def generator(self) -> KeystreamGenerator:
        return KeystreamGenerator(self.secret_seed, self.period)


@dataclass
class KeyFrame:
    """Structured magnitude/angle key for one frame.

    k_m mirrors across the Nyquist bin with a zero DC entry; k_a is
    antisymmetric with zero DC and Nyquist entries.  That structure is what
    keeps every ciphertext spectrum synthesizable into a real signal.
    """

    k_m: np.ndarray
    k_a: np.ndarray
    frame_index: int


def _assemble_key_block(raw: np.ndarray, n: int, phi_effective: float):
    """Map rows of N raw values into structured (k_m, k_a) rows."""
    half = n // 2
    rows = raw.shape[0]
    v = raw[:, :half] * phi_effective
    a = raw[:, half:] * TWO_PI - np.pi

    k_m = np.zeros((rows, n))
    k_m[:, 1:half + 1] = v
    k_m[:, half + 1:] = v[:, half - 2::-1]

    k_a = np.zeros((rows, n))
    # a's last value is drawn but unused so counter consumption is fixed by N
    k_a[:, 1:half] = a[:, :half - 1]
    k_a[:, half + 1:] = -a[:, half - 2::-1]
    return k_m, k_a


def key_frame_block(
    config: SyncConfig, start_frame: int, count: int, n: int, phi_effective: float
):
    """(k_m, k_a) arrays of shape (count, n) for consecutive frame indices."""
    if start_frame < 0 or count < 0:
        raise ValueError("frame indices must be nonnegative")
    need = counters_per_frame(n)
    if config.u < need:
        raise ConfigError(f"u={config.u} too small for N={n} (needs {need})")
    gen = config.generator()
    raw = np.empty((count, n))
    if config.u == need:
        base = (config.sc + start_frame * config.u) % config.period
        raw[:] = gen.raw_values(base, count * n).reshape(count, n) if count else 0.0
    else:
        for i in range(count):
            base = (config.sc + (start_frame + i) * config.u) % config.period
            raw[i] = gen.raw_values(base, n)
    return _assemble_key_block(raw, n, phi_effective)


def key_frame(
    config: SyncConfig, frame_index: int, n: int, phi_effective: float
) -> KeyFrame:
    """Randomly-accessible key frame for the given stream position."""
    k_m, k_a = key_frame_block(config, frame_index, 1, n, phi_effective)
    return KeyFrame(k_m[0], k_a[0], frame_index)


def iter_key_frames(
    config: SyncConfig, n: int, phi_effective: float, start_frame: int = 0
) -> Iterator[KeyFrame]:
    """Sequential stream of key frames; equals random access frame by frame."""
    gen = config.generator()
    counter = (config.sc + start_frame * config.u) % config.period
    index = start_frame
    while True:
        raw = gen.raw_values(counter, n)[None, :]
        k_m, k_a = _assemble_key_block(raw, n, phi_effective)
        yield KeyFrame(k_m[0], k_a[0], index)
        counter = (counter + config.u) % config.period
        index += 1


def current_counter(config: SyncConfig, t_rx: float, epsilon: float) -> int:
    """Elapsed-counter value cc = floor(((t_rx + eps) - st) * g) mod P.

    Floor, never round: a key must not be consumed before its frame begins.
    """
    elapsed = (t_rx + epsilon) - config.st
    if elapsed < 0:
        raise ClockError("receiver time precedes stream start")
    return int(math.floor(elapsed * config.g)) % config.period


def initial_counter(cc: int, u: int) -> int:
    """Largest multiple of u that is <= cc (the counter that begins a frame)."""
    if cc < 0 or u < 1:
        raise ValueError("require cc >= 0 and u >= 1")
    return cc - cc % u
