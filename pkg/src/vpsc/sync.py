"""Decrypter-side time-delay inference by sliding trial decryption.

The decrypter captures several frames' worth of encrypted samples, computes
the key frames that should fall in the middle of the buffer assuming zero
time offset, then slides an N-sample window one sample at a time, decrypting
each position with each key and scoring how far the result is from white
noise.  A key only decrypts its own frame, so the score peaks exactly where
that frame actually sits; superimposing the per-key score traces at their
expected offsets and averaging sharpens the peak against noise.  The
distance between the peak and the expected position is the time offset
(clock drift plus propagation delay).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import autocorrelation_block
from .cipher import CipherConfig, decrypt_spectra_block
from .errors import ConfigError, SyncFailure, UndefinedMetricError
from .frames import SignalFrame, analyze_block, canonicalize_polar, synthesize_block
from .keystream import SyncConfig, current_counter, initial_counter, key_frame_block

#: peak detection threshold, standard deviations above the off-peak mean.
#: The scan background holds only a handful of independent patches and its
#: fluctuations are common-mode across keys, so its empirical maxima reach
#: z ~ 5; genuine peaks measure z > 250.  8 sigma splits the two with wide
#: margin on both sides.
PEAK_SIGMA = 8.0

#: keys averaged by default (one per frame around the buffer middle)
DEFAULT_N_KEYS = 8


@dataclass
class CaptureBuffer:
    """Several frames of received signal with the receiver-clock timestamp
    of its first sample."""

    samples: np.ndarray
    t_rx_head: float
    sample_rate_hz: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ConfigError("capture must be a 1-D sample vector")


@dataclass
class MetricTrace:
    """Per-key whiteness scores indexed by window shift."""

    traces: np.ndarray  # (n_keys, n_shifts)
    frame_indices: list
    expected_positions: list  # buffer sample index of each frame if eps == 0


def whiteness_metric(frame, absolute: bool = True) -> float:
    """Autocorrelation whiteness score alpha of one frame.

    The raw variant is sum(R[1:]) / R[0]; the default absolute variant sums
    |R[k]| instead, which does not cancel and is what peak detection uses.
    Small for white noise, large for structured signals.
    """
    samples = frame.samples if isinstance(frame, SignalFrame) else np.asarray(frame)
    return float(whiteness_block(samples[None, :], absolute)[0])


def whiteness_block(frames: np.ndarray, absolute: bool = True) -> np.ndarray:
    """Row-wise whiteness metric."""
    r = autocorrelation_block(np.asarray(frames, dtype=np.float64))
    r0 = r[..., 0]
    if np.any(r0 == 0.0):
        raise UndefinedMetricError("whiteness metric undefined for an all-zero frame")
    tail = np.abs(r[..., 1:]) if absolute else r[..., 1:]
    return tail.sum(axis=-1) / r0


def frames_per_second(sync_cfg: SyncConfig) -> float:
    """Key frame rate implied by the counter rate g and the frame stride u."""
    return sync_cfg.g / sync_cfg.u


def compute_metric_traces(
    buffer: CaptureBuffer,
    sync_cfg: SyncConfig,
    cipher_cfg: CipherConfig,
    n_keys: int = DEFAULT_N_KEYS,
    absolute: bool = True,
) -> MetricTrace:
    """Slide an N-window over the buffer and score trial decryptions."""
    n = cipher_cfg.n
    samples = buffer.samples
    if len(samples) < 3 * n:
        raise ConfigError("capture must span at least 3 frames")
    if n_keys < 1:
        raise ConfigError("need at least one key")

    # keys for the frames that should fall around the buffer middle (eps = 0)
    t_mid = buffer.t_rx_head + 0.5 * len(samples) / buffer.sample_rate_hz
    cc = current_counter(sync_cfg, t_mid, 0.0)
    mid_frame = initial_counter(cc, sync_cfg.u) // sync_cfg.u
    first = max(mid_frame - n_keys // 2, 0)
    indices = list(range(first, first + n_keys))
    k_m, k_a = key_frame_block(
        sync_cfg, first, n_keys, n, cipher_cfg.phi_effective
    )

    rate = frames_per_second(sync_cfg)
    expected = [
        (sync_cfg.st + idx / rate - buffer.t_rx_head) * buffer.sample_rate_hz
        for idx in indices
    ]

    windows = np.ascontiguousarray(np.lib.stride_tricks.sliding_window_view(samples, n))
    mags, angs = analyze_block(windows)  # key-independent, computed once
    traces = np.empty((n_keys, windows.shape[0]))
    for i in range(n_keys):
        m_m, m_a = decrypt_spectra_block(mags, angs, k_m[i], k_a[i], cipher_cfg)
        decrypted = synthesize_block(*canonicalize_polar(m_m, m_a))
        traces[i] = whiteness_block(decrypted, absolute)
    return MetricTrace(traces, indices, expected)


def _superimpose(trace: MetricTrace, n_shifts: int):
    """Average the per-key traces aligned at their expected frame offsets.

    Returns (offsets, averaged) where offsets are window shifts relative to
    the expected (eps = 0) frame positions.
    """
    positions = [int(round(p)) for p in trace.expected_positions]
    lo = max(-p for p in positions)
    hi = min(n_shifts - p for p in positions)
    if hi <= lo:
        raise SyncFailure("buffer too short to superimpose the key traces")
    offsets = np.arange(lo, hi)
    stack = np.stack([trace.traces[i, offsets + p] for i, p in enumerate(positions)])
    return offsets, stack.mean(axis=0)


def infer_epsilon(
    buffer: CaptureBuffer,
    sync_cfg: SyncConfig,
    cipher_cfg: CipherConfig,
    n_keys: int = DEFAULT_N_KEYS,
    absolute: bool = True,
) -> float:
    """Receiver time offset (seconds) recovered from the capture.

    Raises SyncFailure when no whiteness peak clears the off-peak
    mean + PEAK_SIGMA * stddev threshold, which is what a wrong seed or an
    offset beyond the buffer looks like.
    """
    n = cipher_cfg.n
    trace = compute_metric_traces(buffer, sync_cfg, cipher_cfg, n_keys, absolute)
    offsets, averaged = _superimpose(trace, trace.traces.shape[1])

    peak_pos = int(np.argmax(averaged))
    background = np.concatenate(
        [averaged[: max(peak_pos - n // 2, 0)], averaged[peak_pos + n // 2 :]]
    )
    if background.size < 8:
        raise SyncFailure("not enough off-peak background to calibrate")
    threshold = background.mean() + PEAK_SIGMA * background.std()
    if averaged[peak_pos] <= threshold:
        raise SyncFailure(
            f"no peak above threshold ({averaged[peak_pos]:.4g} <= {threshold:.4g})"
        )
    return float(offsets[peak_pos]) / buffer.sample_rate_hz
