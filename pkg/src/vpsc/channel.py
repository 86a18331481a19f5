"""Deterministic, seedable channel impairments.

AWGN is injected at a target SNR against the measured power of the stream it
is given.  Multipath applies per-tap complex fading to the analytic signal
(real part taken), so a tap is a Rayleigh-distributed magnitude whose phase
rotates at the configured Doppler bandwidth.  A ``frozen`` tap is the
degenerate deterministic case: gain exactly sqrt(mean_power), no fading, no
rotation, which is what the reproducible inter-symbol-interference sweeps in
the benchmark use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import hilbert

from .errors import ConfigError


@dataclass
class ChannelTap:
    delay: float  # samples, before delay_scale
    mean_power: float = 1.0
    doppler_hz: float = 0.0
    frozen: bool = False

    def __post_init__(self):
        if self.delay < 0:
            raise ConfigError("tap delays must be nonnegative")
        if self.mean_power <= 0:
            raise ConfigError("tap mean powers must be positive")
        if self.doppler_hz < 0:
            raise ConfigError("doppler must be nonnegative")


@dataclass
class ChannelConfig:
    snr_db: float = math.inf
    taps: list = field(default_factory=list)
    delay_scale: float = 1.0
    rng_seed: int = 0
    bulk_delay: int = 0
    sample_rate_hz: float = 64_000.0
    nominal_power: float = 1.0
    #: "measured" scales noise to the power of the stream being transmitted;
    #: "nominal" fixes the noise floor against nominal_power, which is how a
    #: shared channel treats ciphers whose waveforms carry different energy
    power_reference: str = "measured"

    def __post_init__(self):
        self.taps = [t if isinstance(t, ChannelTap) else ChannelTap(**t) for t in self.taps]
        if self.taps and self.taps[0].delay != 0:
            raise ConfigError("first tap must have zero delay")
        if self.bulk_delay < 0:
            raise ConfigError("bulk delay must be nonnegative")
        if self.nominal_power <= 0:
            raise ConfigError("nominal power must be positive")
        if self.power_reference not in ("measured", "nominal"):
            raise ConfigError("power_reference must be 'measured' or 'nominal'")


def default_tap_profile() -> list:
    """Three-tap mobile profile sized to show ISI inside one 256-sample frame."""
    return [
        ChannelTap(delay=0, mean_power=1.0, doppler_hz=0.0),
        ChannelTap(delay=5, mean_power=0.5, doppler_hz=30.0),
        ChannelTap(delay=12, mean_power=0.25, doppler_hz=60.0),
    ]


def _rng(cfg: ChannelConfig, stream: int) -> np.random.Generator:
    return np.random.default_rng([cfg.rng_seed, stream])


def awgn(samples: np.ndarray, cfg: ChannelConfig, rng=None) -> np.ndarray:
    """Add white Gaussian noise at the configured SNR (infinite = passthrough).

    Noise variance is set against the measured power of ``samples``; a
    zero-power input falls back to cfg.nominal_power.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if math.isinf(cfg.snr_db):
        return samples.copy()
    if not math.isfinite(cfg.snr_db):
        raise ConfigError("snr_db must be finite or +inf")
    if cfg.power_reference == "nominal":
        power = cfg.nominal_power
    else:
        power = float(np.mean(samples ** 2)) if samples.size else 0.0
        if power == 0.0:
            power = cfg.nominal_power
    sigma = math.sqrt(power / 10.0 ** (cfg.snr_db / 10.0))
    if rng is None:
        rng = _rng(cfg, 1)
    return samples + sigma * rng.standard_normal(samples.shape)


def noise_sigma(cfg: ChannelConfig, signal_power: float) -> float:
    """Per-sample noise standard deviation the awgn op will inject."""
    if math.isinf(cfg.snr_db):
        return 0.0
    return math.sqrt(signal_power / 10.0 ** (cfg.snr_db / 10.0))


def fading_gains(
    tap: ChannelTap, nsamples: int, sample_rate_hz: float, rng
) -> np.ndarray:
    """Complex tap gain per sample with E|g|^2 == mean_power.

    The process is complex Gaussian, band-limited to the Doppler bandwidth
    via a spectral construction; its magnitude is therefore Rayleigh.  Zero
    Doppler degenerates to a single held draw, and a frozen tap is the
    constant real gain sqrt(mean_power).
    """
    if tap.frozen:
        return np.full(nsamples, math.sqrt(tap.mean_power), dtype=np.complex128)
    scale = math.sqrt(tap.mean_power / 2.0)
    if tap.doppler_hz == 0.0:
        g = complex(rng.standard_normal(), rng.standard_normal()) * scale
        return np.full(nsamples, g, dtype=np.complex128)
    n_bins = max(1, int(round(tap.doppler_hz * nsamples / sample_rate_hz)))
    n_bins = min(n_bins, nsamples // 2 - 1) if nsamples >= 4 else 1
    idx = np.concatenate([np.arange(0, n_bins + 1), np.arange(-n_bins, 0)])
    coeffs = rng.standard_normal(len(idx)) + 1j * rng.standard_normal(len(idx))
    spectrum = np.zeros(nsamples, dtype=np.complex128)
    spectrum[idx] = coeffs
    g = np.fft.ifft(spectrum) * nsamples / math.sqrt(len(idx))
    return g * scale


def multipath(samples: np.ndarray, cfg: ChannelConfig, rng=None) -> np.ndarray:
    """Sum of faded, delayed copies of the input (same length as input)."""
    samples = np.asarray(samples, dtype=np.float64)
    if not cfg.taps:
        return samples.copy()
    if rng is None:
        rng = _rng(cfg, 2)
    delays = [int(round(t.delay * cfg.delay_scale)) for t in cfg.taps]
    if max(delays) >= len(samples):
        raise ConfigError("scaled tap delay exceeds the signal buffer")
    analytic = hilbert(samples)
    out = np.zeros(len(samples), dtype=np.complex128)
    for tap, d in zip(cfg.taps, delays):
        gains = fading_gains(tap, len(samples), cfg.sample_rate_hz, rng)
        shifted = np.concatenate([np.zeros(d, dtype=np.complex128), analytic[: len(samples) - d]])
        out += gains * shifted
    return out.real


def delay(samples: np.ndarray, rho: int) -> np.ndarray:
    """Prepend rho zero samples (sample-accurate propagation delay)."""
    if rho < 0:
        raise ConfigError("propagation delay must be nonnegative")
    samples = np.asarray(samples, dtype=np.float64)
    return np.concatenate([np.zeros(rho), samples])


def transmit(samples: np.ndarray, cfg: ChannelConfig) -> np.ndarray:
    """Full channel: bulk delay, then multipath, then receiver noise."""
    out = delay(samples, cfg.bulk_delay) if cfg.bulk_delay else np.asarray(
        samples, dtype=np.float64
    )
    out = multipath(out, cfg, _rng(cfg, 2))
    return awgn(out, cfg, _rng(cfg, 1))
