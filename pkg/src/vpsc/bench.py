"""Experiment runner: BER sweeps, secrecy traces, spectra and sync trials.

Every run is a pure function of its spec and seeds.  Per-point randomness is
derived from (seed, point_index) so results do not depend on execution
order.  The transmitter -> channel -> receiver loop is vectorized over
symbols: all frames of a sweep point are modulated, encrypted, pushed
through the channel as one continuous stream (so multipath echoes really do
cross symbol boundaries), then decrypted and demodulated frame by frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines
from .analysis import normalized_autocorrelation, out_of_band_power_fraction, power_spectrum
from .capture import write_capture
from .cipher import CipherConfig, decrypt_frames_block, encrypt_frames_block
from .channel import ChannelConfig, awgn, delay, multipath, noise_sigma
from .errors import ConfigError, SyncFailure
from .frames import analyze_block, synthesize_block
from .keystream import SyncConfig, counters_per_frame, key_frame_block
from .modem import ModemConfig, ber_16qam_awgn, demodulate_block, modulate_block
from .sync import CaptureBuffer, infer_epsilon

CIPHERS = ("none", "vpsc", "fcs", "alm", "rsa")

#: default lambda floor so combined mode keeps a positive buffer when noiseless
LAMBDA_FLOOR_FRACTION = 1e-3

#: alternate RSA prime pairs for multi-key secrecy traces
RSA_PRIME_PAIRS = ((65521, 65519), (65497, 65479), (65449, 65447))


@dataclass
class ExperimentSpec:
    """Declarative description of one experiment run."""

    experiment: str = "ber"
    cipher: str = "vpsc"
    mode: str = "combined"
    symbols: int = 10_000
    snr_db: list = field(default_factory=lambda: [6.0, 8.0, 10.0, 12.0, 14.0, 16.0])
    delay_scale: list = field(default_factory=lambda: [1.0])
    seeds: list = field(default_factory=lambda: [1])
    out_dir: str = "out"
    modem: ModemConfig = field(default_factory=ModemConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    secret_seed: str = "5652534b2d64656d6f2d736565642d30"
    sc: int = 0
    st: float = 0.0
    band_hz: tuple | None = None
    phi_headroom: float = 1.05
    lambda_multiplier: float = 10.0
    psi_multiplier: int = 10
    sync_delays: list = field(default_factory=lambda: [0, 17, 37, 101])
    sync_n_keys: int = 8
    wrong_seed_trials: int = 0
    autocorr_keys: int = 3
    autocorr_symbols: int = 64

    def validate(self) -> None:
        if self.experiment not in ("ber", "ber-delay", "autocorr", "spectrum", "sync"):
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.cipher not in CIPHERS:
            raise ConfigError(f"cipher must be one of {CIPHERS}")
        if self.symbols < 1:
            raise ConfigError("symbol_count must be >= 1")
        if not self.snr_db or not self.delay_scale or not self.seeds:
            raise ConfigError("sweeps and seeds must be non-empty")
        spf = self.modem.samples_per_symbol
        if spf < 8 or spf & (spf - 1):
            raise ConfigError("samples per symbol must be a power of two >= 8")


@dataclass
class BerRecord:
    cipher: str
    snr_db: float
    delay_scale: float
    bit_errors: int
    bits_total: int
    ber: float
    seed: int = 0
    theory_ber: float = float("nan")


# ---------------------------------------------------------------------------
# derived configuration
# ---------------------------------------------------------------------------

def band_mask_from_hz(n: int, sample_rate_hz: float, band_hz) -> np.ndarray | None:
    """Symmetric bin mask for a [lo, hi] Hz band (None = encrypt everything)."""
    if band_hz is None:
        return None
    lo, hi = band_hz
    mask = np.zeros(n, dtype=bool)
    freqs = np.arange(n // 2 + 1) * sample_rate_hz / n
    lower = (freqs >= lo) & (freqs <= hi)
    mask[: n // 2 + 1] = lower
    mask[n // 2 + 1 :] = lower[1 : n // 2][::-1]
    return mask


def bin_noise_sigma(spec: ExperimentSpec, snr_db: float) -> float:
    """Per-bin magnitude noise std sigma0 implied by the sample-domain SNR."""
    ch = replace(spec.channel, snr_db=snr_db)
    sigma_sample = noise_sigma(ch, spec.modem.mean_signal_power)
    return sigma_sample * math.sqrt(spec.modem.samples_per_symbol / 2.0)


def derive_cipher_config(spec: ExperimentSpec, snr_db: float) -> CipherConfig:
    """Cipher parameters for a sweep point.

    phi covers the largest 16-QAM bin magnitude with headroom; lambda and
    psi scale with the per-bin channel noise (10 sigma0 by default), with a
    small positive floor on lambda so combined mode always keeps a buffer.
    """
    spf = spec.modem.samples_per_symbol
    phi = spec.phi_headroom * (spf / 2.0) * spec.modem.amplitude * math.sqrt(18.0)
    sigma0 = bin_noise_sigma(spec, snr_db)
    lam = 0.0
    psi = 0.0
    if spec.mode == "combined":
        lam = max(spec.lambda_multiplier * sigma0, LAMBDA_FLOOR_FRACTION * phi)
    elif spec.mode in ("preemptive_rise", "statistical_floor"):
        psi = spec.psi_multiplier * sigma0
    return CipherConfig(
        n=spf,
        phi=phi,
        lam=lam,
        psi=psi,
        psi_multiplier=spec.psi_multiplier,
        mode=spec.mode,
        band_mask=band_mask_from_hz(spf, spec.modem.sample_rate_hz, spec.band_hz),
    )


def keystream_config(spec: ExperimentSpec, secret_seed: str | None = None) -> SyncConfig:
    n = spec.modem.samples_per_symbol
    u = counters_per_frame(n)
    frame_rate = 1.0 / spec.modem.symbol_seconds
    return SyncConfig(
        sc=spec.sc,
        st=spec.st,
        g=u * frame_rate,
        u=u,
        secret_seed=secret_seed if secret_seed is not None else spec.secret_seed,
    )


def _qam_sample_bound(spec: ExperimentSpec) -> float:
    # largest instantaneous |sample| of a clean symbol, with a little margin
    return 1.025 * spec.modem.amplitude * math.sqrt(18.0)


# ---------------------------------------------------------------------------
# cipher stages (vectorized over a block of frames)
# ---------------------------------------------------------------------------

class _CipherStage:
    """Encrypt/decrypt a (S, spf) block of frames for one sweep point."""

    def __init__(self, spec: ExperimentSpec, snr_db: float, secret_seed=None):
        self.spec = spec
        self.kind = spec.cipher
        self.sync_cfg = keystream_config(spec, secret_seed)
        self.cipher_cfg = derive_cipher_config(spec, snr_db)
        bound = _qam_sample_bound(spec)
        self.q_low, self.q_high = -bound, bound

    def encrypt(self, frames: np.ndarray) -> np.ndarray:
        kind = self.kind
        spec = self.spec
        n = frames.shape[1]
        count = frames.shape[0]
        if kind == "none":
            return frames
        if kind == "vpsc":
            k_m, k_a = key_frame_block(self.sync_cfg, 0, count, n, self.cipher_cfg.phi_effective)
            return encrypt_frames_block(frames, k_m, k_a, self.cipher_cfg)
        if kind == "fcs":
            return self._fcs(frames, inverse=False)
        if kind == "alm":
            factors = self._alm_factors(count, n)
            return baselines.alm_encrypt_samples(frames, factors, self.q_low, self.q_high)
        if kind == "rsa":
            return baselines.rsa_encrypt_samples(frames, self._rsa_key())
        raise ConfigError(f"unknown cipher {kind!r}")

    def decrypt(self, frames: np.ndarray) -> np.ndarray:
        kind = self.kind
        n = frames.shape[1]
        count = frames.shape[0]
        if kind == "none":
            return frames
        if kind == "vpsc":
            k_m, k_a = key_frame_block(self.sync_cfg, 0, count, n, self.cipher_cfg.phi_effective)
            return decrypt_frames_block(frames, k_m, k_a, self.cipher_cfg)
        if kind == "fcs":
            return self._fcs(frames, inverse=True)
        if kind == "alm":
            factors = self._alm_factors(count, n)
            return baselines.alm_decrypt_samples(frames, factors, self.q_low, self.q_high)
        if kind == "rsa":
            return baselines.rsa_decrypt_samples(frames, self._rsa_key())
        raise ConfigError(f"unknown cipher {kind!r}")

    def _alm_factors(self, count: int, n: int) -> np.ndarray:
        gen = self.sync_cfg.generator()
        raw = gen.raw_values(self.sync_cfg.sc, count * n).reshape(count, n)
        return baselines.ALM_FACTOR_LOW + raw * (
            baselines.ALM_FACTOR_HIGH - baselines.ALM_FACTOR_LOW
        )

    def _rsa_key(self, pair: int = 0) -> baselines.RsaSampleKey:
        p, q = RSA_PRIME_PAIRS[pair % len(RSA_PRIME_PAIRS)]
        return baselines.RsaSampleKey(p=p, q=q, q_low=self.q_low, q_high=self.q_high)

    def _fcs(self, frames: np.ndarray, inverse: bool) -> np.ndarray:
        n = frames.shape[1]
        count = frames.shape[0]
        mask = self.cipher_cfg.band_mask
        mags, angs = analyze_block(frames)
        gather = np.tile(np.arange(n), (count, 1))
        for i in range(count):
            key = baselines.fcs_key(self.sync_cfg, i, n, mask)
            if inverse:
                key = key.inverse()
            src = key.bins
            dst = key.bins[key.permutation]
            gather[i, dst] = src
            gather[i, n - dst] = n - src
        rows = np.arange(count)[:, None]
        return synthesize_block(mags[rows, gather], angs[rows, gather])


# ---------------------------------------------------------------------------
# BER experiments
# ---------------------------------------------------------------------------

def _point_channel(spec: ExperimentSpec, snr_db: float, dscale: float, seed: int, index: int) -> ChannelConfig:
    # all ciphers share one noise floor, set by the plaintext signal power;
    # a cipher that transmits more energy genuinely buys itself noise margin
    return replace(
        spec.channel,
        snr_db=snr_db,
        delay_scale=dscale,
        rng_seed=seed * 100_000 + index,
        sample_rate_hz=spec.modem.sample_rate_hz,
        nominal_power=spec.modem.mean_signal_power,
        power_reference="nominal",
    )


def run_ber_point(
    spec: ExperimentSpec, snr_db: float, dscale: float, seed: int, point_index: int
) -> BerRecord:
    """One transmitter -> channel -> receiver sweep point."""
    rng = np.random.default_rng([seed, point_index, 7])
    bits = rng.integers(0, 2, size=(spec.symbols, 4))
    frames = modulate_block(bits, spec.modem)

    stage = _CipherStage(spec, snr_db)
    tx = stage.encrypt(frames)

    ch = _point_channel(spec, snr_db, dscale, seed, point_index)
    stream = np.asarray(tx).reshape(-1)
    received = multipath(stream, ch)
    received = awgn(received, ch)

    rx_frames = received.reshape(spec.symbols, -1)
    decrypted = stage.decrypt(rx_frames)
    bits_hat = demodulate_block(np.asarray(decrypted), spec.modem)

    errors = int(np.sum(bits_hat != bits))
    total = bits.size
    theory = ber_16qam_awgn(snr_db, spec.modem) if not spec.channel.taps else float("nan")
    return BerRecord(
        cipher=spec.cipher,
        snr_db=snr_db,
        delay_scale=dscale,
        bit_errors=errors,
        bits_total=total,
        ber=errors / total,
        seed=seed,
        theory_ber=theory,
    )


def run_ber_experiment(spec: ExperimentSpec) -> list[BerRecord]:
    """BER over the configured SNR x delay_scale sweep (steps 1-10 loop)."""
    spec.validate()
    records = []
    index = 0
    for seed in spec.seeds:
        for snr in spec.snr_db:
            for dscale in spec.delay_scale:
                records.append(run_ber_point(spec, snr, dscale, seed, index))
                index += 1
    return records


# ---------------------------------------------------------------------------
# secrecy: autocorrelation traces
# ---------------------------------------------------------------------------

@dataclass
class AutocorrRecord:
    cipher: str
    key_index: int
    trace: np.ndarray  # normalized autocorrelation, lags 0..max_lag
    off_peak_max: float


def _fixed_test_signal(spec: ExperimentSpec, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng([seed, 11])
    bits = rng.integers(0, 2, size=(spec.autocorr_symbols, 4))
    return modulate_block(bits, spec.modem)


def run_autocorrelation_analysis(spec: ExperimentSpec) -> list[AutocorrRecord]:
    """Normalized ciphertext autocorrelations, three keys per cipher.

    The spectral cipher runs full-band (that is the whiteness claim); the bin
    scrambler is scoped to the configured band, which is how it would guard a
    channel, and is also what exposes its structure.  A pure-sine cryptogram
    of the sample-wise RSA cipher is appended as the period-retention probe.
    """
    spec.validate()
    frames = _fixed_test_signal(spec, spec.seeds[0])
    n = frames.shape[1]
    records = [
        AutocorrRecord("plaintext", 0, *_trace_of(frames.reshape(-1), n))
    ]
    for cipher in ("vpsc", "fcs", "alm", "rsa"):
        for key_index in range(spec.autocorr_keys):
            band = spec.band_hz if cipher == "fcs" else None
            sub = replace(spec, cipher=cipher, band_hz=band)
            seed_hex = bytes(f"{spec.secret_seed}-{cipher}-{key_index}", "ascii").hex()
            stage = _CipherStage(sub, math.inf, secret_seed=seed_hex)
            if cipher == "rsa":
                encrypted = baselines.rsa_encrypt_samples(
                    frames, stage._rsa_key(key_index)
                )
            else:
                encrypted = stage.encrypt(frames)
            records.append(
                AutocorrRecord(cipher, key_index, *_trace_of(np.asarray(encrypted).reshape(-1), n))
            )
    records.append(_rsa_sine_record(spec))
    return records


def _rsa_sine_record(spec: ExperimentSpec) -> AutocorrRecord:
    f_c = spec.modem.carrier_hz
    f_s = spec.modem.sample_rate_hz
    t = np.arange(spec.autocorr_symbols * spec.modem.samples_per_symbol)
    sine = spec.modem.amplitude * np.sin(2.0 * np.pi * f_c * t / f_s)
    bound = 1.025 * spec.modem.amplitude
    key = baselines.RsaSampleKey(q_low=-bound, q_high=bound)
    encrypted = baselines.rsa_encrypt_samples(sine, key)
    return AutocorrRecord("rsa_sine", 0, *_trace_of(encrypted, spec.modem.samples_per_symbol))


def _trace_of(stream: np.ndarray, max_lag: int):
    trace = normalized_autocorrelation(stream, max_lag)
    return trace, float(np.abs(trace[1:]).max())


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

@dataclass
class SpectrumRecord:
    cipher: str
    psd: np.ndarray
    out_of_band_fraction: float
    mean_masked_magnitude: float


def run_spectrum_report(spec: ExperimentSpec) -> list[SpectrumRecord]:
    """Power spectral density of the plaintext and of each ciphertext."""
    spec.validate()
    frames = _fixed_test_signal(spec, spec.seeds[0])
    n = frames.shape[1]
    mask = band_mask_from_hz(n, spec.modem.sample_rate_hz, spec.band_hz)
    if mask is None:
        raise ConfigError("spectrum report requires a band (band_hz) to score against")

    records = []
    for cipher in ("none", "vpsc", "fcs", "alm", "rsa"):
        sub = replace(spec, cipher=cipher)
        stage = _CipherStage(sub, math.inf)
        encrypted = np.asarray(stage.encrypt(frames))
        stream = encrypted.reshape(-1)
        psd = power_spectrum(stream, n)
        oob = out_of_band_power_fraction(stream, mask)
        mags, _ = analyze_block(encrypted)
        mean_masked = float(mags[:, mask].mean()) if mask.any() else float("nan")
        name = "plaintext" if cipher == "none" else cipher
        records.append(SpectrumRecord(name, psd, oob, mean_masked))
    return records


# ---------------------------------------------------------------------------
# synchronization trials
# ---------------------------------------------------------------------------

@dataclass
class SyncRecord:
    injected_samples: int
    inferred_samples: float
    error_samples: float
    status: str  # "ok" or "sync-failure"
    wrong_seed: bool = False


def _encrypted_stream(spec: ExperimentSpec, n_frames: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 23])
    bits = rng.integers(0, 2, size=(n_frames, 4))
    frames = modulate_block(bits, spec.modem)
    stage = _CipherStage(spec, spec.channel.snr_db)
    return np.asarray(stage.encrypt(frames)).reshape(-1)


def run_sync_trial(spec: ExperimentSpec, capture_dir=None) -> list[SyncRecord]:
    """Ground-truth delay injection against the time-delay inference."""
    spec.validate()
    if spec.cipher != "vpsc":
        raise ConfigError("sync trials run on the vpsc cipher")
    n = spec.modem.samples_per_symbol
    f_s = spec.modem.sample_rate_hz
    sync_cfg = keystream_config(spec)
    buffer_len = (spec.sync_n_keys + 4) * n
    skip = 2 * n
    n_frames = (skip + buffer_len) // n + 3

    records = []
    for trial, rho in enumerate(spec.sync_delays):
        stream = _encrypted_stream(spec, n_frames, spec.seeds[0])
        received = delay(stream, int(rho))
        ch = _point_channel(spec, spec.channel.snr_db, 1.0, spec.seeds[0], trial)
        received = awgn(received, ch)
        samples = received[skip : skip + buffer_len]
        if capture_dir is not None:
            write_capture(
                f"{capture_dir}/capture_rho{int(rho)}.vpsc", samples, n, f_s
            )
        buffer = CaptureBuffer(samples, spec.st + skip / f_s, f_s)
        cip = derive_cipher_config(spec, spec.channel.snr_db)
        try:
            eps = infer_epsilon(buffer, sync_cfg, cip, spec.sync_n_keys)
            inferred = eps * f_s
            records.append(
                SyncRecord(int(rho), inferred, inferred - rho, "ok")
            )
        except SyncFailure:
            records.append(SyncRecord(int(rho), float("nan"), float("nan"), "sync-failure"))

    for trial in range(spec.wrong_seed_trials):
        stream = _encrypted_stream(spec, n_frames, spec.seeds[0] + trial)
        received = awgn(delay(stream, 0), _point_channel(spec, spec.channel.snr_db, 1.0, spec.seeds[0], 1000 + trial))
        samples = received[skip : skip + buffer_len]
        buffer = CaptureBuffer(samples, spec.st + skip / f_s, f_s)
        wrong = keystream_config(spec, secret_seed=bytes(f"wrong-{trial}", "ascii").hex())
        cip = derive_cipher_config(spec, spec.channel.snr_db)
        try:
            eps = infer_epsilon(buffer, wrong, cip, spec.sync_n_keys)
            records.append(SyncRecord(0, eps * f_s, eps * f_s, "ok", wrong_seed=True))
        except SyncFailure:
            records.append(
                SyncRecord(0, float("nan"), float("nan"), "sync-failure", wrong_seed=True)
            )
    return records
