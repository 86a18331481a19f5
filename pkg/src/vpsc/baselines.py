"""Comparison signal ciphers: bin scrambling, log masking, sample-wise RSA.

These are implemented faithfully including their documented weaknesses: the
scrambler only relocates spectral content, log masking amplifies channel
noise exponentially on decryption, and sample-wise RSA with a fixed key is
deterministic and falls apart on any rounding error in the received samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, PermutationError
from .frames import SignalFrame, analyze_block, synthesize_block, wrap_angle
from .keystream import KeystreamGenerator, SyncConfig, counters_per_frame

# ---------------------------------------------------------------------------
# frequency component scrambling (FCS)
# ---------------------------------------------------------------------------


@dataclass
class FcsKey:
    """Keyed bijection on the masked lower-half bins, mirrored to conjugates."""

    permutation: np.ndarray
    bins: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        self.permutation = np.asarray(self.permutation, dtype=np.int64)
        self.bins = np.asarray(self.bins, dtype=np.int64)
        if sorted(self.permutation.tolist()) != list(range(len(self.bins))):
            raise PermutationError("permutation is not a bijection on the masked bins")

    def inverse(self) -> "FcsKey":
        inv = np.empty_like(self.permutation)
        inv[self.permutation] = np.arange(len(self.permutation))
        return FcsKey(inv, self.bins, self.frame_index)


def scramble_bins(n: int, band_mask: np.ndarray | None = None) -> np.ndarray:
    """Lower-half bin indices subject to scrambling (DC/Nyquist excluded)."""
    bins = np.arange(1, n // 2)
    if band_mask is not None:
        band_mask = np.asarray(band_mask, dtype=bool)
        bins = bins[band_mask[1:n // 2]]
    return bins


def fcs_key(
    config: SyncConfig, frame_index: int, n: int, band_mask: np.ndarray | None = None
) -> FcsKey:
    """Fisher-Yates shuffle of the masked bins, seeded from the keystream."""
    bins = scramble_bins(n, band_mask)
    base = (config.sc + frame_index * config.u) % config.period
    raw = config.generator().raw_values(base, max(len(bins) - 1, 0))
    perm = np.arange(len(bins))
    for i in range(len(bins) - 1, 0, -1):
        j = int(raw[len(bins) - 1 - i] * (i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return FcsKey(perm, bins, frame_index)


def _apply_permutation(frames: np.ndarray, key: FcsKey) -> np.ndarray:
    mags, angs = analyze_block(frames)
    n = frames.shape[-1]
    src = key.bins
    dst = key.bins[key.permutation]
    out_m = mags.copy()
    out_a = angs.copy()
    out_m[..., dst] = mags[..., src]
    out_a[..., dst] = angs[..., src]
    out_m[..., n - dst] = mags[..., src]
    out_a[..., n - dst] = wrap_angle(-angs[..., src])
    return synthesize_block(out_m, out_a)


def fcs_encrypt(s: SignalFrame, key: FcsKey) -> SignalFrame:
    return SignalFrame(_apply_permutation(s.samples[None, :], key)[0])


def fcs_decrypt(s: SignalFrame, key: FcsKey) -> SignalFrame:
    return SignalFrame(_apply_permutation(s.samples[None, :], key.inverse())[0])


# ---------------------------------------------------------------------------
# amplitude log masking (ALM)
# ---------------------------------------------------------------------------

#: factors are kept away from zero to cap the decryption blow-up
ALM_FACTOR_LOW = 0.1
ALM_FACTOR_HIGH = 2.0


@dataclass
class AlmKey:
    """Per-sample positive multipliers drawn from the keystream."""

    factors: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        self.factors = np.asarray(self.factors, dtype=np.float64)
        if np.any(self.factors <= 0):
            raise ConfigError("ALM factors must be positive")


def alm_key(config: SyncConfig, frame_index: int, n: int) -> AlmKey:
    base = (config.sc + frame_index * config.u) % config.period
    raw = config.generator().raw_values(base, n)
    return AlmKey(ALM_FACTOR_LOW + raw * (ALM_FACTOR_HIGH - ALM_FACTOR_LOW), frame_index)


def _alm_offset(s, q_low: float, q_high: float):
    # affine map of [q_low, q_high] onto [1, 2] keeps the log argument positive
    return 1.0 + (np.asarray(s, dtype=np.float64) - q_low) / (q_high - q_low)


def _alm_unoffset(v, q_low: float, q_high: float):
    return (np.asarray(v, dtype=np.float64) - 1.0) * (q_high - q_low) + q_low


def alm_encrypt_samples(samples, factors, q_low: float, q_high: float):
    return np.log(_alm_offset(samples, q_low, q_high) * factors)


def alm_decrypt_samples(samples, factors, q_low: float, q_high: float):
    return _alm_unoffset(np.exp(samples) / factors, q_low, q_high)


def alm_encrypt(s: SignalFrame, key: AlmKey, q_low: float, q_high: float) -> SignalFrame:
    # ALM frames need not be power-of-two, but SignalFrame enforces it anyway
    return SignalFrame(alm_encrypt_samples(s.samples, key.factors, q_low, q_high))


def alm_decrypt(s: SignalFrame, key: AlmKey, q_low: float, q_high: float) -> SignalFrame:
    return SignalFrame(alm_decrypt_samples(s.samples, key.factors, q_low, q_high))


# ---------------------------------------------------------------------------
# sample-wise RSA
# ---------------------------------------------------------------------------

#: desk-scale defaults: 16-bit primes, 12-bit quantizer
DEFAULT_P = 65521
DEFAULT_Q = 65519
DEFAULT_E = 65537
DEFAULT_LEVELS = 4096


def _is_prime(x: int) -> bool:
    if x < 2:
        return False
    for d in range(2, int(math.isqrt(x)) + 1):
        if x % d == 0:
            return False
    return True


@dataclass
class RsaSampleKey:
    """Textbook RSA parameters plus the sample quantizer.

    The same key encrypts every sample, so equal plaintext samples always
    map to equal ciphertext samples.
    """

    p: int = DEFAULT_P
    q: int = DEFAULT_Q
    e: int = DEFAULT_E
    levels: int = DEFAULT_LEVELS
    q_low: float = -1.0
    q_high: float = 1.0

    def __post_init__(self):
        if not (_is_prime(self.p) and _is_prime(self.q)):
            raise ConfigError("p and q must be prime")
        self.n = self.p * self.q
        if self.n < self.levels:
            raise ConfigError("modulus must cover the quantizer levels")
        lam = math.lcm(self.p - 1, self.q - 1)
        if math.gcd(self.e, lam) != 1:
            raise ConfigError("e must be coprime with lcm(p-1, q-1)")
        self.d = pow(self.e, -1, lam)
        # one table per distinct plaintext level; decryption has no such table
        self._enc_table = None

    def encrypt_table(self) -> np.ndarray:
        if self._enc_table is None:
            self._enc_table = np.array(
                [pow(m, self.e, self.n) for m in range(self.levels)], dtype=np.uint64
            )
        return self._enc_table


def _powmod_u64(base: np.ndarray, exponent: int, modulus: int) -> np.ndarray:
    """Vectorized modular exponentiation; valid while modulus**2 < 2**64."""
    result = np.ones_like(base, dtype=np.uint64)
    acc = np.mod(base.astype(np.uint64), np.uint64(modulus))
    mod = np.uint64(modulus)
    e = exponent
    while e:
        if e & 1:
            result = (result * acc) % mod
        acc = (acc * acc) % mod
        e >>= 1
    return result


def rsa_quantize(samples, key: RsaSampleKey) -> np.ndarray:
    step = (key.q_high - key.q_low) / (key.levels - 1)
    idx = np.rint((np.asarray(samples, dtype=np.float64) - key.q_low) / step)
    return np.clip(idx, 0, key.levels - 1).astype(np.int64)


def rsa_dequantize(values, key: RsaSampleKey) -> np.ndarray:
    step = (key.q_high - key.q_low) / (key.levels - 1)
    return key.q_low + np.asarray(values, dtype=np.float64) * step


def rsa_encrypt_samples(samples, key: RsaSampleKey) -> np.ndarray:
    m_int = rsa_quantize(samples, key)
    c_int = key.encrypt_table()[m_int]
    # rescale the huge residue range onto the signal range for transmission
    return key.q_low + c_int.astype(np.float64) / (key.n - 1) * (key.q_high - key.q_low)


def rsa_decrypt_samples(samples, key: RsaSampleKey) -> np.ndarray:
    scaled = (np.asarray(samples, dtype=np.float64) - key.q_low) * (
        (key.n - 1) / (key.q_high - key.q_low)
    )
    c_int = np.clip(np.rint(scaled), 0, key.n - 1).astype(np.uint64)
    m_int = _powmod_u64(c_int, key.d, key.n)
    # corrupted ciphertexts decrypt to arbitrary residues; fold into range
    return rsa_dequantize(m_int % np.uint64(key.levels), key)


def rsa_encrypt(s: SignalFrame, key: RsaSampleKey) -> SignalFrame:
    return SignalFrame(rsa_encrypt_samples(s.samples, key))


def rsa_decrypt(s: SignalFrame, key: RsaSampleKey) -> SignalFrame:
    return SignalFrame(rsa_decrypt_samples(s.samples, key))
