"""Spectral one-time-pad encryption with modulo-noise mitigation modes.

Magnitude arithmetic is modular on [0, phi_effective); angle arithmetic wraps
on the 2*pi circle and is identical in every mode.  The four modes differ
only in their magnitude path:

plain              c = ((m + k) mod phi) + lam
                   m = ((c - lam) - k) mod phi
preemptive_rise    c = ((m + k + psi) mod (phi + 2*psi)) + lam
                   m = ((c - lam) - k) mod (phi + 2*psi) - psi
statistical_floor  encrypts as plain; the decrypter clamps "impossible"
                   magnitudes (>= phi after amplification removal) down to
                   phi - eps, floors "unlikely fallouts" in [-psi, 0) to 0,
                   then reduces mod phi
combined           c = ((m + lam + k) mod (phi + 2*lam)) + lam
                   m: clamp c to phi + 3*lam, strip lam, clamp negatives,
                   subtract k mod (phi + 2*lam), strip lam

Keys must be drawn with phi_effective matching the mode; CipherConfig owns
that bookkeeping.  Unmasked bins pass through both directions bit-identical,
but keys are still consumed for them so keystream alignment is independent
of the mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, PhiViolationError
from .frames import (
    SignalFrame,
    SpectrumFrame,
    analyze,
    analyze_block,
    canonicalize_polar,
    synthesize,
    synthesize_block,
    wrap_angle,
)
from .keystream import KeyFrame

MODES = ("plain", "preemptive_rise", "statistical_floor", "combined")

#: clamp offset for "impossible magnitudes", as a fraction of phi
EPS_SMALL_FRACTION = 1e-9


@dataclass
class CipherConfig:
    """Frame length, moduli and mitigation settings for the spectral cipher."""

    n: int
    phi: float
    lam: float = 0.0
    psi: float = 0.0
    psi_multiplier: int = 10
    mode: str = "plain"
    band_mask: np.ndarray | None = None

    def __post_init__(self):
        if self.phi <= 0:
            raise ConfigError("phi must be positive")
        if self.lam < 0 or self.psi < 0:
            raise ConfigError("lam and psi must be nonnegative")
        if self.psi_multiplier < 1:
            raise ConfigError("psi_multiplier must be a positive integer")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.mode == "combined" and self.lam <= 0:
            raise ConfigError("combined mode requires lam > 0 (the buffer)")
        if self.band_mask is None:
            self.band_mask = np.ones(self.n, dtype=bool)
        else:
            self.band_mask = np.asarray(self.band_mask, dtype=bool)
            if self.band_mask.shape != (self.n,):
                raise ConfigError("band_mask length must equal n")
            if not np.array_equal(self.band_mask[1:], self.band_mask[1:][::-1]):
                raise ConfigError("band_mask must be symmetric (mask[i] == mask[n-i])")

    @property
    def phi_effective(self) -> float:
        """Magnitude-key range for the configured mode."""
        if self.mode == "preemptive_rise":
            return self.phi + 2.0 * self.psi
        if self.mode == "combined":
            return self.phi + 2.0 * self.lam
        return self.phi

    @property
    def eps_small(self) -> float:
        return EPS_SMALL_FRACTION * self.phi


def psi_from_noise(sigma0: float, multiplier: int = 10) -> float:
    """Buffer width psi = multiplier * sigma0 of the channel magnitude noise."""
    return multiplier * sigma0


# -- magnitude paths (vectorized over blocks of masked-bin values) ----------

def _enc_mag(m, k, cfg: CipherConfig):
    if np.any(m >= cfg.phi):
        raise PhiViolationError(
            f"masked magnitude {float(np.max(m)):.6g} >= phi={cfg.phi:.6g}"
        )
    if cfg.mode == "preemptive_rise":
        return np.mod(m + k + cfg.psi, cfg.phi_effective) + cfg.lam
    if cfg.mode == "combined":
        return np.mod(m + cfg.lam + k, cfg.phi_effective) + cfg.lam
    return np.mod(m + k, cfg.phi) + cfg.lam


def _dec_mag(c, k, cfg: CipherConfig):
    if cfg.mode == "preemptive_rise":
        return np.mod((c - cfg.lam) - k, cfg.phi_effective) - cfg.psi
    if cfg.mode == "combined":
        x = np.minimum(c, cfg.phi + 3.0 * cfg.lam)
        x = x - cfg.lam
        x = np.maximum(x, 0.0)
        return np.mod(x - k, cfg.phi_effective) - cfg.lam
    if cfg.mode == "statistical_floor":
        x = c - cfg.lam
        # impossible magnitudes: nothing legitimate reaches phi without noise
        x = np.where(x >= cfg.phi, cfg.phi - cfg.eps_small, x)
        y = x - k
        # unlikely fallouts: small negatives are noise, not a wrap
        y = np.where((y >= -cfg.psi) & (y < 0.0), 0.0, y)
        return np.mod(y, cfg.phi)
    return np.mod((c - cfg.lam) - k, cfg.phi)


# -- block API (rows = frames) ----------------------------------------------

def encrypt_mags_block(mags, k_m, cfg: CipherConfig):
    mask = cfg.band_mask
    out = np.array(mags, dtype=np.float64, copy=True)
    out[..., mask] = _enc_mag(np.asarray(mags)[..., mask], np.asarray(k_m)[..., mask], cfg)
    return out


def decrypt_mags_block(mags, k_m, cfg: CipherConfig):
    mask = cfg.band_mask
    out = np.array(mags, dtype=np.float64, copy=True)
    out[..., mask] = _dec_mag(np.asarray(mags)[..., mask], np.asarray(k_m)[..., mask], cfg)
    return out


def shift_angles_block(angs, k_a, cfg: CipherConfig, sign: int):
    mask = cfg.band_mask
    out = np.array(angs, dtype=np.float64, copy=True)
    out[..., mask] = wrap_angle(
        np.asarray(angs)[..., mask] + sign * np.asarray(k_a)[..., mask]
    )
    return out


def encrypt_spectra_block(mags, angs, k_m, k_a, cfg: CipherConfig):
    return (
        encrypt_mags_block(mags, k_m, cfg),
        shift_angles_block(angs, k_a, cfg, +1),
    )


def decrypt_spectra_block(mags, angs, k_m, k_a, cfg: CipherConfig):
    return (
        decrypt_mags_block(mags, k_m, cfg),
        shift_angles_block(angs, k_a, cfg, -1),
    )


def encrypt_frames_block(frames, k_m, k_a, cfg: CipherConfig):
    mags, angs = analyze_block(frames)
    c_m, c_a = encrypt_spectra_block(mags, angs, k_m, k_a, cfg)
    return synthesize_block(c_m, c_a)


def decrypt_frames_block(frames, k_m, k_a, cfg: CipherConfig):
    mags, angs = analyze_block(frames)
    m_m, m_a = decrypt_spectra_block(mags, angs, k_m, k_a, cfg)
    # noisy PR/combined decryption may land just below zero magnitude
    m_m, m_a = canonicalize_polar(m_m, m_a)
    return synthesize_block(m_m, m_a)


# -- single-frame API --------------------------------------------------------

def _as_spectrum(mags, angs) -> SpectrumFrame:
    return SpectrumFrame(np.squeeze(mags), np.squeeze(angs))


def encrypt(m: SpectrumFrame, k: KeyFrame, cfg: CipherConfig) -> SpectrumFrame:
    """Mode-dispatched spectral encryption."""
    c_m, c_a = encrypt_spectra_block(
        m.magnitudes[None, :], m.angles[None, :], k.k_m[None, :], k.k_a[None, :], cfg
    )
    return _as_spectrum(c_m, c_a)


def decrypt(c: SpectrumFrame, k: KeyFrame, cfg: CipherConfig) -> SpectrumFrame:
    """Mode-dispatched spectral decryption."""
    m_m, m_a = decrypt_spectra_block(
        c.magnitudes[None, :], c.angles[None, :], k.k_m[None, :], k.k_a[None, :], cfg
    )
    return _as_spectrum(m_m, m_a)


def _with_mode(cfg: CipherConfig, mode: str) -> CipherConfig:
    if cfg.mode == mode:
        return cfg
    return CipherConfig(
        n=cfg.n, phi=cfg.phi, lam=cfg.lam, psi=cfg.psi,
        psi_multiplier=cfg.psi_multiplier, mode=mode, band_mask=cfg.band_mask,
    )


def encrypt_plain(m, k, cfg):
    return encrypt(m, k, _with_mode(cfg, "plain"))


def decrypt_plain(c, k, cfg):
    return decrypt(c, k, _with_mode(cfg, "plain"))


def encrypt_pr(m, k, cfg):
    return encrypt(m, k, _with_mode(cfg, "preemptive_rise"))


def decrypt_pr(c, k, cfg):
    return decrypt(c, k, _with_mode(cfg, "preemptive_rise"))


def decrypt_sf(c, k, cfg):
    """Receiver-only statistical floor; the matching encrypter is plain."""
    return decrypt(c, k, _with_mode(cfg, "statistical_floor"))


def encrypt_combined(m, k, cfg):
    return encrypt(m, k, _with_mode(cfg, "combined"))


def decrypt_combined(c, k, cfg):
    return decrypt(c, k, _with_mode(cfg, "combined"))


def encrypt_frame(s: SignalFrame, k: KeyFrame, cfg: CipherConfig) -> SignalFrame:
    """analyze -> encrypt -> synthesize for one time-domain frame."""
    return synthesize(encrypt(analyze(s), k, cfg))


def decrypt_frame(s: SignalFrame, k: KeyFrame, cfg: CipherConfig) -> SignalFrame:
    """analyze -> decrypt -> synthesize for one received frame."""
    spectrum = decrypt(analyze(s), k, cfg)
    m_m, m_a = canonicalize_polar(spectrum.magnitudes, spectrum.angles)
    return synthesize(SpectrumFrame(m_m, m_a))
