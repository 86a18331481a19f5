"""Frame-level conversion between time-domain samples and polar spectra.

Conventions frozen for the whole package:

* forward transform is the unnormalized DFT, the inverse carries the 1/N
  factor;
* angles live on [-pi, pi);
* DC and Nyquist bins of a real frame carry angle 0 or -pi only, so their
  magnitudes stay nonnegative and a sign flip of the real component is
  encoded in the angle;
* bins above N/2 are the mirror of bins below it (magnitudes equal, angles
  negated), which analyze() enforces exactly by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FrameLengthError, SymmetryError

TWO_PI = 2.0 * np.pi

#: default absolute tolerance for round trips and symmetry checks
ROUNDTRIP_TOL = 1e-9


def _require_power_of_two(n: int) -> None:
    if n < 8 or n & (n - 1):
        raise FrameLengthError(f"frame length must be 2**k with k >= 3, got {n}")


def wrap_angle(theta):
    """Wrap an angle (scalar or array) onto [-pi, pi).

    The left boundary is inclusive: wrap_angle(-pi) == -pi, and +pi maps
    to -pi.
    """
    arr = np.asarray(theta, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("wrap_angle requires finite input")
    wrapped = np.mod(arr + np.pi, TWO_PI) - np.pi
    if np.isscalar(theta) or arr.ndim == 0:
        return float(wrapped)
    return wrapped


@dataclass
class SignalFrame:
    """N real time-domain samples of one cipher frame."""

    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise FrameLengthError("SignalFrame requires a 1-D sample vector")
        _require_power_of_two(len(self.samples))

    @property
    def n(self) -> int:
        return len(self.samples)


def check_quantized_range(samples, q_low: float, q_high: float) -> None:
    """Assert ingest samples honor the quantized range [q_low, q_high]."""
    samples = np.asarray(samples)
    if samples.size and (samples.min() < q_low or samples.max() > q_high):
        raise ValueError(
            f"samples outside quantized range [{q_low}, {q_high}]"
        )


@dataclass
class SpectrumFrame:
    """Polar DFT of a real frame: nonnegative magnitudes, angles on [-pi, pi).

    Ciphertext spectra reuse this type; their magnitudes may exceed the
    plaintext range but the symmetry structure is identical.
    """

    magnitudes: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        self.magnitudes = np.asarray(self.magnitudes, dtype=np.float64)
        self.angles = np.asarray(self.angles, dtype=np.float64)
        if self.magnitudes.shape != self.angles.shape or self.magnitudes.ndim != 1:
            raise FrameLengthError("magnitude/angle vectors must be equal-length 1-D")
        _require_power_of_two(len(self.magnitudes))

    @property
    def n(self) -> int:
        return len(self.magnitudes)

    def validate(self, tol: float = ROUNDTRIP_TOL) -> None:
        """Check all type invariants; raises SymmetryError on violation."""
        _check_polar_symmetry(self.magnitudes[None, :], self.angles[None, :], tol)


def _check_polar_symmetry(mags: np.ndarray, angs: np.ndarray, tol: float) -> None:
    """Validate a block of polar spectra (rows) against the realness structure.

    Tolerance is relative to the per-row magnitude scale so that bins holding
    only numerical dust never trip the check.
    """
    n = mags.shape[1]
    half = n // 2
    if np.any(mags < -tol * np.maximum(1.0, np.abs(mags).max())):
        raise SymmetryError("negative magnitude")
    if np.any(angs < -np.pi) or np.any(angs >= np.pi):
        raise SymmetryError("angle outside [-pi, pi)")
    scale = np.maximum(mags.max(axis=1, keepdims=True), 1.0)
    # mirror bins must match in rectangular form (handles -pi/y+pi aliasing)
    zl = mags[:, 1:half] * np.exp(1j * angs[:, 1:half])
    zu = mags[:, -1:half:-1] * np.exp(1j * angs[:, -1:half:-1])
    if np.any(np.abs(zl - np.conj(zu)) > tol * scale):
        raise SymmetryError("conjugate-symmetry violation beyond tolerance")
    for b in (0, half):
        z = mags[:, b] * np.exp(1j * angs[:, b])
        if np.any(np.abs(z.imag) > tol * scale[:, 0]):
            raise SymmetryError("DC/Nyquist bin is not purely real")


def _real_bin_polar(values: np.ndarray):
    """Polar form of a purely real bin value: magnitude >= 0, angle 0 or -pi."""
    mags = np.abs(values)
    angs = np.where(values < 0.0, -np.pi, 0.0)
    return mags, angs


def analyze_block(samples: np.ndarray):
    """Unnormalized forward DFT of a block of frames (rows) in polar form.

    Returns (magnitudes, angles), each shaped like ``samples``.  The mirror
    half is rebuilt from the lower half so the symmetry invariants hold
    exactly, not merely to rounding error.
    """
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.shape[-1]
    _require_power_of_two(n)
    half = n // 2
    spec = np.fft.rfft(samples, axis=-1)

    mags = np.empty_like(samples)
    angs = np.empty_like(samples)
    mags[..., 1:half] = np.abs(spec[..., 1:half])
    angs[..., 1:half] = wrap_angle(np.angle(spec[..., 1:half]))
    mags[..., 0], angs[..., 0] = _real_bin_polar(spec[..., 0].real)
    mags[..., half], angs[..., half] = _real_bin_polar(spec[..., half].real)
    mags[..., half + 1:] = mags[..., half - 1:0:-1]
    angs[..., half + 1:] = wrap_angle(-angs[..., half - 1:0:-1])
    return mags, angs


def synthesize_block(mags: np.ndarray, angs: np.ndarray, tol: float = ROUNDTRIP_TOL):
    """Inverse DFT (1/N) of a block of polar spectra back to real frames.

    Raises SymmetryError when a row violates the realness structure or when
    the inverse transform leaves more than ``tol`` of imaginary residue per
    sample (a malformed key or corrupted spectrum).
    """
    mags = np.atleast_2d(np.asarray(mags, dtype=np.float64))
    angs = np.atleast_2d(np.asarray(angs, dtype=np.float64))
    _require_power_of_two(mags.shape[1])
    _check_polar_symmetry(mags, angs, tol)
    spectrum = mags * np.exp(1j * angs)
    frames = np.fft.ifft(spectrum, axis=1)
    residue = np.abs(frames.imag).max()
    if residue > tol:
        raise SymmetryError(f"imaginary residue {residue:.3e} exceeds {tol:.1e}")
    return frames.real


def canonicalize_polar(mags: np.ndarray, angs: np.ndarray):
    """Fold negative magnitudes into the angle (m, a) -> (|m|, a + pi).

    Decryption of a noisy spectrum is modular arithmetic and may land
    slightly below zero; the folded form is the identical complex value in
    proper polar coordinates.
    """
    mags = np.asarray(mags, dtype=np.float64)
    angs = np.asarray(angs, dtype=np.float64)
    neg = mags < 0.0
    if not np.any(neg):
        return mags, angs
    return np.abs(mags), np.where(neg, wrap_angle(angs + np.pi), angs)


def analyze(frame: SignalFrame) -> SpectrumFrame:
    """Polar DFT of one frame (see analyze_block for conventions)."""
    if not isinstance(frame, SignalFrame):
        frame = SignalFrame(np.asarray(frame))
    mags, angs = analyze_block(frame.samples[None, :])
    return SpectrumFrame(mags[0], angs[0])


def synthesize(spectrum: SpectrumFrame, tol: float = ROUNDTRIP_TOL) -> SignalFrame:
    """Real frame for one polar spectrum (see synthesize_block)."""
    frames = synthesize_block(
        spectrum.magnitudes[None, :], spectrum.angles[None, :], tol
    )
    return SignalFrame(frames[0])
