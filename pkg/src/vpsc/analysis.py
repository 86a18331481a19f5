"""Signal statistics shared by the sync module, tests and the benchmark."""

from __future__ import annotations

import math

import numpy as np


def autocorrelation(x: np.ndarray, max_lag: int | None = None) -> np.ndarray:
    """Biased linear autocorrelation R[0..max_lag], computed via FFT."""
    x = np.asarray(x, dtype=np.float64)
    return autocorrelation_block(x[None, :], max_lag)[0]


def autocorrelation_block(x: np.ndarray, max_lag: int | None = None) -> np.ndarray:
    """Row-wise biased linear autocorrelation of a block of signals."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if max_lag is None:
        max_lag = n - 1
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    spec = np.fft.rfft(x, nfft, axis=-1)
    r = np.fft.irfft(spec * np.conj(spec), nfft, axis=-1)
    return r[..., : max_lag + 1]


def normalized_autocorrelation(x: np.ndarray, max_lag: int | None = None) -> np.ndarray:
    """R[k] / R[0]; the zero lag of the result is exactly 1."""
    r = autocorrelation(x, max_lag)
    return r / r[0]


def power_spectrum(x: np.ndarray, nfft: int) -> np.ndarray:
    """Mean periodogram over consecutive length-nfft frames (one-sided)."""
    x = np.asarray(x, dtype=np.float64)
    nframes = len(x) // nfft
    if nframes == 0:
        raise ValueError("signal shorter than one analysis frame")
    frames = x[: nframes * nfft].reshape(nframes, nfft)
    spec = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    return spec.mean(axis=0)


def out_of_band_power_fraction(x: np.ndarray, band_mask: np.ndarray) -> float:
    """Fraction of total power outside the masked bins.

    ``band_mask`` is the full-length symmetric cipher mask; its lower half
    selects the one-sided bins counted as in-band.
    """
    band_mask = np.asarray(band_mask, dtype=bool)
    n = len(band_mask)
    psd = power_spectrum(x, n)
    half_mask = np.concatenate([band_mask[: n // 2], band_mask[n // 2 : n // 2 + 1]])
    total = psd.sum()
    if total == 0:
        return 0.0
    return float(psd[~half_mask].sum() / total)


def runs_test_pvalue(x: np.ndarray) -> float:
    """Wald-Wolfowitz runs test around the median (two-sided p-value)."""
    x = np.asarray(x, dtype=np.float64)
    signs = x > np.median(x)
    n1 = int(signs.sum())
    n2 = len(x) - n1
    if n1 == 0 or n2 == 0:
        return 0.0
    runs = 1 + int(np.count_nonzero(signs[1:] != signs[:-1]))
    mean = 1.0 + 2.0 * n1 * n2 / (n1 + n2)
    var = (2.0 * n1 * n2 * (2.0 * n1 * n2 - n1 - n2)) / (
        (n1 + n2) ** 2 * (n1 + n2 - 1.0)
    )
    z = (runs - mean) / math.sqrt(var)
    return math.erfc(abs(z) / math.sqrt(2.0))
