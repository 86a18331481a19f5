import math

import numpy as np
import pytest

from vpsc.channel import ChannelConfig, awgn, delay
from vpsc.cipher import CipherConfig, encrypt_frames_block
from vpsc.errors import SyncFailure, UndefinedMetricError
from vpsc.frames import analyze_block
from vpsc.keystream import SyncConfig, counters_per_frame, key_frame_block
from vpsc.modem import ModemConfig, modulate_block
from vpsc.sync import (
    CaptureBuffer,
    compute_metric_traces,
    infer_epsilon,
    whiteness_block,
    whiteness_metric,
)

N = 256
MODEM = ModemConfig()
F_S = MODEM.sample_rate_hz


def _oracle_alpha(x, absolute):
    """Brute-force linear autocorrelation ratio, independent of the FFT path."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    r = np.correlate(x, x, "full")[n - 1 :]
    tail = np.abs(r[1:]) if absolute else r[1:]
    return tail.sum() / r[0]


# -- whiteness metric ----------------------------------------------------------

def test_whiteness_matches_bruteforce_oracle():
    rng = np.random.default_rng(50)
    x = rng.standard_normal(N)
    assert whiteness_metric(x) == pytest.approx(_oracle_alpha(x, True), rel=1e-9)
    assert whiteness_metric(x, absolute=False) == pytest.approx(
        _oracle_alpha(x, False), rel=1e-9
    )


def test_white_noise_alpha_is_small():
    # per-lag average stays under 0.15 essentially always
    hits = 0
    for seed in range(100):
        x = np.random.default_rng(seed).standard_normal(N)
        if whiteness_metric(x) / (N - 1) < 0.15:
            hits += 1
    assert hits >= 99


def test_tone_alpha_dominates_white_noise_calibration():
    # integer-period tone: closed-form |R[k]| = (N - k) at Nyquist
    tone = np.cos(np.pi * np.arange(N))
    alpha = whiteness_metric(tone)
    assert alpha == pytest.approx((N - 1) / 2.0, rel=1e-12)
    white_mean = np.mean(
        [whiteness_metric(np.random.default_rng(s).standard_normal(N)) for s in range(30)]
    )
    assert alpha >= 10.0 * white_mean


def test_midband_tone_alpha_equals_oracle():
    tone = np.cos(2 * np.pi * 8 * np.arange(N) / N)
    assert whiteness_metric(tone) == pytest.approx(_oracle_alpha(tone, True), rel=1e-9)


def test_constant_frame_alpha_closed_form():
    x = np.full(N, 3.7)
    # raw variant: sum (N-k)/N over k >= 1, i.e. (N-1) minus the triangular sum
    expected = (N - 1) - (N * (N - 1) / 2.0) / N
    assert whiteness_metric(x, absolute=False) == pytest.approx(expected, rel=1e-12)


def test_zero_frame_metric_undefined():
    with pytest.raises(UndefinedMetricError):
        whiteness_metric(np.zeros(N))


# -- time-delay inference -------------------------------------------------------

def _sync_cfg(seed=b"sync-tests"):
    u = counters_per_frame(N)
    return SyncConfig(sc=0, st=0.0, g=u / MODEM.symbol_seconds, u=u, secret_seed=seed)


def _cipher_cfg(snr_db=math.inf):
    # lambda sized to the channel noise as the benchmark does (10 sigma0)
    phi = 1.05 * (N / 2) * math.sqrt(18.0)
    sigma0 = 0.0
    if not math.isinf(snr_db):
        sigma0 = math.sqrt(5.0 / 10.0 ** (snr_db / 10.0)) * math.sqrt(N / 2.0)
    lam = max(10.0 * sigma0, 1e-3 * phi)
    return CipherConfig(n=N, phi=phi, lam=lam, mode="combined")


def _encrypted_stream(cfg, n_frames, seed=b"sync-tests", bit_seed=51):
    rng = np.random.default_rng(bit_seed)
    bits = rng.integers(0, 2, (n_frames, 4))
    frames = modulate_block(bits, MODEM)
    k_m, k_a = key_frame_block(_sync_cfg(seed), 0, n_frames, N, cfg.phi_effective)
    return encrypt_frames_block(frames, k_m, k_a, cfg).reshape(-1)


def _capture(cfg, rho, snr_db=math.inf, n_keys=8, seed=b"sync-tests", noise_seed=1):
    # noise measured against the transmitted (encrypted) stream: the harsh case
    buffer_len = (n_keys + 4) * N
    skip = 2 * N
    n_frames = (skip + buffer_len) // N + 3
    stream = delay(_encrypted_stream(cfg, n_frames, seed), rho)
    stream = awgn(stream, ChannelConfig(snr_db=snr_db, rng_seed=noise_seed))
    return CaptureBuffer(stream[skip : skip + buffer_len], skip / F_S, F_S)


def test_aligned_stream_infers_zero():
    cfg = _cipher_cfg()
    eps = infer_epsilon(_capture(cfg, 0), _sync_cfg(), cfg)
    assert abs(eps * F_S) <= 1.0


@pytest.mark.parametrize("rho", [17, 37])
def test_injected_delay_recovered_noiseless(rho):
    cfg = _cipher_cfg()
    eps = infer_epsilon(_capture(cfg, rho), _sync_cfg(), cfg)
    assert abs(eps * F_S - rho) <= 1.0


def test_injected_delay_recovered_at_10db_measured_on_ciphertext():
    cfg = _cipher_cfg(10.0)
    eps = infer_epsilon(_capture(cfg, 37, snr_db=10.0), _sync_cfg(), cfg, n_keys=8)
    assert abs(eps * F_S - 37) <= 2.0


def test_wrong_seed_raises_sync_failure():
    cfg = _cipher_cfg()
    buf = _capture(cfg, 0, snr_db=40.0)
    with pytest.raises(SyncFailure):
        infer_epsilon(buf, _sync_cfg(seed=b"not-the-seed"), cfg)


def test_short_capture_rejected():
    from vpsc.errors import ConfigError

    buf = CaptureBuffer(np.zeros(2 * N), 0.0, F_S)
    with pytest.raises(ConfigError):
        infer_epsilon(buf, _sync_cfg(), _cipher_cfg())


def _peak_to_background(trace):
    # detectability: peak against the detector's own threshold scale
    peak = int(np.argmax(trace))
    bg = np.concatenate([trace[: max(peak - N // 2, 0)], trace[peak + N // 2 :]])
    return trace[peak] / (bg.mean() + 4.0 * bg.std())


def test_averaging_beats_median_single_key():
    wins = 0
    trials = 12
    cfg10 = _cipher_cfg(10.0)
    for t in range(trials):
        buf = _capture(cfg10, 11, snr_db=10.0, noise_seed=100 + t)
        mt = compute_metric_traces(buf, _sync_cfg(), cfg10, n_keys=8)
        positions = [int(round(p)) for p in mt.expected_positions]
        lo = max(-p for p in positions)
        hi = min(mt.traces.shape[1] - p for p in positions)
        offsets = np.arange(lo, hi)
        stack = np.stack(
            [mt.traces[i, offsets + p] for i, p in enumerate(positions)]
        )
        averaged_ratio = _peak_to_background(stack.mean(axis=0))
        single_ratios = [_peak_to_background(stack[i]) for i in range(stack.shape[0])]
        if averaged_ratio >= np.median(single_ratios):
            wins += 1
    assert wins >= trials - 2


def test_self_consistency_after_correction():
    rho = 37
    cfg = _cipher_cfg()
    buf = _capture(cfg, rho)
    eps = infer_epsilon(buf, _sync_cfg(), cfg)
    shift = int(round(eps * F_S))

    sync_cfg = _sync_cfg()
    # decrypt the two middle frames at their corrected positions
    mid_frame = int((buf.t_rx_head + 0.5 * len(buf.samples) / F_S) // MODEM.symbol_seconds)
    rate = F_S * MODEM.symbol_seconds
    k_m, k_a = key_frame_block(sync_cfg, mid_frame, 2, N, cfg.phi_effective)
    start = int(mid_frame * rate - buf.t_rx_head * F_S) + shift
    windows = np.stack(
        [buf.samples[start : start + N], buf.samples[start + N : start + 2 * N]]
    )
    from vpsc.cipher import decrypt_frames_block

    decrypted = decrypt_frames_block(windows, k_m, k_a, cfg)
    alphas = whiteness_block(decrypted)
    white_mean = np.mean(
        [whiteness_metric(np.random.default_rng(s).standard_normal(N)) for s in range(30)]
    )
    assert np.all(alphas > 3.0 * white_mean)  # information recovered
