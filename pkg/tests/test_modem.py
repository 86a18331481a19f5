import itertools

import numpy as np
import pytest

from vpsc.channel import ChannelConfig, awgn
from vpsc.errors import ConfigError
from vpsc.modem import (
    ModemConfig,
    ber_16qam_awgn,
    bits_to_iq,
    demodulate,
    demodulate_block,
    modulate,
    modulate_block,
)


def test_exhaustive_loopback():
    cfg = ModemConfig()
    for bits in itertools.product((0, 1), repeat=4):
        frame = modulate(np.array(bits), cfg)
        assert demodulate(frame, cfg) == bits


def test_symbol_energy_tracks_constellation_energy():
    cfg = ModemConfig()
    for bits in itertools.product((0, 1), repeat=4):
        frame = modulate(np.array(bits), cfg)
        i, q = bits_to_iq(np.array(bits))
        energy = np.sum(frame.samples ** 2)
        predicted = cfg.amplitude ** 2 * (i ** 2 + q ** 2) * cfg.samples_per_symbol / 2
        assert abs(energy - predicted) < 0.01 * predicted


def test_nyquist_violation_rejected():
    with pytest.raises(ConfigError):
        ModemConfig(carrier_hz=40_000.0, sample_rate_hz=64_000.0)


def test_fractional_symbol_span_rejected():
    with pytest.raises(ConfigError):
        ModemConfig(symbol_seconds=1.0000003e-3)


def test_high_snr_ber_below_value():
    cfg = ModemConfig()
    rng = np.random.default_rng(30)
    bits = rng.integers(0, 2, (10_000, 4))
    tx = modulate_block(bits, cfg).reshape(-1)
    rx = awgn(tx, ChannelConfig(snr_db=30.0, rng_seed=3))
    hat = demodulate_block(rx.reshape(10_000, -1), cfg)
    assert np.mean(hat != bits) < 1e-4


def test_decision_boundary_tie_breaks_to_lower_index():
    cfg = ModemConfig()
    # an all-zero frame correlates to exactly (0, 0): ties on both axes
    bits = demodulate(np.zeros(cfg.samples_per_symbol), cfg)
    assert bits == (0, 1, 0, 1)  # level -1 on both axes, not +1


def test_closed_form_matches_monte_carlo_where_measurable():
    # the sanity anchor: within 1.5x of simulation across the waterfall
    cfg = ModemConfig()
    rng = np.random.default_rng(31)
    for snr in (-14.0, -11.0, -8.0):
        bits = rng.integers(0, 2, (6000, 4))
        tx = modulate_block(bits, cfg).reshape(-1)
        rx = awgn(tx, ChannelConfig(snr_db=snr, rng_seed=100 + int(abs(snr))))
        hat = demodulate_block(rx.reshape(6000, -1), cfg)
        sim = np.mean(hat != bits)
        theory = ber_16qam_awgn(snr, cfg)
        assert theory / 1.5 < sim < theory * 1.5, (snr, sim, theory)


def test_theory_monotone_and_zero_noiseless():
    cfg = ModemConfig()
    assert ber_16qam_awgn(float("inf"), cfg) == 0.0
    values = [ber_16qam_awgn(s, cfg) for s in (-20, -10, 0, 10)]
    assert all(a > b for a, b in zip(values, values[1:]))
